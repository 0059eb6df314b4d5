//! Real polynomials: evaluation and companion-matrix root finding.

use nalgebra::{Complex, DMatrix};

/// Evaluate `c[0] + c[1] x + ... + c[n] x^n` by Horner's rule.
pub fn eval(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &a| acc * x + a)
}

/// Value and derivative at `x`.
pub fn eval_with_derivative(c: &[f64], x: f64) -> (f64, f64) {
    let mut p = 0.0;
    let mut dp = 0.0;
    for &a in c.iter().rev() {
        dp = dp * x + p;
        p = p * x + a;
    }
    (p, dp)
}

/// `sum |c_k| |x|^k`, the natural scale for judging a residual at `x`.
pub fn abs_scale(c: &[f64], x: f64) -> f64 {
    let ax = x.abs();
    c.iter().rev().fold(0.0, |acc, &a| acc * ax + a.abs())
}

fn eval_complex(c: &[f64], z: Complex<f64>) -> (Complex<f64>, Complex<f64>) {
    let mut p = Complex::new(0.0, 0.0);
    let mut dp = Complex::new(0.0, 0.0);
    for &a in c.iter().rev() {
        dp = dp * z + p;
        p = p * z + a;
    }
    (p, dp)
}

/// All complex roots of a polynomial with ascending coefficients, computed
/// as companion-matrix eigenvalues and polished by a few Newton steps.
///
/// Leading zero coefficients are dropped first.
pub fn roots(c: &[f64]) -> Vec<Complex<f64>> {
    let mut deg = c.len().saturating_sub(1);
    while deg > 0 && c[deg] == 0.0 {
        deg -= 1;
    }
    if deg == 0 {
        return Vec::new();
    }
    let lead = c[deg];
    let mut comp = DMatrix::<f64>::zeros(deg, deg);
    for i in 1..deg {
        comp[(i, i - 1)] = 1.0;
    }
    for i in 0..deg {
        comp[(i, deg - 1)] = -c[i] / lead;
    }
    let coeffs = &c[..=deg];
    comp.complex_eigenvalues()
        .iter()
        .map(|&z0| polish(coeffs, z0))
        .collect()
}

fn polish(c: &[f64], mut z: Complex<f64>) -> Complex<f64> {
    for _ in 0..8 {
        let (p, dp) = eval_complex(c, z);
        if dp.norm() == 0.0 {
            break;
        }
        let step = p / dp;
        let next = z - step;
        // Accept only steps that do not increase the residual.
        if eval_complex(c, next).0.norm() > p.norm() {
            break;
        }
        z = next;
        if step.norm() <= 1e-16 * z.norm() {
            break;
        }
    }
    z
}

/// Newton iteration on a real root starting from `x0`.
pub fn newton_real(c: &[f64], x0: f64, iterations: usize) -> f64 {
    let mut x = x0;
    for _ in 0..iterations {
        let (p, dp) = eval_with_derivative(c, x);
        if dp == 0.0 {
            break;
        }
        let step = p / dp;
        x -= step;
        if step.abs() <= 1e-17 * x.abs() {
            break;
        }
    }
    x
}

/// Multiply two polynomials with ascending coefficients.
pub fn mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}
