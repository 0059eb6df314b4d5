//! Functions of the Laplacian through its eigen-expansion: heat and wave
//! propagation on either model.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graphs::CLUSTER_TOL;
use crate::spectrum::{
    cluster_ranges, weighted_dot, weighted_gram_schmidt, BoundaryCondition, Spectrum,
};

/// Orthonormal eigenbasis in `<a, b> = sum a(x) b(x) m_x`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralBasis {
    pub bc: BoundaryCondition,
    /// Renormalized eigenvalues, ascending.
    pub eigenvalues: Vec<f64>,
    /// Functions on every vertex.
    pub functions: Vec<Vec<f64>>,
    pub mass: Vec<f64>,
    /// `max |G - I|` for the Gram matrix `G` of the basis.
    pub gram_deviation: f64,
}

impl SpectralBasis {
    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }

    /// Eigenvalues at or below this are treated as the zero mode.
    pub fn zero_threshold(&self) -> f64 {
        1e-12 * self.eigenvalues.iter().fold(1.0f64, |m, x| m.max(x.abs()))
    }

    /// `<u, u_j>` for every basis function.
    pub fn coefficients(&self, u: &[f64]) -> Vec<f64> {
        self.functions
            .iter()
            .map(|f| weighted_dot(u, f, &self.mass))
            .collect()
    }
}

/// Maximum deviation of the Gram matrix of `functions` from the identity.
pub fn gram_deviation(functions: &[Vec<f64>], mass: &[f64]) -> f64 {
    if functions.is_empty() {
        return 0.0;
    }
    let root: Vec<f64> = mass.iter().map(|m| m.sqrt()).collect();
    let u = DMatrix::from_fn(mass.len(), functions.len(), |x, j| {
        functions[j][x] * root[x]
    });
    let g = u.transpose() * &u;
    let mut dev = 0.0f64;
    for i in 0..g.nrows() {
        for j in 0..g.ncols() {
            let want = if i == j { 1.0 } else { 0.0 };
            dev = dev.max((g[(i, j)] - want).abs());
        }
    }
    dev
}

/// Orthonormalize the eigenfunctions of `spectrum` against the pointmasses.
///
/// Within each eigenvalue cluster (relative width `1e-7`) the functions go
/// through modified Gram-Schmidt; across clusters orthogonality is inherited
/// and checked through the full Gram matrix, which must be the identity
/// within `1e-8`. Neumann eigenvalues at round-off level (below
/// [`SpectralBasis::zero_threshold`]) are set to exactly zero, so the
/// constant mode neither decays nor grows.
pub fn orthonormal_basis(spectrum: &Spectrum, mass: &[f64]) -> Result<SpectralBasis> {
    if spectrum
        .pairs
        .iter()
        .any(|p| p.eigenfunction.len() != mass.len())
    {
        return Err(Error::Precondition(
            "eigenfunctions and pointmasses differ in length".into(),
        ));
    }
    let values = spectrum.eigenvalues();
    let mut eigenvalues = Vec::with_capacity(values.len());
    let mut functions = Vec::with_capacity(values.len());
    for range in cluster_ranges(&values, CLUSTER_TOL) {
        let block: Vec<Vec<f64>> = spectrum.pairs[range.clone()]
            .iter()
            .map(|p| p.eigenfunction.clone())
            .collect();
        let ortho = weighted_gram_schmidt(&[], block, mass, 1e-8);
        if ortho.len() != range.len() {
            return Err(Error::Numerical(format!(
                "eigenfunctions at lambda = {} are rank deficient ({} of {})",
                values[range.start],
                ortho.len(),
                range.len()
            )));
        }
        eigenvalues.extend(&values[range]);
        functions.extend(ortho);
    }
    let dev = gram_deviation(&functions, mass);
    if dev > 1e-8 {
        return Err(Error::Numerical(format!(
            "basis Gram matrix deviates from identity by {dev:.3e}"
        )));
    }
    let mut basis = SpectralBasis {
        bc: spectrum.bc,
        eigenvalues,
        functions,
        mass: mass.to_vec(),
        gram_deviation: dev,
    };
    if basis.bc == BoundaryCondition::Neumann {
        let zero = basis.zero_threshold();
        basis
            .eigenvalues
            .iter_mut()
            .filter(|l| l.abs() <= zero)
            .for_each(|l| *l = 0.0);
    }
    Ok(basis)
}

/// `sum_j g(lambda_j) <u, u_j> u_j`, summed in basis order.
pub fn spectral_operator(g: impl Fn(f64) -> f64, basis: &SpectralBasis, u: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; u.len()];
    for (lambda, f) in basis.eigenvalues.iter().zip(&basis.functions) {
        let c = g(*lambda) * weighted_dot(u, f, &basis.mass);
        if c != 0.0 {
            out.iter_mut().zip(f).for_each(|(o, x)| *o += c * x);
        }
    }
    out
}

/// Heat kernel weight `exp(-lambda t)`.
pub fn heat_multiplier(lambda: f64, t: f64) -> f64 {
    (-lambda * t).exp()
}

/// Solution of `u_t = Delta u`, `u(., 0) = f`, at time `t >= 0`.
pub fn heat_solution(basis: &SpectralBasis, f: &[f64], t: f64) -> Result<Vec<f64>> {
    if !(t >= 0.0) {
        return Err(Error::Precondition(format!(
            "heat time must be non-negative, got {t}"
        )));
    }
    Ok(spectral_operator(|l| heat_multiplier(l, t), basis, f))
}

/// Wave weight `sin(t sqrt(lambda)) / sqrt(lambda)`, equal to `t` for the zero mode.
pub fn wave_multiplier(lambda: f64, t: f64, zero: f64) -> f64 {
    if lambda <= zero {
        t
    } else {
        let s = lambda.sqrt();
        (t * s).sin() / s
    }
}

/// Solution of `u_tt = Delta u` with `u(., 0) = 0` and `u_t(., 0) = f`.
///
/// Any real `t` is accepted; the solution is odd in `t`.
pub fn wave_solution(basis: &SpectralBasis, f: &[f64], t: f64) -> Vec<f64> {
    let zero = basis.zero_threshold();
    spectral_operator(|l| wave_multiplier(l, t, zero), basis, f)
}

/// Which PDE a time series samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Evolution {
    Heat,
    Wave,
}

/// Solutions at several times, evaluated in parallel; each entry is
/// computed independently in fixed summation order.
pub fn time_series(
    basis: &SpectralBasis,
    f: &[f64],
    times: &[f64],
    kind: Evolution,
) -> Result<Vec<Vec<f64>>> {
    times
        .par_iter()
        .map(|&t| match kind {
            Evolution::Heat => heat_solution(basis, f, t),
            Evolution::Wave => Ok(wave_solution(basis, f, t)),
        })
        .collect()
}

/// Normalization of a discrete point source.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DeltaConvention {
    /// `1 / m_x` at the source, so the source has unit integral.
    #[default]
    UnitMass,
    /// Value `1` at the source.
    UnitValue,
}

/// Point source at vertex `x0`.
pub fn delta(mass: &[f64], x0: usize, convention: DeltaConvention) -> Result<Vec<f64>> {
    if x0 >= mass.len() {
        return Err(Error::Precondition(format!("vertex {x0} is out of range")));
    }
    let mut f = vec![0.0; mass.len()];
    f[x0] = match convention {
        DeltaConvention::UnitMass => 1.0 / mass[x0],
        DeltaConvention::UnitValue => 1.0,
    };
    Ok(f)
}

/// Index of the vertex closest to `point` in planar coordinates.
pub fn nearest_vertex(coords: &[[f64; 2]], point: [f64; 2]) -> usize {
    let d = |c: &[f64; 2]| (c[0] - point[0]).powi(2) + (c[1] - point[1]).powi(2);
    (0..coords.len())
        .min_by(|&a, &b| d(&coords[a]).total_cmp(&d(&coords[b])))
        .unwrap_or(0)
}

/// `sum f(x) m_x`.
pub fn integral(f: &[f64], mass: &[f64]) -> f64 {
    f.iter().zip(mass).map(|(a, m)| a * m).sum()
}
