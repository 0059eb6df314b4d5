//! Spectral decimation on the twice-iterated Sierpinski gasket.
//!
//! A level-(m+1) graph eigenvalue `x` maps to its level-m ancestor through
//! the rational function `lambda_m = num(x) / den(x)`, a quintic over a
//! linear polynomial. The five inverse branches are found as real roots of
//! `num(x) - lambda_m den(x)`. Eigenfunctions extend cell by cell with closed
//! forms whose common denominator is `gamma(r, x)`; its five roots
//! `b1..b5`, together with `6`, are never used as branch values. The values
//! `b3, b4, b5`, `9` and `b7 = (9 + 6r)/(1 + r)` are born at every level with
//! known multiplicities; `b1, b2` only at level 1. Born eigenspaces are
//! extracted numerically by shifted block inverse iteration.

use std::collections::HashMap;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graphs::{
    assemble_operator, build_sg_graph, normalize_sign, DiscreteOperator, GraphApprox, CLUSTER_TOL,
};
use crate::interval_decimation::normalize_weighted;
use crate::models::{ModelKind, SgParams};
use crate::poly;
use crate::spectrum::{
    weighted_gram_schmidt, BornClass, BoundaryCondition, EigenPair, Genealogy, Provenance, Seed,
    SgClasses, Spectrum,
};

/// Relative distance below which a branch root counts as a forbidden value,
/// provided the parent eigenvalue is also the forward image of that value.
pub const FORBIDDEN_TOL: f64 = 1e-9;

/// Relative distance to a root of gamma below which extension is refused.
///
/// Much tighter than [`FORBIDDEN_TOL`]: for large `r` genuine eigenvalues sit
/// within `1e-9` of `b4` and `b5`.
pub const EXTENSION_TOL: f64 = 1e-12;

/// Relative width of the eigenvalue window used to collect a born eigenspace.
pub const BORN_WINDOW: f64 = 1e-11;

/// The sixth forbidden value.
pub const B6: f64 = 6.0;

/// Ascending coefficients of the quadratic factor `9 - 3(2+3r)x + (1+r)x^2` of gamma.
fn gamma_quadratic(r: f64) -> [f64; 3] {
    [9.0, -3.0 * (2.0 + 3.0 * r), 1.0 + r]
}

/// Ascending coefficients of the cubic factor of gamma.
fn gamma_cubic(r: f64) -> [f64; 4] {
    let s = (1.0 + r) * (1.0 + r);
    [
        -405.0 - 702.0 * r - 243.0 * r * r,
        279.0 + 558.0 * r + 243.0 * r * r,
        -60.0 * s,
        4.0 * s,
    ]
}

/// Ascending coefficients of `gamma(r, x)`, degree 5 in `x`.
pub fn gamma_coeffs(r: f64) -> Vec<f64> {
    poly::mul(&gamma_quadratic(r), &gamma_cubic(r))
}

/// `gamma(r, lambda)`, the common denominator of the extension formulas.
pub fn gamma_eval(r: f64, lambda: f64) -> f64 {
    poly::eval(&gamma_quadratic(r), lambda) * poly::eval(&gamma_cubic(r), lambda)
}

/// Ascending coefficients of the numerator of the forward map.
pub fn forward_numerator(r: f64) -> Vec<f64> {
    let x = [0.0, -1.0];
    let t0 = poly::mul(&poly::mul(&x, &[9.0, -6.0, 1.0]), &[135.0, -48.0, 4.0]);
    let t3 = poly::mul(&x, &[1458.0, -1701.0, 603.0, -84.0, 4.0]);
    let t2 = poly::mul(&x, &[4941.0, -5022.0, 1701.0, -240.0, 12.0]);
    let t1 = poly::mul(&x, &[4536.0, -4455.0, 1557.0, -228.0, 12.0]);
    (0..6)
        .map(|k| {
            let at = |v: &Vec<f64>| v.get(k).copied().unwrap_or(0.0);
            at(&t0) + r * r * r * at(&t3) + r * r * at(&t2) + r * at(&t1)
        })
        .collect()
}

/// Ascending coefficients of the denominator `54 r (-6 + r(x-3) + x)`.
pub fn forward_denominator(r: f64) -> [f64; 2] {
    [54.0 * r * (-6.0 - 3.0 * r), 54.0 * r * (1.0 + r)]
}

/// The pole `(6 + 3r)/(1 + r)` of the forward map.
pub fn forward_pole(r: f64) -> f64 {
    (6.0 + 3.0 * r) / (1.0 + r)
}

/// `lambda_m` as a function of the level-(m+1) graph eigenvalue.
pub fn lambda_forward_sg(r: f64, lambda_next: f64) -> Result<f64> {
    let den = poly::eval(&forward_denominator(r), lambda_next);
    let scale = poly::abs_scale(&forward_denominator(r), lambda_next);
    if den.abs() <= 1e-12 * scale {
        return Err(Error::Domain(format!(
            "forward map has a pole at lambda = {lambda_next} for r = {r}"
        )));
    }
    Ok(poly::eval(&forward_numerator(r), lambda_next) / den)
}

/// Coefficients of `num(x) - lambda_m den(x)`, whose roots are the branches.
pub fn quintic_coeffs(r: f64, lambda_m: f64) -> Vec<f64> {
    let mut c = forward_numerator(r);
    let d = forward_denominator(r);
    c[0] -= lambda_m * d[0];
    c[1] -= lambda_m * d[1];
    c
}

/// Forbidden and born reference values `b1..b7` (`b6 = 6`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForbiddenSet {
    /// `b[i]` holds `b_{i+1}`.
    pub b: [f64; 7],
}

impl ForbiddenSet {
    pub fn get(&self, i: usize) -> f64 {
        self.b[i - 1]
    }

    /// The six values excluded from decimation branches.
    pub fn excluded(&self) -> [f64; 6] {
        [
            self.b[0], self.b[1], self.b[2], self.b[3], self.b[4], self.b[5],
        ]
    }

    fn nearest(&self, x: f64, tol: f64) -> Option<f64> {
        self.excluded()
            .into_iter()
            .find(|b| (x - b).abs() <= tol * b.abs())
    }
}

/// Roots of gamma labelled so that `b1 < b4 < b5 < b2 < b3` at `r = 1`:
/// `b1 < b2` are the roots of the quadratic factor, `b4 < b5 < b3` those of
/// the cubic factor.
pub fn forbidden_sg(r: f64) -> Result<ForbiddenSet> {
    SgParams::new(r)?;
    let disc = (9.0 * r * r + 8.0 * r).sqrt();
    let b2 = 3.0 * (2.0 + 3.0 * r + disc) / (2.0 * (1.0 + r));
    let b1 = 6.0 / (2.0 + 3.0 * r + disc);
    let cubic = gamma_cubic(r);
    let mut roots: Vec<f64> = poly::roots(&cubic)
        .into_iter()
        .map(|z| poly::newton_real(&cubic, z.re, 4))
        .collect();
    roots.sort_by(f64::total_cmp);
    if roots.len() != 3 {
        return Err(Error::Numerical(format!(
            "cubic factor of gamma has {} roots",
            roots.len()
        )));
    }
    Ok(ForbiddenSet {
        b: [
            b1,
            b2,
            roots[2],
            roots[0],
            roots[1],
            B6,
            (9.0 + 6.0 * r) / (1.0 + r),
        ],
    })
}

/// Classification of one root of the branch quintic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RootStatus {
    Admissible,
    /// Within tolerance of the given forbidden value.
    Forbidden(f64),
    /// Imaginary part above tolerance; the value holds the real part.
    Complex,
    /// Real root failing the residual test.
    Inaccurate,
}

/// One root of the branch quintic with its one-based branch index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchRoot {
    pub branch: u8,
    pub value: f64,
    pub status: RootStatus,
}

/// All five roots for one level-m eigenvalue, sorted ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct QuinticBranchSet {
    pub lambda_m: f64,
    pub roots: Vec<BranchRoot>,
}

impl QuinticBranchSet {
    pub fn admissible(&self) -> impl Iterator<Item = &BranchRoot> {
        self.roots
            .iter()
            .filter(|x| x.status == RootStatus::Admissible)
    }
}

/// Whether `lambda_m` is the forward image of `b`, so that `b` is a genuine
/// root of the branch quintic rather than a nearby eigenvalue.
fn is_forward_image(r: f64, b: f64, lambda_m: f64) -> bool {
    lambda_forward_sg(r, b).is_ok_and(|x| (x - lambda_m).abs() <= 1e-8 * lambda_m)
}

/// The inverse branches `Phi^1 <= ... <= Phi^5` of the forward map at `lambda_m`.
///
/// Roots are screened for realness (imaginary part at most `1e-9`), for the
/// residual of the cleared quintic (at most `1e-8` of its natural scale) and
/// for coincidence with one of `b1..b6` whose forward image is `lambda_m`. The residual is taken on the polynomial rather
/// than the rational map because at `r = 1` the pole `(6+3r)/(1+r)` is itself
/// a root of the quintic for every `lambda_m`.
pub fn phi_branches_sg(r: f64, lambda_m: f64) -> Result<QuinticBranchSet> {
    if !(lambda_m > 0.0) {
        return Err(Error::Domain(format!(
            "branches need lambda_m > 0, got {lambda_m}"
        )));
    }
    let forbidden = forbidden_sg(r)?;
    let c = quintic_coeffs(r, lambda_m);
    let mut raw: Vec<(f64, f64)> = poly::roots(&c).into_iter().map(|z| (z.re, z.im)).collect();
    raw.sort_by(|a, b| a.0.total_cmp(&b.0));
    let real_count = raw
        .iter()
        .filter(|z| z.1.abs() <= 1e-9 * z.0.abs().max(1.0))
        .count();
    if real_count < 5 {
        return Err(Error::Consistency(format!(
            "lambda_m = {lambda_m} (r = {r}) has {real_count} real branch roots, 5 required"
        )));
    }
    let roots = raw
        .into_iter()
        .enumerate()
        .map(|(i, (re, im))| {
            let status = if im.abs() > 1e-9 * re.abs().max(1.0) {
                RootStatus::Complex
            } else if let Some(b) = forbidden
                .nearest(re, FORBIDDEN_TOL)
                .filter(|&b| is_forward_image(r, b, lambda_m))
            {
                RootStatus::Forbidden(b)
            } else if poly::eval(&c, re).abs() > 1e-8 * poly::abs_scale(&c, re) {
                RootStatus::Inaccurate
            } else {
                RootStatus::Admissible
            };
            BranchRoot {
                branch: i as u8 + 1,
                value: re,
                status,
            }
        })
        .collect();
    Ok(QuinticBranchSet { lambda_m, roots })
}

/// Local lattice positions (at scale 4, corners `x0=(0,0)`, `x1=(4,0)`,
/// `x2=(0,4)`) of the twelve values returned by [`extend_cell_sg`]:
/// `w0 w1 w2 z0 z1 z2 y01 y02 y10 y12 y20 y21`.
///
/// `w_i` is the midpoint of the edge opposite `x_i`, `z_i` the interior point
/// nearest `x_i`, and `y_ij` the point on edge `x_i x_j` next to `x_i`.
pub const SG_LOCAL_POINTS: [[i64; 2]; 12] = [
    [2, 2],
    [0, 2],
    [2, 0],
    [1, 1],
    [2, 1],
    [1, 2],
    [1, 0],
    [0, 1],
    [3, 0],
    [3, 1],
    [0, 3],
    [1, 3],
];

/// `gamma * w_i` as a combination of `x_i` and `x_j + x_k`.
fn w_coeffs(r: f64, l: f64) -> (f64, f64) {
    let s = (1.0 + r) * (1.0 + r);
    let own = 81.0 * s * l - 729.0 * r * r - 1458.0 * r - 243.0;
    let l2 = l * l;
    let l3 = l2 * l;
    let others = 9.0 * (2.0 * l3 - 30.0 * l2 + 135.0 * l - 189.0)
        + 9.0 * r * r * (2.0 * l3 - 30.0 * l2 + 117.0 * l - 81.0)
        + 18.0 * r * (2.0 * l3 - 30.0 * l2 + 135.0 * l - 135.0);
    (own, others)
}

/// `gamma * z_i` as a combination of `x_i` and `x_j + x_k`.
fn z_coeffs(r: f64, l: f64) -> (f64, f64) {
    let s = (1.0 + r) * (1.0 + r);
    let l2 = l * l;
    let l3 = l2 * l;
    let own = 36.0 * s * l3 - 486.0 * s * l2 + (1539.0 * r * r + 3888.0 * r + 2025.0) * l
        - 729.0 * r * r
        - 2916.0 * r
        - 2673.0;
    let others = -27.0 * s * l2 + (324.0 * r * r + 567.0 * r + 243.0) * l
        - 729.0 * r * r
        - 1701.0 * r
        - 486.0;
    (own, others)
}

/// `gamma * y_ij` as a combination of `x_i`, `x_j` and the third corner `x_k`.
fn y_coeffs(r: f64, l: f64) -> (f64, f64, f64) {
    let s = (1.0 + r) * (1.0 + r);
    let l2 = l * l;
    let l3 = l2 * l;
    let l4 = l3 * l;
    let own = -12.0 * s * l4 + 216.0 * s * l3 - (1215.0 * r * r + 2700.0 * r + 1377.0) * l2
        + (2268.0 * r * r + 6318.0 * r + 3726.0) * l
        - 729.0 * r * r
        - 3402.0 * r
        - 3645.0;
    let near = -54.0 * r * (1.0 + r) * l2 + 567.0 * r * (1.0 + r) * l - 729.0 * r * r - 1701.0 * r;
    let far = 81.0 * r * r * l + 243.0 * r * l - 729.0 * r * r - 1215.0 * r;
    (own, near, far)
}

/// Values at the twelve new vertices of a cell with corner values `x`, in the
/// order of [`SG_LOCAL_POINTS`], for the level-(m+1) graph eigenvalue `lambda`.
pub fn extend_cell_sg(r: f64, lambda: f64, x: [f64; 3]) -> Result<[f64; 12]> {
    let forbidden = forbidden_sg(r)?;
    if let Some(b) = forbidden.nearest(lambda, EXTENSION_TOL) {
        return Err(Error::Extension {
            lambda,
            forbidden: b,
        });
    }
    let g = gamma_eval(r, lambda);
    let (wo, wt) = w_coeffs(r, lambda);
    let (zo, zt) = z_coeffs(r, lambda);
    let (yo, yn, yf) = y_coeffs(r, lambda);
    let w = |i: usize| (wo * x[i] + wt * (x[(i + 1) % 3] + x[(i + 2) % 3])) / g;
    let z = |i: usize| (zo * x[i] + zt * (x[(i + 1) % 3] + x[(i + 2) % 3])) / g;
    let y = |i: usize, j: usize| (yo * x[i] + yn * x[j] + yf * x[3 - i - j]) / g;
    Ok([
        w(0),
        w(1),
        w(2),
        z(0),
        z(1),
        z(2),
        y(0, 1),
        y(0, 2),
        y(1, 0),
        y(1, 2),
        y(2, 0),
        y(2, 1),
    ])
}

/// One born eigenvalue class with its multiplicity at a level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BornValue {
    pub class: BornClass,
    pub graph_eigenvalue: f64,
    pub multiplicity: usize,
}

/// Born values and their multiplicities at `level`.
///
/// Level 1: `b1, b2` once, `b3, b4, b5` twice, `9` three times, `b7` once.
/// Level `m+1 >= 2`: `(3^(2m)+3)/2` for each of `b3, b4, b5`,
/// `(3^(2m+2)-3)/2` for `9` and `9^m` for `b7`.
pub fn born_values_sg(r: f64, level: usize) -> Result<Vec<BornValue>> {
    if level == 0 {
        return Err(Error::Precondition("level must be at least 1".into()));
    }
    let f = forbidden_sg(r)?;
    let m = level as u32 - 1;
    let pow3 = |e: u32| 3usize.pow(e);
    let (cubic_mult, nine_mult, b7_mult) = if level == 1 {
        (2, 3, 1)
    } else {
        (
            (pow3(2 * m) + 3) / 2,
            (pow3(2 * m + 2) - 3) / 2,
            9usize.pow(m),
        )
    };
    let mut out = Vec::new();
    if level == 1 {
        out.push(BornValue {
            class: BornClass::B1,
            graph_eigenvalue: f.get(1),
            multiplicity: 1,
        });
        out.push(BornValue {
            class: BornClass::B2,
            graph_eigenvalue: f.get(2),
            multiplicity: 1,
        });
    }
    for (class, i) in [(BornClass::B3, 3), (BornClass::B4, 4), (BornClass::B5, 5)] {
        out.push(BornValue {
            class,
            graph_eigenvalue: f.get(i),
            multiplicity: cubic_mult,
        });
    }
    out.push(BornValue {
        class: BornClass::Nine,
        graph_eigenvalue: 9.0,
        multiplicity: nine_mult,
    });
    out.push(BornValue {
        class: BornClass::B7,
        graph_eigenvalue: f.get(7),
        multiplicity: b7_mult,
    });
    Ok(out)
}

/// A numerically extracted born eigenspace.
#[derive(Debug, Clone, PartialEq)]
pub struct BornEigenspace {
    pub classes: SgClasses,
    pub graph_eigenvalue: f64,
    /// Sum of the predicted multiplicities of the merged classes.
    pub expected: usize,
    /// Weighted-orthonormal basis as vertex functions.
    pub basis: Vec<Vec<f64>>,
}

impl BornEigenspace {
    pub fn multiplicity(&self) -> usize {
        self.basis.len()
    }
}

/// Eigenvectors of `op` whose eigenvalue lies within [`BORN_WINDOW`] of
/// `lambda` (operator scale), by shifted block inverse iteration and a
/// Rayleigh-Ritz projection. `block_hint` is the expected dimension.
///
/// Returns weighted-orthonormal vertex functions.
pub fn eigenspace_near(
    op: &DiscreteOperator,
    lambda: f64,
    block_hint: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    let n = op.dimension();
    let sigma = lambda * (1.0 + 0.1 * BORN_WINDOW);
    let shifted = &op.sym - DMatrix::identity(n, n) * sigma;
    let lu = shifted.lu();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut k = (block_hint + 3).min(n);
    loop {
        let mut x = DMatrix::from_fn(n, k, |_, _| rng.random_range(-1.0..1.0));
        for _ in 0..3 {
            x = lu
                .solve(&x)
                .ok_or_else(|| Error::Numerical(format!("shift {sigma} is exactly singular")))?;
            x = x.qr().q();
        }
        let h = x.transpose() * &op.sym * &x;
        let h = (&h + h.transpose()) * 0.5;
        let eig = h.symmetric_eigen();
        let hits: Vec<usize> = (0..eig.eigenvalues.len())
            .filter(|&i| (eig.eigenvalues[i] - lambda).abs() <= BORN_WINDOW * lambda.abs())
            .collect();
        if hits.len() == k && k < n {
            k = (2 * k).min(n);
            continue;
        }
        let y = &x * &eig.eigenvectors;
        return Ok(hits
            .into_iter()
            .map(|i| {
                let active: Vec<f64> = (0..n)
                    .map(|row| y[(row, i)] / op.mass[row].sqrt())
                    .collect();
                let mut f = op.embed(&active);
                normalize_sign(&mut f);
                f
            })
            .collect());
    }
}

/// Born eigenspaces at `level`, merging classes whose values coincide
/// within `1e-9` relative.
pub fn born_eigenspaces_sg(r: f64, level: usize) -> Result<Vec<BornEigenspace>> {
    let graph = build_sg_graph(&SgParams::new(r)?, level)?;
    let op = assemble_operator(&graph, BoundaryCondition::Dirichlet);
    born_eigenspaces_on(r, level, &op, &graph.pointmass, &[], &[], &[]).map(|(s, _)| s)
}

/// A decimation child whose value is too close to a root of gamma for the
/// closed-form extension; it is recovered from the born window instead.
struct Deferred<'a> {
    lambda: f64,
    parent: &'a [f64],
}

/// Born eigenspaces on `op`.
///
/// `decimated` lists the level's extended eigenpairs as
/// `(graph eigenvalue, function)`; any falling inside a born window are
/// projected out, so a decimated value numerically indistinct from a born one
/// is not counted twice. Each deferred child is resolved as the least-norm
/// combination of the window's eigenvectors whose restriction to the coarse
/// vertices (`coarse_to_fine`) reproduces its parent; born functions vanish
/// there. Returns the born spaces and the resolved deferred functions, in
/// input order.
fn born_eigenspaces_on(
    r: f64,
    level: usize,
    op: &DiscreteOperator,
    pointmass: &[f64],
    decimated: &[(f64, &[f64])],
    deferred: &[Deferred<'_>],
    coarse_to_fine: &[usize],
) -> Result<(Vec<BornEigenspace>, Vec<Vec<f64>>)> {
    let mut values = born_values_sg(r, level)?;
    values.sort_by(|a, b| a.graph_eigenvalue.total_cmp(&b.graph_eigenvalue));
    let mut groups: Vec<(SgClasses, f64, usize)> = Vec::new();
    for v in values {
        match groups.last_mut() {
            Some((classes, value, mult))
                if (v.graph_eigenvalue - *value).abs() <= 1e-9 * value.abs() =>
            {
                classes.insert(v.class);
                *mult += v.multiplicity;
            }
            _ => groups.push((
                SgClasses::single(v.class),
                v.graph_eigenvalue,
                v.multiplicity,
            )),
        }
    }
    let in_window = |x: f64, value: f64| (x - value).abs() <= BORN_WINDOW * value;
    if let Some(d) = deferred
        .iter()
        .find(|d| !groups.iter().any(|g| in_window(d.lambda, g.1)))
    {
        return Err(Error::Extension {
            lambda: d.lambda,
            forbidden: nearest_gamma_root(r, d.lambda)?,
        });
    }
    let results = groups
        .into_par_iter()
        .enumerate()
        .map(|(i, (classes, value, expected))| {
            let inside: Vec<Vec<f64>> = decimated
                .iter()
                .filter(|(x, _)| in_window(*x, value))
                .map(|(_, f)| f.to_vec())
                .collect();
            let pending: Vec<usize> = (0..deferred.len())
                .filter(|&j| in_window(deferred[j].lambda, value))
                .collect();
            let want = expected + inside.len() + pending.len();
            let window = eigenspace_near(op, value * op.scale, want, 0x5eed + i as u64)?;
            if window.len() != want {
                return Err(Error::Consistency(format!(
                    "eigenspace at lambda = {value} (level {level}, r = {r}) has dimension {}, \
                     expected {expected} born + {} decimated",
                    window.len(),
                    inside.len() + pending.len()
                )));
            }
            let mut resolved = Vec::with_capacity(pending.len());
            for &j in &pending {
                let mut f = recover_from_window(&window, deferred[j].parent, coarse_to_fine)?;
                normalize_weighted(&mut f, pointmass);
                resolved.push((j, f));
            }
            let basis = if inside.is_empty() && resolved.is_empty() {
                window
            } else {
                let known = inside
                    .into_iter()
                    .chain(resolved.iter().map(|(_, f)| f.clone()));
                let fixed = weighted_gram_schmidt(&[], known.collect(), pointmass, 1e-6);
                weighted_gram_schmidt(&fixed, window, pointmass, 1e-6)
                    .into_iter()
                    .map(|mut f| {
                        normalize_sign(&mut f);
                        f
                    })
                    .collect()
            };
            if basis.len() != expected {
                return Err(Error::Consistency(format!(
                    "born eigenspace {classes} at lambda = {value} (level {level}, r = {r}) \
                     has dimension {}, expected {expected}",
                    basis.len()
                )));
            }
            Ok((
                BornEigenspace {
                    classes,
                    graph_eigenvalue: value,
                    expected,
                    basis,
                },
                resolved,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut spaces = Vec::with_capacity(results.len());
    let mut recovered: Vec<Option<Vec<f64>>> = vec![None; deferred.len()];
    for (space, resolved) in results {
        spaces.push(space);
        for (j, f) in resolved {
            recovered[j] = Some(f);
        }
    }
    Ok((
        spaces,
        recovered
            .into_iter()
            .map(|f| f.unwrap_or_default())
            .collect(),
    ))
}

fn nearest_gamma_root(r: f64, x: f64) -> Result<f64> {
    let f = forbidden_sg(r)?;
    Ok(f.excluded()
        .into_iter()
        .min_by(|a, b| (a - x).abs().total_cmp(&(b - x).abs()))
        .unwrap_or(f64::NAN))
}

/// Least-norm combination of `window` whose values at the coarse vertices
/// equal `parent`.
fn recover_from_window(
    window: &[Vec<f64>],
    parent: &[f64],
    coarse_to_fine: &[usize],
) -> Result<Vec<f64>> {
    let a = DMatrix::from_fn(coarse_to_fine.len(), window.len(), |v, j| {
        window[j][coarse_to_fine[v]]
    });
    let b = nalgebra::DVector::from_column_slice(parent);
    let svd = a.clone().svd(true, true);
    let tol = 1e-10 * svd.singular_values.max();
    let c = svd
        .solve(&b, tol)
        .map_err(|e| Error::Numerical(format!("window least squares failed: {e}")))?;
    let misfit = (&a * &c - &b).norm();
    // Deferred children arise for extreme r, where the graph spectrum spans
    // ten decades and window vectors carry relative errors near 1e-5.
    if misfit > 1e-4 * b.norm() {
        return Err(Error::Consistency(format!(
            "decimated function is not in the born window (misfit {misfit:.3e})"
        )));
    }
    let n = window[0].len();
    Ok((0..n)
        .map(|x| window.iter().zip(c.iter()).map(|(w, cj)| w[x] * cj).sum())
        .collect())
}

/// Counts behind one decimation step `m -> m+1`.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelCount {
    pub level: usize,
    /// Level-m eigenvalues (with multiplicity) other than 9.
    pub generic_parents: usize,
    /// Level-m eigenvalues equal to 9.
    pub nine_parents: usize,
    pub decimated: usize,
    /// `(classes, dimension)` of each born eigenspace at level m+1.
    pub born: Vec<(SgClasses, usize)>,
    pub total: usize,
}

/// Predicted total from the counting identity at `m -> m+1`.
pub fn counting_identity_sg(m: usize) -> (usize, usize) {
    let p = |e: usize| 3usize.pow(e as u32);
    let all = (p(2 * m + 1) - 3) / 2;
    let nines = (p(2 * m) - 3) / 2;
    let born = 3 * (p(2 * m) + 3) / 2 + (p(2 * m + 2) - 3) / 2 + 9usize.pow(m as u32);
    (5 * (all - nines) + 3 * nines + born, (p(2 * m + 3) - 3) / 2)
}

struct Node {
    lambda: f64,
    f: Vec<f64>,
    genealogy: Genealogy,
}

fn extend_function(
    r: f64,
    lambda: f64,
    f: &[f64],
    coarse: &GraphApprox,
    fine_index: &HashMap<[i64; 2], usize>,
    fine_len: usize,
) -> Result<Vec<f64>> {
    let mut g = vec![0.0; fine_len];
    for (v, &[a, b]) in coarse.lattice.iter().enumerate() {
        g[fine_index[&[4 * a, 4 * b]]] = f[v];
    }
    for cell in &coarse.cells {
        let [a, b] = coarse.lattice[cell.vertices[0]];
        let x = [
            f[cell.vertices[0]],
            f[cell.vertices[1]],
            f[cell.vertices[2]],
        ];
        let values = extend_cell_sg(r, lambda, x)?;
        for (pt, val) in SG_LOCAL_POINTS.iter().zip(values) {
            g[fine_index[&[4 * a + pt[0], 4 * b + pt[1]]]] = val;
        }
    }
    Ok(g)
}

/// Complete Dirichlet spectrum of the level-`level` gasket graph by decimation,
/// with the per-level bookkeeping.
pub fn full_spectrum_sg_with_report(r: f64, level: usize) -> Result<(Spectrum, Vec<LevelCount>)> {
    let params = SgParams::new(r)?;
    if level == 0 {
        return Err(Error::Precondition("level must be at least 1".into()));
    }
    let mut graph = build_sg_graph(&params, 1)?;
    let op = assemble_operator(&graph, BoundaryCondition::Dirichlet);
    let mut nodes: Vec<Node> = born_eigenspaces_on(r, 1, &op, &graph.pointmass, &[], &[], &[])?
        .0
        .into_iter()
        .flat_map(|space| {
            let seed = Seed::Sg(space.classes);
            let value = space.graph_eigenvalue;
            space.basis.into_iter().map(move |f| Node {
                lambda: value,
                f,
                genealogy: Genealogy::born(1, seed),
            })
        })
        .collect();
    let mut report = Vec::new();
    for k in 1..level {
        let fine = build_sg_graph(&params, k + 1)?;
        let fine_index = fine.lattice_index();
        let fine_len = fine.vertex_count();
        let nine_parents = nodes
            .iter()
            .filter(|n| (n.lambda - 9.0).abs() <= 1e-9 * 9.0)
            .count();
        let outcomes: Vec<(Node, bool)> = nodes
            .par_iter()
            .map(|node| -> Result<Vec<(Node, bool)>> {
                let set = phi_branches_sg(r, node.lambda)?;
                set.admissible()
                    .map(|root| {
                        let genealogy = node.genealogy.child(root.branch);
                        match extend_function(r, root.value, &node.f, &graph, &fine_index, fine_len)
                        {
                            Ok(mut f) => {
                                normalize_weighted(&mut f, &fine.pointmass);
                                Ok((
                                    Node {
                                        lambda: root.value,
                                        f,
                                        genealogy,
                                    },
                                    false,
                                ))
                            }
                            // Keep the parent function; resolved against the born window below.
                            Err(Error::Extension { .. }) => Ok((
                                Node {
                                    lambda: root.value,
                                    f: node.f.clone(),
                                    genealogy,
                                },
                                true,
                            )),
                            Err(e) => Err(e),
                        }
                    })
                    .collect()
            })
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .flatten()
            .collect();
        let (pending, mut children): (Vec<_>, Vec<_>) =
            outcomes.into_iter().partition(|(_, deferred)| *deferred);
        let coarse_to_fine: Vec<usize> = graph
            .lattice
            .iter()
            .map(|&[a, b]| fine_index[&[4 * a, 4 * b]])
            .collect();
        let op = assemble_operator(&fine, BoundaryCondition::Dirichlet);
        let decimated_pairs: Vec<(f64, &[f64])> = children
            .iter()
            .map(|(c, _)| (c.lambda, c.f.as_slice()))
            .collect();
        let deferred: Vec<Deferred<'_>> = pending
            .iter()
            .map(|(c, _)| Deferred {
                lambda: c.lambda,
                parent: &c.f,
            })
            .collect();
        let (born, recovered) = born_eigenspaces_on(
            r,
            k + 1,
            &op,
            &fine.pointmass,
            &decimated_pairs,
            &deferred,
            &coarse_to_fine,
        )?;
        drop(deferred);
        for ((mut node, _), f) in pending.into_iter().zip(recovered) {
            node.f = f;
            children.push((node, false));
        }
        let decimated = children.len();
        let generic_parents = nodes.len() - nine_parents;
        nodes = children.into_iter().map(|(n, _)| n).collect();
        let mut born_counts = Vec::new();
        for space in born {
            born_counts.push((space.classes, space.basis.len()));
            let seed = Seed::Sg(space.classes);
            for f in space.basis {
                nodes.push(Node {
                    lambda: space.graph_eigenvalue,
                    f,
                    genealogy: Genealogy::born(k + 1, seed),
                });
            }
        }
        report.push(LevelCount {
            level: k + 1,
            generic_parents,
            nine_parents,
            decimated,
            born: born_counts,
            total: nodes.len(),
        });
        let expected = (3usize.pow(2 * k as u32 + 3) - 3) / 2;
        if nodes.len() != expected {
            return Err(Error::Consistency(format!(
                "level {}: {decimated} decimated + {} born = {}, expected {expected} \
                 ({generic_parents} generic and {nine_parents} nine parents)",
                k + 1,
                nodes.len() - decimated,
                nodes.len()
            )));
        }
        graph = fine;
    }
    let pairs = nodes
        .into_iter()
        .map(|node| {
            let provenance = if node.genealogy.branches.is_empty() {
                Provenance::Born
            } else {
                Provenance::Decimated
            };
            EigenPair {
                graph_eigenvalue: node.lambda,
                eigenvalue: node.lambda * graph.scale,
                eigenfunction: node.f,
                genealogy: Some(node.genealogy),
                multiplicity: 1,
                provenance,
            }
        })
        .collect();
    let mut spectrum = Spectrum {
        model: ModelKind::Sg,
        level,
        bc: BoundaryCondition::Dirichlet,
        scale: graph.scale,
        pairs,
    };
    spectrum.sort_and_cluster(CLUSTER_TOL);
    Ok((spectrum, report))
}

/// Complete Dirichlet spectrum of the level-`level` gasket graph by decimation.
pub fn full_spectrum_sg(r: f64, level: usize) -> Result<Spectrum> {
    full_spectrum_sg_with_report(r, level).map(|(s, _)| s)
}

/// Renormalized Dirichlet eigenvalues of the level-`level` graph, sorted and
/// repeated by multiplicity, from the branch maps and the born
/// multiplicities alone (no eigenfunctions).
pub fn sg_eigenvalues(r: f64, level: usize) -> Result<Vec<f64>> {
    let params = SgParams::new(r)?;
    let mut values: Vec<f64> = born_values_sg(r, 1)?
        .iter()
        .flat_map(|b| std::iter::repeat_n(b.graph_eigenvalue, b.multiplicity))
        .collect();
    for k in 1..level {
        let mut next = Vec::with_capacity(5 * values.len());
        for &x in &values {
            next.extend(phi_branches_sg(r, x)?.admissible().map(|b| b.value));
        }
        for b in born_values_sg(r, k + 1)? {
            next.extend(std::iter::repeat_n(b.graph_eigenvalue, b.multiplicity));
        }
        let expected = (3usize.pow(2 * k as u32 + 3) - 3) / 2;
        if next.len() != expected {
            return Err(Error::Consistency(format!(
                "level {}: {} eigenvalues, expected {expected}",
                k + 1,
                next.len()
            )));
        }
        values = next;
    }
    let scale = params.renorm_factor().powi(level as i32);
    values.sort_by(f64::total_cmp);
    Ok(values.into_iter().map(|x| x * scale).collect())
}

/// Renormalized iterates of `b1` continued along the smallest branch.
#[derive(Debug, Clone, PartialEq)]
pub struct SgLimitEstimate {
    pub value: f64,
    pub relative_change: f64,
    pub converged: bool,
    pub iterates: Vec<(usize, f64)>,
}

/// `L(r)^(-depth) lambda_depth` for the ground-state genealogy (`b1` born at
/// level 1, then `Phi^1` at every level).
pub fn renormalized_limit_sg(r: f64, depth: usize) -> Result<SgLimitEstimate> {
    continue_limit_sg(r, 1, forbidden_sg(r)?.get(1), depth)
}

/// Continue the level-`level` graph eigenvalue `lambda` along the smallest
/// admissible branch down to level `depth` and renormalize.
pub fn continue_limit_sg(
    r: f64,
    level: usize,
    lambda: f64,
    depth: usize,
) -> Result<SgLimitEstimate> {
    let params = SgParams::new(r)?;
    if level == 0 || depth <= level {
        return Err(Error::Precondition(format!(
            "depth {depth} must exceed the starting level {level} (which must be positive)"
        )));
    }
    if !(lambda > 0.0) {
        return Err(Error::Domain(format!(
            "limit continuation needs a positive eigenvalue, got {lambda}"
        )));
    }
    let factor = params.renorm_factor();
    let mut lambda = lambda;
    // factor^level alone may overflow at extreme r; accumulate instead.
    let mut value = lambda;
    for _ in 0..level {
        value *= factor;
    }
    let mut iterates = vec![(level, value)];
    let mut relative_change = f64::INFINITY;
    for next_level in level + 1..=depth {
        let next = if lambda < 1e-3 {
            // Near zero the smallest branch is close to L(r) lambda; polish there.
            poly::newton_real(&quintic_coeffs(r, lambda), params.l() * lambda, 50)
        } else {
            phi_branches_sg(r, lambda)?
                .admissible()
                .next()
                .ok_or_else(|| Error::Consistency("no admissible branch".into()))?
                .value
        };
        let next_value = value * factor * (next / lambda);
        relative_change = ((next_value - value) / next_value).abs();
        lambda = next;
        value = next_value;
        iterates.push((next_level, value));
    }
    Ok(SgLimitEstimate {
        value,
        relative_change,
        converged: relative_change <= 1e-10,
        iterates,
    })
}

/// Level-1 golden eigenvectors for `b1`, `b2`, the 9-family and `b7`, as
/// vertex functions on the level-1 graph. Other classes return `None`.
pub fn golden_level_one(r: f64, class: BornClass, graph: &GraphApprox) -> Option<Vec<f64>> {
    let idx = graph.lattice_index();
    let mut f = vec![0.0; graph.vertex_count()];
    let mut set = |pts: &[[i64; 2]], v: f64| {
        for p in pts {
            f[idx[p]] = v;
        }
    };
    let edge_mid = [[2, 0], [0, 2], [2, 2]];
    let interior = [[1, 1], [2, 1], [1, 2]];
    let near_corner = [[1, 0], [3, 0], [0, 1], [0, 3], [3, 1], [1, 3]];
    let root = (r * (8.0 + 9.0 * r)).sqrt();
    match class {
        BornClass::B1 | BornClass::B2 => {
            let a = if class == BornClass::B1 {
                4.0 * r / (r + root)
            } else {
                4.0 * r / (r - root)
            };
            set(&edge_mid, 1.0);
            set(&interior, 1.0);
            set(&near_corner, a);
        }
        BornClass::B7 => {
            set(&[[1, 3], [0, 1], [3, 0]], 1.0);
            set(&[[3, 1], [0, 3], [1, 0]], -1.0);
        }
        BornClass::Nine => {
            set(&[[2, 0]], 2.0);
            set(&[[3, 1], [0, 1]], 1.0);
            set(&[[1, 1], [2, 1], [1, 0], [3, 0]], -1.0);
        }
        _ => return None,
    }
    Some(f)
}

/// The `b7` pattern copied into one level-(m-1) cell of a level-m graph,
/// zero elsewhere.
pub fn miniaturized_b7(graph: &GraphApprox, coarse_cell_origin: [i64; 2]) -> Vec<f64> {
    let idx = graph.lattice_index();
    let mut f = vec![0.0; graph.vertex_count()];
    let [a, b] = coarse_cell_origin;
    for (pts, v) in [
        ([[1, 3], [0, 1], [3, 0]], 1.0),
        ([[3, 1], [0, 3], [1, 0]], -1.0),
    ] {
        for p in pts {
            f[idx[&[4 * a + p[0], 4 * b + p[1]]]] = v;
        }
    }
    f
}
