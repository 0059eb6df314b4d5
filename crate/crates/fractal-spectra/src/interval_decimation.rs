//! Spectral decimation on the interval.
//!
//! A level-(m+1) graph eigenvalue `x` and its level-m ancestor are related by
//! the quartic `lambda_m = (4 - x)(x - 2)^2 x / (4pq)`; its four inverse
//! branches `Phi_1 < Phi_2 < Phi_3 < Phi_4` generate the decimated part of the
//! spectrum. The values `2(1 - sqrt q)`, `2` and `2(1 + sqrt q)` make the
//! eigenfunction extension singular and are instead born at every level from
//! three level-1 seeds copied into the four sub-intervals.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graphs::{build_interval_graph_with, normalize_sign, GraphApprox};
use crate::models::{IntervalParams, ModelKind};
use crate::spectrum::{BoundaryCondition, EigenPair, Genealogy, Provenance, Seed, Spectrum};

/// Relative distance below which a value counts as forbidden.
pub const FORBIDDEN_TOL: f64 = 1e-9;

fn check_p(p: f64) -> Result<()> {
    if p.is_finite() && p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name: "p",
            value: p,
            reason: "must lie strictly between 0 and 1".into(),
        })
    }
}

/// The four inverse branches of the quartic at `lambda`, ascending.
///
/// With `t = pq lambda` and `s = sqrt(1 - t)`, the branches are
/// `2 -+ sqrt(2 +- 2s)`. Both differences `2 - sqrt(2 + 2s)` and `2 - 2s` are
/// rewritten without cancellation, so tiny `lambda` keep full relative precision.
pub fn phi_maps(p: f64, lambda: f64) -> Result<[f64; 4]> {
    check_p(p)?;
    if !(-1e-12..=4.0 + 1e-12).contains(&lambda) {
        return Err(Error::Domain(format!(
            "phi maps need lambda in [0, 4], got {lambda}"
        )));
    }
    let lambda = lambda.clamp(0.0, 4.0);
    let t = p * (1.0 - p) * lambda;
    let radicand = 1.0 - t;
    if radicand < -1e-12 {
        return Err(Error::Domain(format!(
            "inner radicand {radicand} is negative"
        )));
    }
    let s = radicand.max(0.0).sqrt();
    let one_minus_s = t / (1.0 + s);
    let outer_plus = (2.0 + 2.0 * s).sqrt();
    let outer_minus = (2.0 * one_minus_s).sqrt();
    Ok([
        2.0 * one_minus_s / (2.0 + outer_plus),
        2.0 - outer_minus,
        2.0 + outer_minus,
        2.0 + outer_plus,
    ])
}

/// A single branch `Phi_i`, `i` in `1..=4`.
pub fn phi(p: f64, lambda: f64, branch: u8) -> Result<f64> {
    match branch {
        1..=4 => Ok(phi_maps(p, lambda)?[branch as usize - 1]),
        _ => Err(Error::Precondition(format!(
            "interval branch {branch} is not in 1..=4"
        ))),
    }
}

/// `lambda_m` as a function of the level-(m+1) graph eigenvalue `x`.
pub fn quartic_forward(p: f64, x: f64) -> f64 {
    (4.0 - x) * (x - 2.0).powi(2) * x / (4.0 * p * (1.0 - p))
}

/// Forbidden values `2(1 - sqrt q)`, `2`, `2(1 + sqrt q)`.
pub fn forbidden_interval(p: f64) -> [f64; 3] {
    let sq = (1.0 - p).sqrt();
    [2.0 * p / (1.0 + sq), 2.0, 2.0 * (1.0 + sq)]
}

fn nearest_forbidden(p: f64, lambda: f64) -> Option<f64> {
    forbidden_interval(p)
        .into_iter()
        .find(|b| (lambda - b).abs() <= FORBIDDEN_TOL * b.abs())
}

/// Values `(y1, z, y2)` at the three new vertices of a cell with endpoint values
/// `x1` (left) and `x2` (right), for the level-(m+1) graph eigenvalue `lambda`.
pub fn extend_cell(p: f64, lambda: f64, x1: f64, x2: f64) -> Result<(f64, f64, f64)> {
    check_p(p)?;
    if let Some(b) = nearest_forbidden(p, lambda) {
        return Err(Error::Extension {
            lambda,
            forbidden: b,
        });
    }
    let q = 1.0 - p;
    // (lambda - 2)^2 - 4q, expanded to avoid cancellation when p is small.
    let d = lambda * lambda - 4.0 * lambda + 4.0 * p;
    let e = 2.0 + 2.0 * p - 4.0 * lambda + lambda * lambda;
    let den = d * (lambda - 2.0);
    let y1 = (-4.0 * p * q * x2 - 2.0 * p * x1 * e) / den;
    let y2 = (-4.0 * p * q * x1 - 2.0 * p * x2 * e) / den;
    let z = 2.0 * p * (x1 + x2) / d;
    Ok((y1, z, y2))
}

/// A level-1 Dirichlet eigenfunction with its graph eigenvalue.
#[derive(Debug, Clone, PartialEq)]
pub struct BornSeed {
    pub seed: Seed,
    pub graph_eigenvalue: f64,
    /// Values at `0, 1/4, 1/2, 3/4, 1`.
    pub values: [f64; 5],
}

/// The three level-1 eigenfunctions `g1 = (sqrt q, 1, sqrt q)`,
/// `g2 = (1, 0, -1)` and `g3 = (sqrt q, -1, sqrt q)`.
pub fn born_seeds(p: f64) -> [BornSeed; 3] {
    let sq = (1.0 - p).sqrt();
    let [b1, b2, b3] = forbidden_interval(p);
    [
        BornSeed {
            seed: Seed::G1,
            graph_eigenvalue: b1,
            values: [0.0, sq, 1.0, sq, 0.0],
        },
        BornSeed {
            seed: Seed::G2,
            graph_eigenvalue: b2,
            values: [0.0, 1.0, 0.0, -1.0, 0.0],
        },
        BornSeed {
            seed: Seed::G3,
            graph_eigenvalue: b3,
            values: [0.0, sq, -1.0, sq, 0.0],
        },
    ]
}

/// Reflection parity about `x = 1/2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Symmetric,
    Skew,
}

/// Parity of a vertex function, if it has one within `1e-9` relative.
pub fn parity(f: &[f64]) -> Option<Parity> {
    let n = f.len();
    let max = f.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let tol = 1e-9 * max.max(f64::MIN_POSITIVE);
    let dev = |sign: f64| (0..n).fold(0.0f64, |m, i| m.max((f[i] - sign * f[n - 1 - i]).abs()));
    if dev(-1.0) <= tol {
        Some(Parity::Skew)
    } else if dev(1.0) <= tol {
        Some(Parity::Symmetric)
    } else {
        None
    }
}

/// Four scaled copies of a Dirichlet eigenfunction, one per quarter.
///
/// Skew-symmetric input uses the weights `(1, p/q, p/q, 1)` and symmetric
/// input `(1, -p/q, p/q, -1)`, which balance the junction equations at
/// `1/4, 1/2, 3/4`. The graph eigenvalue is unchanged.
pub fn miniaturize(p: f64, f: &[f64]) -> Result<Vec<f64>> {
    check_p(p)?;
    let n = f.len().checked_sub(1).filter(|n| *n >= 1).ok_or_else(|| {
        Error::Precondition("miniaturize needs a function on at least two vertices".into())
    })?;
    let max = f.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if f[0].abs() > 1e-9 * max || f[n].abs() > 1e-9 * max {
        return Err(Error::Precondition(
            "miniaturize needs Dirichlet boundary values".into(),
        ));
    }
    let r = p / (1.0 - p);
    let weights = match parity(f) {
        Some(Parity::Skew) => [1.0, r, r, 1.0],
        Some(Parity::Symmetric) => [1.0, -r, r, -1.0],
        None => {
            return Err(Error::Precondition(
                "miniaturize needs a symmetric or skew-symmetric function".into(),
            ))
        }
    };
    let mut out = vec![0.0; 4 * n + 1];
    for (i, w) in weights.iter().enumerate() {
        for j in 1..n {
            out[i * n + j] = w * f[j];
        }
    }
    Ok(out)
}

/// Extend a level-m eigenfunction to level m+1 for the graph eigenvalue
/// `lambda` (one of its four branches), cell by cell.
pub fn decimate_function(p: f64, lambda: f64, f: &[f64]) -> Result<Vec<f64>> {
    let n = f.len() - 1;
    let mut out = vec![0.0; 4 * n + 1];
    for k in 0..n {
        let (y1, z, y2) = extend_cell(p, lambda, f[k], f[k + 1])?;
        out[4 * k] = f[k];
        out[4 * k + 1] = y1;
        out[4 * k + 2] = z;
        out[4 * k + 3] = y2;
    }
    out[4 * n] = f[n];
    Ok(out)
}

fn scale_to_unit_max(mut f: Vec<f64>) -> Vec<f64> {
    let max = f.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if max > 0.0 {
        f.iter_mut().for_each(|x| *x /= max);
    }
    f
}

struct Node {
    lambda: f64,
    f: Vec<f64>,
    genealogy: Genealogy,
}

/// Born eigenfunctions at the deepest level of `ps`: the seed built with the
/// last parameter, copied outward with each earlier parameter.
fn born_nodes(ps: &[f64]) -> Result<Vec<Node>> {
    let level = ps.len();
    let finest = ps[level - 1];
    born_seeds(finest)
        .into_iter()
        .map(|s| {
            let mut f = s.values.to_vec();
            for &p in ps[..level - 1].iter().rev() {
                f = miniaturize(p, &f)?;
            }
            Ok(Node {
                lambda: s.graph_eigenvalue,
                f: scale_to_unit_max(f),
                genealogy: Genealogy::born(level, s.seed),
            })
        })
        .collect()
}

/// Weighted-norm normalization and sign convention against the graph's pointmasses.
pub(crate) fn normalize_weighted(f: &mut [f64], pointmass: &[f64]) {
    let norm = f
        .iter()
        .zip(pointmass)
        .map(|(x, m)| x * x * m)
        .sum::<f64>()
        .sqrt();
    if norm > 0.0 {
        f.iter_mut().for_each(|x| *x /= norm);
    }
    normalize_sign(f);
}

/// Level-m interval graph for a per-level parameter sequence.
pub fn hierarchical_interval_graph(ps: &[f64]) -> Result<GraphApprox> {
    let params: Vec<IntervalParams> = ps
        .iter()
        .map(|&p| IntervalParams::new(p))
        .collect::<Result<_>>()?;
    let scale = params.iter().map(|x| x.renorm_factor()).product();
    build_interval_graph_with(
        ps.len(),
        |l, letter| params[l - 1].letter_weights(letter),
        scale,
    )
}

/// Complete Dirichlet spectrum for a per-level parameter sequence, whose
/// length is the level. Step `l -> l+1` decimates with `ps[l]`.
pub fn hierarchical_decimation(ps: &[f64]) -> Result<Spectrum> {
    if ps.is_empty() {
        return Err(Error::Precondition("level must be at least 1".into()));
    }
    for &p in ps {
        IntervalParams::new(p)?;
    }
    let mut nodes = born_nodes(&ps[..1])?;
    for k in 1..ps.len() {
        let p_next = ps[k];
        let children: Vec<Node> = nodes
            .par_iter()
            .map(|node| -> Result<Vec<Node>> {
                let values = phi_maps(p_next, node.lambda)?;
                values
                    .iter()
                    .enumerate()
                    .map(|(i, &x)| {
                        Ok(Node {
                            lambda: x,
                            f: scale_to_unit_max(decimate_function(p_next, x, &node.f)?),
                            genealogy: node.genealogy.child(i as u8 + 1),
                        })
                    })
                    .collect()
            })
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .flatten()
            .collect();
        nodes = children;
        nodes.extend(born_nodes(&ps[..=k])?);
    }
    let m = ps.len();
    let expected = (1usize << (2 * m)) - 1;
    if nodes.len() != expected {
        return Err(Error::Consistency(format!(
            "decimation produced {} eigenvalues at level {m}, expected {expected}",
            nodes.len()
        )));
    }
    let graph = hierarchical_interval_graph(ps)?;
    let pairs = nodes
        .into_iter()
        .map(|mut node| {
            normalize_weighted(&mut node.f, &graph.pointmass);
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
        model: ModelKind::Interval,
        level: m,
        bc: BoundaryCondition::Dirichlet,
        scale: graph.scale,
        pairs,
    };
    // Dirichlet interval spectra are simple, but for small p distinct values
    // can sit closer than the clustering tolerance, so only exact repeats fail.
    spectrum
        .pairs
        .sort_by(|a, b| a.graph_eigenvalue.total_cmp(&b.graph_eigenvalue));
    if let Some(w) = spectrum
        .pairs
        .windows(2)
        .find(|w| w[0].graph_eigenvalue >= w[1].graph_eigenvalue)
    {
        return Err(Error::Consistency(format!(
            "eigenvalue {} is produced twice",
            w[0].eigenvalue
        )));
    }
    Ok(spectrum)
}

/// Renormalized Dirichlet eigenvalues for a per-level parameter sequence,
/// sorted, from the branch maps alone.
///
/// No eigenfunctions are extended, so values that come closer to a
/// forbidden value than the extension tolerance (which happens for very
/// small `p` at deep levels) are still produced.
pub fn hierarchical_eigenvalues(ps: &[f64]) -> Result<Vec<f64>> {
    if ps.is_empty() {
        return Err(Error::Precondition("level must be at least 1".into()));
    }
    let params: Vec<IntervalParams> = ps
        .iter()
        .map(|&p| IntervalParams::new(p))
        .collect::<Result<_>>()?;
    let mut values: Vec<f64> = born_seeds(ps[0])
        .iter()
        .map(|s| s.graph_eigenvalue)
        .collect();
    for (k, &p) in ps.iter().enumerate().skip(1) {
        let mut next = Vec::with_capacity(4 * values.len() + 3);
        for &x in &values {
            next.extend(phi_maps(p, x)?);
        }
        next.extend(born_seeds(p).iter().map(|s| s.graph_eigenvalue));
        values = next;
        debug_assert_eq!(values.len(), (1usize << (2 * (k + 1))) - 1);
    }
    let scale: f64 = params.iter().map(|x| x.renorm_factor()).product();
    values.sort_by(f64::total_cmp);
    Ok(values.into_iter().map(|x| x * scale).collect())
}

/// Renormalized level-m eigenvalues for a single parameter, values only.
pub fn interval_eigenvalues(p: f64, m: usize) -> Result<Vec<f64>> {
    hierarchical_eigenvalues(&vec![p; m])
}

/// Complete Dirichlet spectrum of the level-m interval graph by decimation.
pub fn full_spectrum_interval(p: f64, m: usize) -> Result<Spectrum> {
    hierarchical_decimation(&vec![p; m])
}

/// Successive renormalized iterates of a genealogy continued along `Phi_1`.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitEstimate {
    /// Renormalized value at the final level.
    pub value: f64,
    /// Relative change between the last two levels.
    pub relative_change: f64,
    pub converged: bool,
    /// `(level, renormalized value)` for every level from the genealogy's own.
    pub iterates: Vec<(usize, f64)>,
}

/// Renormalized value `(4/pq)^depth lambda_depth` of the eigenvalue obtained
/// by following `genealogy` and then `Phi_1` down to level `depth`.
pub fn renormalized_limit(p: f64, genealogy: &Genealogy, depth: usize) -> Result<LimitEstimate> {
    IntervalParams::new(p)?;
    let seeds = born_seeds(p);
    let mut lambda = match genealogy.seed {
        Seed::G1 => seeds[0].graph_eigenvalue,
        Seed::G2 => seeds[1].graph_eigenvalue,
        Seed::G3 => seeds[2].graph_eigenvalue,
        Seed::Sg(_) => {
            return Err(Error::Precondition(
                "gasket genealogy passed to the interval limit".into(),
            ))
        }
    };
    if genealogy.birth_level == 0 {
        return Err(Error::Precondition("birth level must be at least 1".into()));
    }
    for &b in &genealogy.branches {
        lambda = phi(p, lambda, b)?;
    }
    continue_limit(p, genealogy.level(), lambda, depth)
}

/// Continue the level-`level` graph eigenvalue `lambda` along `Phi_1` down to
/// level `depth` and renormalize.
pub fn continue_limit(p: f64, level: usize, lambda: f64, depth: usize) -> Result<LimitEstimate> {
    let params = IntervalParams::new(p)?;
    if depth <= level {
        return Err(Error::Precondition(format!(
            "depth {depth} must exceed the genealogy's level {level}"
        )));
    }
    let factor = params.renorm_factor();
    // Accumulate the renormalized value directly; factor^depth alone can overflow.
    let mut lambda = lambda;
    let mut value = lambda * factor.powi(level as i32);
    let mut iterates = vec![(level, value)];
    let mut relative_change = f64::INFINITY;
    for next_level in level + 1..=depth {
        let next = phi(p, lambda, 1)?;
        let next_value = value * factor * (next / lambda);
        relative_change = ((next_value - value) / next_value).abs();
        lambda = next;
        value = next_value;
        iterates.push((next_level, value));
    }
    Ok(LimitEstimate {
        value,
        relative_change,
        converged: relative_change <= 1e-10,
        iterates,
    })
}
