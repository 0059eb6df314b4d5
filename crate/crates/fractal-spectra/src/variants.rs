//! Threshold-subdivision interval Laplacians and hierarchical (level-indexed
//! parameter) Laplacians on both models.

use crate::error::{Error, Result};
use crate::graphs::{
    assemble_operator, build_sg_graph_with, dense_spectrum, interval_graph_from_cells, GraphApprox,
    IntervalCell,
};
use crate::interval_decimation::{hierarchical_decimation, hierarchical_interval_graph};
use crate::models::{CellWord, IntervalParams, ModelKind, SgParams};
use crate::spectrum::{BoundaryCondition, Spectrum};

/// Cells of a threshold partition of `[0, 1]`, left to right.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdPartition {
    pub p: f64,
    pub c: f64,
    pub level: usize,
    pub cells: Vec<IntervalCell>,
}

impl ThresholdPartition {
    pub fn total_measure(&self) -> f64 {
        self.cells.iter().map(|c| c.measure).sum()
    }
}

/// Build `C_m` from `C_0 = {[0,1]}`: at step `k` (producing `C_{k+1}`)
/// every cell of measure at least `c^(k+1)` splits into its four children,
/// the rest are kept. Kept cells are tested again at every later step.
pub fn threshold_partition(p: f64, c: f64, m: usize) -> Result<ThresholdPartition> {
    let params = IntervalParams::new(p)?;
    if !(0.0..1.0).contains(&c) {
        return Err(Error::InvalidParameter {
            name: "c",
            value: c,
            reason: "cutoff must lie in [0, 1)".into(),
        });
    }
    if m > 11 {
        return Err(Error::Resource {
            dimension: 1 << (2 * m),
            cap: 1 << 22,
        });
    }
    let mut cells = vec![IntervalCell {
        word: CellWord::Interval(Vec::new()),
        start: 0.0,
        end: 1.0,
        measure: 1.0,
        resistance: 1.0,
    }];
    for k in 0..m {
        let cut = c.powi(k as i32 + 1);
        let mut next = Vec::with_capacity(4 * cells.len());
        for cell in cells {
            if cell.measure < cut {
                next.push(cell);
                continue;
            }
            let CellWord::Interval(word) = &cell.word else {
                unreachable!()
            };
            let width = (cell.end - cell.start) / 4.0;
            for letter in 0..4u8 {
                let (mu, res) = params.letter_weights(letter);
                let mut w = word.clone();
                w.push(letter);
                next.push(IntervalCell {
                    word: CellWord::Interval(w),
                    start: cell.start + letter as f64 * width,
                    end: if letter == 3 {
                        cell.end
                    } else {
                        cell.start + (letter + 1) as f64 * width
                    },
                    measure: cell.measure * mu,
                    resistance: cell.resistance * res,
                });
            }
        }
        cells = next;
    }
    Ok(ThresholdPartition {
        p,
        c,
        level: m,
        cells,
    })
}

/// Graph on the partition endpoints, renormalized with `(4/pq)^m` so that
/// `c = 0` reproduces the standard level-m graph.
pub fn threshold_graph(partition: &ThresholdPartition) -> Result<GraphApprox> {
    let params = IntervalParams::new(partition.p)?;
    interval_graph_from_cells(
        partition.level,
        &partition.cells,
        1i64 << (2 * partition.level),
        params.renorm_factor().powi(partition.level as i32),
    )
}

/// Dense-solver spectrum of the threshold Laplacian.
pub fn threshold_spectrum(p: f64, c: f64, m: usize, bc: BoundaryCondition) -> Result<Spectrum> {
    let partition = threshold_partition(p, c, m)?;
    let graph = threshold_graph(&partition)?;
    dense_spectrum(&assemble_operator(&graph, bc))
}

/// Distance of `f` from being symmetric or skew-symmetric about `x = 1/2`,
/// relative to its maximum. Values at reflected points are interpolated
/// linearly between vertices at positions `x` (sorted).
pub fn asymmetry_norm(x: &[f64], f: &[f64]) -> f64 {
    let max = f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if max == 0.0 {
        return 0.0;
    }
    let at = |t: f64| -> f64 {
        let i = x.partition_point(|&v| v < t);
        if i == 0 {
            return f[0];
        }
        if i == x.len() {
            return f[x.len() - 1];
        }
        let (a, b) = (x[i - 1], x[i]);
        if b == a {
            return f[i];
        }
        f[i - 1] + (t - a) / (b - a) * (f[i] - f[i - 1])
    };
    let (mut sym, mut skew) = (0.0f64, 0.0f64);
    for (&t, &v) in x.iter().zip(f) {
        let w = at(1.0 - t);
        sym = sym.max((v - w).abs());
        skew = skew.max((v + w).abs());
    }
    sym.min(skew) / max
}

/// A model with a per-level parameter sequence, cycled when shorter than
/// the working depth.
#[derive(Debug, Clone, PartialEq)]
pub struct HierarchicalParams {
    pub model: ModelKind,
    pub sequence: Vec<f64>,
}

impl HierarchicalParams {
    pub fn new(model: ModelKind, sequence: Vec<f64>) -> Result<Self> {
        if sequence.is_empty() {
            return Err(Error::Precondition("parameter sequence is empty".into()));
        }
        for &x in &sequence {
            match model {
                ModelKind::Interval => {
                    IntervalParams::new(x)?;
                }
                ModelKind::Sg => {
                    SgParams::new(x)?;
                }
            }
        }
        Ok(Self { model, sequence })
    }

    /// Parameter used at one-based `level`.
    pub fn at(&self, level: usize) -> f64 {
        self.sequence[(level - 1) % self.sequence.len()]
    }

    /// The first `m` parameters.
    pub fn truncated(&self, m: usize) -> Vec<f64> {
        (1..=m).map(|l| self.at(l)).collect()
    }
}

/// Measure and resistance (interval) or measure and conductance (gasket)
/// of a cell whose `l`-th letter uses the `l`-th parameter.
pub fn hierarchical_weights(params: &HierarchicalParams, word: &CellWord) -> Result<(f64, f64)> {
    let mut mu = 1.0;
    let mut other = 1.0;
    match (params.model, word) {
        (ModelKind::Interval, CellWord::Interval(letters)) => {
            for (l, &x) in letters.iter().enumerate() {
                let (a, b) = IntervalParams::new(params.at(l + 1))?.letter_weights(x);
                mu *= a;
                other *= b;
            }
        }
        (ModelKind::Sg, CellWord::Sg(letters)) => {
            for (l, &x) in letters.iter().enumerate() {
                let (a, b) = SgParams::new(params.at(l + 1))?.letter_weights(x);
                mu *= a;
                other *= b;
            }
        }
        _ => {
            return Err(Error::Precondition(
                "cell word does not match the model".into(),
            ))
        }
    }
    Ok((mu, other))
}

/// Level-m graph for a hierarchical parameter sequence.
pub fn hierarchical_graph(params: &HierarchicalParams, m: usize) -> Result<GraphApprox> {
    let seq = params.truncated(m);
    match params.model {
        ModelKind::Interval => hierarchical_interval_graph(&seq),
        ModelKind::Sg => {
            let sg: Vec<SgParams> = seq
                .iter()
                .map(|&r| SgParams::new(r))
                .collect::<Result<_>>()?;
            let scale = sg.iter().map(|x| x.renorm_factor()).product();
            build_sg_graph_with(m, |l, letter| sg[l - 1].letter_weights(letter), scale)
        }
    }
}

/// Spectrum of the hierarchical Laplacian.
///
/// Interval Dirichlet spectra come from level-indexed decimation and are
/// checked against the dense solver (values within `1e-8` relative);
/// everything else uses the dense solver alone.
pub fn hierarchical_spectrum(
    params: &HierarchicalParams,
    m: usize,
    bc: BoundaryCondition,
) -> Result<Spectrum> {
    if m == 0 {
        return Err(Error::Precondition("level must be at least 1".into()));
    }
    let graph = hierarchical_graph(params, m)?;
    let oracle = dense_spectrum(&assemble_operator(&graph, bc))?;
    if params.model == ModelKind::Sg || bc == BoundaryCondition::Neumann {
        return Ok(oracle);
    }
    let decimated = hierarchical_decimation(&params.truncated(m))?;
    for (a, b) in decimated.pairs.iter().zip(&oracle.pairs) {
        if (a.eigenvalue - b.eigenvalue).abs() > 1e-8 * b.eigenvalue.abs() {
            return Err(Error::Consistency(format!(
                "hierarchical decimation gives {} where the dense solver gives {}",
                a.eigenvalue, b.eigenvalue
            )));
        }
    }
    Ok(decimated)
}
