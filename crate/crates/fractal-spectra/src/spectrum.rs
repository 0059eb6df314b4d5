//! Eigenpairs, genealogies and complete spectra.

use std::fmt;
use std::ops::Range;

use crate::models::ModelKind;

/// Boundary condition of the discrete eigenproblem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundaryCondition {
    Dirichlet,
    Neumann,
}

impl fmt::Display for BoundaryCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundaryCondition::Dirichlet => write!(f, "dirichlet"),
            BoundaryCondition::Neumann => write!(f, "neumann"),
        }
    }
}

/// Born eigenvalue classes on the gasket.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BornClass {
    B1,
    B2,
    B3,
    B4,
    B5,
    /// The family with graph eigenvalue 9.
    Nine,
    B7,
}

impl BornClass {
    pub const ALL: [BornClass; 7] = [
        BornClass::B1,
        BornClass::B2,
        BornClass::B3,
        BornClass::B4,
        BornClass::B5,
        BornClass::Nine,
        BornClass::B7,
    ];

    fn bit(self) -> u8 {
        1 << (self as u8)
    }

    pub fn label(self) -> &'static str {
        match self {
            BornClass::B1 => "b1",
            BornClass::B2 => "b2",
            BornClass::B3 => "b3",
            BornClass::B4 => "b4",
            BornClass::B5 => "b5",
            BornClass::Nine => "nine",
            BornClass::B7 => "b7",
        }
    }
}

/// A set of born classes sharing one eigenvalue (e.g. `b3` and `b7` at `r = 1`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct SgClasses(u8);

impl SgClasses {
    pub fn single(c: BornClass) -> Self {
        SgClasses(c.bit())
    }

    pub fn insert(&mut self, c: BornClass) {
        self.0 |= c.bit();
    }

    pub fn contains(&self, c: BornClass) -> bool {
        self.0 & c.bit() != 0
    }

    pub fn classes(&self) -> Vec<BornClass> {
        BornClass::ALL
            .iter()
            .copied()
            .filter(|c| self.contains(*c))
            .collect()
    }
}

impl fmt::Display for SgClasses {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let labels: Vec<&str> = self.classes().iter().map(|c| c.label()).collect();
        write!(f, "{}", labels.join("+"))
    }
}

/// Origin of a decimation family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Seed {
    /// Interval seeds with graph eigenvalues `2(1-sqrt q)`, `2`, `2(1+sqrt q)`.
    G1,
    G2,
    G3,
    /// Gasket born eigenspace.
    Sg(SgClasses),
}

impl fmt::Display for Seed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Seed::G1 => write!(f, "g1"),
            Seed::G2 => write!(f, "g2"),
            Seed::G3 => write!(f, "g3"),
            Seed::Sg(c) => write!(f, "{c}"),
        }
    }
}

/// Birth level, seed and the sequence of inverse branches applied since birth.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Genealogy {
    pub birth_level: usize,
    pub seed: Seed,
    /// One-based branch indices, oldest first.
    pub branches: Vec<u8>,
}

impl Genealogy {
    pub fn born(birth_level: usize, seed: Seed) -> Self {
        Self {
            birth_level,
            seed,
            branches: Vec::new(),
        }
    }

    /// Level at which this genealogy currently lives.
    pub fn level(&self) -> usize {
        self.birth_level + self.branches.len()
    }

    pub fn child(&self, branch: u8) -> Self {
        let mut g = self.clone();
        g.branches.push(branch);
        g
    }

    /// Branch sequence as a digit string, e.g. `"1141"`.
    pub fn branch_string(&self) -> String {
        self.branches.iter().map(|b| char::from(b'0' + b)).collect()
    }
}

/// How an eigenpair was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Provenance {
    Decimated,
    Born,
    Oracle,
}

/// One eigenvalue instance with its eigenfunction.
///
/// Degenerate eigenvalues appear once per basis vector; `multiplicity`
/// holds the size of the cluster the instance belongs to.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    /// Eigenvalue of the unscaled graph Laplacian.
    pub graph_eigenvalue: f64,
    /// Renormalized eigenvalue (graph eigenvalue times the level scale).
    pub eigenvalue: f64,
    /// Values on every vertex of the graph, boundary included.
    pub eigenfunction: Vec<f64>,
    pub genealogy: Option<Genealogy>,
    pub multiplicity: usize,
    pub provenance: Provenance,
}

/// Complete spectrum of one discrete operator.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub model: ModelKind,
    pub level: usize,
    pub bc: BoundaryCondition,
    /// Factor turning graph eigenvalues into renormalized ones.
    pub scale: f64,
    /// Sorted ascending by eigenvalue.
    pub pairs: Vec<EigenPair>,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Renormalized eigenvalues in order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        self.pairs.iter().map(|p| p.eigenvalue).collect()
    }

    pub fn graph_eigenvalues(&self) -> Vec<f64> {
        self.pairs.iter().map(|p| p.graph_eigenvalue).collect()
    }

    /// Stable ascending sort followed by multiplicity assignment.
    pub fn sort_and_cluster(&mut self, rel_tol: f64) {
        self.pairs
            .sort_by(|a, b| a.graph_eigenvalue.total_cmp(&b.graph_eigenvalue));
        let values = self.graph_eigenvalues();
        for range in cluster_ranges(&values, rel_tol) {
            let n = range.len();
            for pair in &mut self.pairs[range] {
                pair.multiplicity = n;
            }
        }
    }

    /// Distinct eigenvalues with multiplicities.
    pub fn distinct(&self, rel_tol: f64) -> Vec<(f64, usize)> {
        let values = self.eigenvalues();
        cluster_ranges(&values, rel_tol)
            .into_iter()
            .map(|r| {
                let n = r.len();
                (values[r].iter().sum::<f64>() / n as f64, n)
            })
            .collect()
    }
}

/// Split a sorted sequence into runs whose neighbours differ by at most
/// `rel_tol` relative to their magnitude. Values within `rel_tol * 1e-9` of
/// the largest magnitude count as zero.
pub fn cluster_ranges(sorted: &[f64], rel_tol: f64) -> Vec<Range<usize>> {
    let floor = 1e-9 * sorted.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..=sorted.len() {
        let split = i == sorted.len() || {
            let (a, b) = (sorted[i - 1], sorted[i]);
            (b - a).abs() > rel_tol * a.abs().max(b.abs()).max(floor)
        };
        if split {
            out.push(start..i);
            start = i;
        }
    }
    out
}

/// `sum a(x) b(x) m_x`.
pub fn weighted_dot(a: &[f64], b: &[f64], mass: &[f64]) -> f64 {
    a.iter().zip(b).zip(mass).map(|((x, y), m)| x * y * m).sum()
}

/// Modified Gram-Schmidt in the pointmass-weighted inner product, first
/// against the already orthonormal `fixed` vectors, then among `vectors`.
///
/// A vector whose norm after projection falls below `drop_tol` times its
/// original norm is dropped; the survivors are returned normalized.
pub fn weighted_gram_schmidt(
    fixed: &[Vec<f64>],
    vectors: Vec<Vec<f64>>,
    mass: &[f64],
    drop_tol: f64,
) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(vectors.len());
    for mut v in vectors {
        let before = weighted_dot(&v, &v, mass).sqrt();
        if before == 0.0 {
            continue;
        }
        // Two passes keep the result orthogonal to working precision.
        for _ in 0..2 {
            for u in fixed.iter().chain(out.iter()) {
                let c = weighted_dot(&v, u, mass);
                v.iter_mut().zip(u).for_each(|(x, y)| *x -= c * y);
            }
        }
        let after = weighted_dot(&v, &v, mass).sqrt();
        if after > drop_tol * before {
            v.iter_mut().for_each(|x| *x /= after);
            out.push(v);
        }
    }
    out
}
