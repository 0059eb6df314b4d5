//! Level-m graph approximations, the pointwise discrete Laplacian and the
//! dense eigensolver used as an oracle.
//!
//! The operator at a vertex `x` is
//! `(1/m_x) * sum_{y ~ x} c(x,y) (u(x) - u(y))`, where `m_x` is the
//! pointmass and `c` the edge conductance. It is self-adjoint for the
//! pointmass inner product, so the oracle diagonalizes the symmetric matrix
//! `D^(1/2) A D^(-1/2)` and maps eigenvectors back with `D^(-1/2)`.

use std::collections::HashMap;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::models::{CellWord, IntervalParams, ModelKind, SgParams};
use crate::spectrum::{BoundaryCondition, EigenPair, Provenance, Spectrum};

/// Default dimension cap of the dense oracle.
pub const DEFAULT_ORACLE_CAP: usize = 12_000;

/// Largest vertex count a graph builder accepts.
pub const MAX_VERTICES: usize = 5_000_000;

/// Relative width used to group degenerate eigenvalues.
pub const CLUSTER_TOL: f64 = 1e-7;

/// One m-cell of a graph approximation.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub word: CellWord,
    /// Interval: left and right endpoint. Gasket: images of `q0, q1, q2`.
    pub vertices: Vec<usize>,
    pub measure: f64,
    /// Interval: resistance of the cell. Gasket: conductance scale of its edges.
    pub weight: f64,
}

/// Vertices, weighted edges, pointmasses and boundary of a level-m graph.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphApprox {
    pub model: ModelKind,
    pub level: usize,
    /// Planar coordinates; interval graphs use `[x, 0]`.
    pub coords: Vec<[f64; 2]>,
    /// Exact integer coordinates: interval `k` of `k/4^m`; gasket `(a, b)`
    /// for `a q1 + b q2` scaled by `2^(2m)`.
    pub lattice: Vec<[i64; 2]>,
    pub edges: Vec<(usize, usize, f64)>,
    pub pointmass: Vec<f64>,
    pub boundary: Vec<usize>,
    pub cells: Vec<Cell>,
    /// Factor turning graph eigenvalues into renormalized eigenvalues.
    pub scale: f64,
}

impl GraphApprox {
    pub fn vertex_count(&self) -> usize {
        self.coords.len()
    }

    pub fn is_boundary(&self, v: usize) -> bool {
        self.boundary.contains(&v)
    }

    /// Boundary flags indexed by vertex.
    pub fn boundary_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.vertex_count()];
        for &b in &self.boundary {
            mask[b] = true;
        }
        mask
    }

    /// Map from exact lattice coordinates to vertex ids.
    pub fn lattice_index(&self) -> HashMap<[i64; 2], usize> {
        self.lattice
            .iter()
            .enumerate()
            .map(|(i, &c)| (c, i))
            .collect()
    }
}

/// A cell of a mixed-generation interval partition, used by the interval builders.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalCell {
    pub word: CellWord,
    pub start: f64,
    pub end: f64,
    pub measure: f64,
    pub resistance: f64,
}

/// Base-4 digits of `k` at `m` levels, most significant first.
pub fn interval_word(k: usize, m: usize) -> Vec<u8> {
    (0..m).rev().map(|j| ((k >> (2 * j)) & 3) as u8).collect()
}

/// Path graph through the endpoints of consecutive cells tiling `[0,1]`.
///
/// Edge conductance is `1/R(cell)`. Interior pointmasses average the two
/// adjacent cell measures; boundary vertices take half their single cell.
pub fn interval_graph_from_cells(
    level: usize,
    cells: &[IntervalCell],
    lattice_denominator: i64,
    scale: f64,
) -> Result<GraphApprox> {
    let n = cells.len();
    if n == 0 {
        return Err(Error::Precondition(
            "an interval graph needs at least one cell".into(),
        ));
    }
    if n + 1 > MAX_VERTICES {
        return Err(Error::Resource {
            dimension: n + 1,
            cap: MAX_VERTICES,
        });
    }
    let mut coords = Vec::with_capacity(n + 1);
    let mut lattice = Vec::with_capacity(n + 1);
    let mut pointmass = vec![0.0; n + 1];
    let mut edges = Vec::with_capacity(n);
    let mut out_cells = Vec::with_capacity(n);
    coords.push([cells[0].start, 0.0]);
    lattice.push([
        (cells[0].start * lattice_denominator as f64).round() as i64,
        0,
    ]);
    for (k, c) in cells.iter().enumerate() {
        coords.push([c.end, 0.0]);
        lattice.push([(c.end * lattice_denominator as f64).round() as i64, 0]);
        edges.push((k, k + 1, 1.0 / c.resistance));
        pointmass[k] += 0.5 * c.measure;
        pointmass[k + 1] += 0.5 * c.measure;
        out_cells.push(Cell {
            word: c.word.clone(),
            vertices: vec![k, k + 1],
            measure: c.measure,
            weight: c.resistance,
        });
    }
    Ok(GraphApprox {
        model: ModelKind::Interval,
        level,
        coords,
        lattice,
        edges,
        pointmass,
        boundary: vec![0, n],
        cells: out_cells,
        scale,
    })
}

/// Uniform level-m interval graph whose cells use per-level letter weights.
///
/// `letter_weights(level, letter)` returns the `(measure, resistance)` factor
/// of a letter at a one-based level.
pub fn build_interval_graph_with(
    m: usize,
    letter_weights: impl Fn(usize, u8) -> (f64, f64),
    scale: f64,
) -> Result<GraphApprox> {
    if m == 0 {
        return Err(Error::Precondition("level must be at least 1".into()));
    }
    if m > 11 {
        return Err(Error::Resource {
            dimension: usize::MAX,
            cap: MAX_VERTICES,
        });
    }
    let count = 1usize << (2 * m);
    let width = 1.0 / count as f64;
    let cells: Vec<IntervalCell> = (0..count)
        .map(|k| {
            let word = interval_word(k, m);
            let (measure, resistance) =
                word.iter()
                    .enumerate()
                    .fold((1.0, 1.0), |(mu, res), (l, &x)| {
                        let (a, b) = letter_weights(l + 1, x);
                        (mu * a, res * b)
                    });
            IntervalCell {
                word: CellWord::Interval(word),
                start: k as f64 * width,
                end: (k + 1) as f64 * width,
                measure,
                resistance,
            }
        })
        .collect();
    interval_graph_from_cells(m, &cells, count as i64, scale)
}

/// Level-m interval graph with vertices `k/4^m`.
pub fn build_interval_graph(params: &IntervalParams, m: usize) -> Result<GraphApprox> {
    build_interval_graph_with(
        m,
        |_, letter| params.letter_weights(letter),
        params.renorm_factor().powi(m as i32),
    )
}

const SG_CORNERS: [[i64; 2]; 3] = [[0, 0], [1, 0], [0, 1]];

/// Level-m graph of the twice-iterated gasket, i.e. the standard level-2m
/// gasket graph, with per-level letter weights.
///
/// `letter_weights(level, (j, k))` returns the `(measure, conductance)`
/// factor of a nine-map letter at a one-based level.
pub fn build_sg_graph_with(
    m: usize,
    letter_weights: impl Fn(usize, (u8, u8)) -> (f64, f64),
    scale: f64,
) -> Result<GraphApprox> {
    if m == 0 {
        return Err(Error::Precondition("level must be at least 1".into()));
    }
    let vertex_estimate = (3usize.pow(2 * m as u32 + 1) + 3) / 2;
    if m > 7 || vertex_estimate > MAX_VERTICES {
        return Err(Error::Resource {
            dimension: vertex_estimate,
            cap: MAX_VERTICES,
        });
    }
    let n = 2 * m as u32;
    let side = 1i64 << n;
    let mut index: HashMap<[i64; 2], usize> = HashMap::with_capacity(vertex_estimate);
    let mut lattice: Vec<[i64; 2]> = Vec::with_capacity(vertex_estimate);
    for c in SG_CORNERS {
        index.insert([c[0] * side, c[1] * side], lattice.len());
        lattice.push([c[0] * side, c[1] * side]);
    }
    let cell_count = 9usize.pow(m as u32);
    let mut cells = Vec::with_capacity(cell_count);
    let mut edges = Vec::with_capacity(3 * cell_count);
    for idx in 0..cell_count {
        // Base-9 digits of idx, most significant first, as (j, k) pairs.
        let letters: Vec<(u8, u8)> = (0..m)
            .rev()
            .map(|l| {
                let d = (idx / 9usize.pow(l as u32)) % 9;
                ((d / 3) as u8, (d % 3) as u8)
            })
            .collect();
        let mut origin = [0i64, 0i64];
        let mut shift = side;
        let (mut measure, mut conductance) = (1.0, 1.0);
        for (l, &(j, k)) in letters.iter().enumerate() {
            for s in [j, k] {
                shift /= 2;
                origin[0] += SG_CORNERS[s as usize][0] * shift;
                origin[1] += SG_CORNERS[s as usize][1] * shift;
            }
            let (a, b) = letter_weights(l + 1, (j, k));
            measure *= a;
            conductance *= b;
        }
        let mut ids = Vec::with_capacity(3);
        for c in SG_CORNERS {
            let key = [origin[0] + c[0], origin[1] + c[1]];
            let id = *index.entry(key).or_insert_with(|| {
                lattice.push(key);
                lattice.len() - 1
            });
            ids.push(id);
        }
        edges.push((ids[0], ids[1], conductance));
        edges.push((ids[1], ids[2], conductance));
        edges.push((ids[2], ids[0], conductance));
        cells.push(Cell {
            word: CellWord::Sg(letters),
            vertices: ids,
            measure,
            weight: conductance,
        });
    }
    let mut pointmass = vec![0.0; lattice.len()];
    for c in &cells {
        for &v in &c.vertices {
            pointmass[v] += c.measure / 3.0;
        }
    }
    let h = 3f64.sqrt() / 2.0;
    let coords = lattice
        .iter()
        .map(|&[a, b]| {
            let (a, b) = (a as f64 / side as f64, b as f64 / side as f64);
            [a + 0.5 * b, h * b]
        })
        .collect();
    Ok(GraphApprox {
        model: ModelKind::Sg,
        level: m,
        coords,
        lattice,
        edges,
        pointmass,
        boundary: vec![0, 1, 2],
        cells,
        scale,
    })
}

/// Level-m gasket graph for a single parameter `r`.
pub fn build_sg_graph(params: &SgParams, m: usize) -> Result<GraphApprox> {
    build_sg_graph_with(
        m,
        |_, letter| params.letter_weights(letter),
        params.renorm_factor().powi(m as i32),
    )
}

/// The discrete Laplacian `-Delta_m` with a boundary condition applied.
///
/// Stored as its symmetrization `S = D^(1/2) A D^(-1/2)` together with the
/// pointmasses `D` of the active vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteOperator {
    pub model: ModelKind,
    pub level: usize,
    pub bc: BoundaryCondition,
    pub sym: DMatrix<f64>,
    /// Pointmass of each active row.
    pub mass: Vec<f64>,
    /// Vertex id of each active row.
    pub index_to_vertex: Vec<usize>,
    pub vertex_count: usize,
    pub scale: f64,
}

impl DiscreteOperator {
    pub fn dimension(&self) -> usize {
        self.index_to_vertex.len()
    }

    /// The operator `A` itself (not symmetric unless pointmasses are equal).
    pub fn matrix(&self) -> DMatrix<f64> {
        let n = self.dimension();
        DMatrix::from_fn(n, n, |i, j| {
            self.sym[(i, j)] * (self.mass[j] / self.mass[i]).sqrt()
        })
    }

    /// Apply `A` to a function given on all vertices. Rows removed by the
    /// boundary condition come back as zero.
    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        let n = self.dimension();
        let w: Vec<f64> = (0..n)
            .map(|j| u[self.index_to_vertex[j]] * self.mass[j].sqrt())
            .collect();
        let mut out = vec![0.0; self.vertex_count];
        for i in 0..n {
            let mut acc = 0.0;
            for (j, wj) in w.iter().enumerate() {
                acc += self.sym[(i, j)] * wj;
            }
            out[self.index_to_vertex[i]] = acc / self.mass[i].sqrt();
        }
        out
    }

    /// Restrict a vertex function to the active rows.
    pub fn restrict(&self, u: &[f64]) -> Vec<f64> {
        self.index_to_vertex.iter().map(|&v| u[v]).collect()
    }

    /// Extend an active-row vector by zero to all vertices.
    pub fn embed(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.vertex_count];
        for (i, &v) in self.index_to_vertex.iter().enumerate() {
            out[v] = x[i];
        }
        out
    }
}

/// Assemble the pointwise Laplacian of `graph`.
///
/// Dirichlet removes the boundary rows and columns; Neumann keeps them with
/// only the existing neighbours.
pub fn assemble_operator(graph: &GraphApprox, bc: BoundaryCondition) -> DiscreteOperator {
    let boundary = graph.boundary_mask();
    let mut row = vec![usize::MAX; graph.vertex_count()];
    let mut index_to_vertex = Vec::new();
    for v in 0..graph.vertex_count() {
        if bc == BoundaryCondition::Neumann || !boundary[v] {
            row[v] = index_to_vertex.len();
            index_to_vertex.push(v);
        }
    }
    let n = index_to_vertex.len();
    let mass: Vec<f64> = index_to_vertex
        .iter()
        .map(|&v| graph.pointmass[v])
        .collect();
    let mut sym = DMatrix::zeros(n, n);
    for &(a, b, c) in &graph.edges {
        for (x, y) in [(a, b), (b, a)] {
            let i = row[x];
            if i == usize::MAX {
                continue;
            }
            sym[(i, i)] += c / mass[i];
            let j = row[y];
            if j != usize::MAX {
                sym[(i, j)] -= c / (mass[i] * mass[j]).sqrt();
            }
        }
    }
    DiscreteOperator {
        model: graph.model,
        level: graph.level,
        bc,
        sym,
        mass,
        index_to_vertex,
        vertex_count: graph.vertex_count(),
        scale: graph.scale,
    }
}

/// Residual diagnostics of an oracle solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleReport {
    /// `max ||A v - lambda v||_inf / (|lambda| ||v||_inf)` over all pairs.
    pub max_relative_residual: f64,
    /// Same residual measured against the largest eigenvalue magnitude.
    pub max_normwise_residual: f64,
}

/// Full eigendecomposition with the default dimension cap.
pub fn dense_spectrum(op: &DiscreteOperator) -> Result<Spectrum> {
    dense_spectrum_with_report(op, DEFAULT_ORACLE_CAP).map(|(s, _)| s)
}

/// Flip `v` so its first entry of non-negligible size is positive.
pub fn normalize_sign(v: &mut [f64]) {
    let max = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if let Some(first) = v.iter().find(|x| x.abs() > 1e-10 * max) {
        if *first < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

/// Full eigendecomposition of `op` returning residual diagnostics.
///
/// Eigenfunctions have unit pointmass-weighted norm and the sign convention
/// of [`normalize_sign`], which makes results independent of solver internals.
pub fn dense_spectrum_with_report(
    op: &DiscreteOperator,
    cap: usize,
) -> Result<(Spectrum, OracleReport)> {
    let n = op.dimension();
    if n > cap {
        return Err(Error::Resource { dimension: n, cap });
    }
    let eig = SymmetricEigen::try_new(op.sym.clone(), f64::EPSILON, 0).ok_or_else(|| {
        Error::Numerical(format!(
            "symmetric eigensolver did not converge at dimension {n}"
        ))
    })?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let sw = &op.sym * &eig.eigenvectors;
    let lambda_max = eig.eigenvalues.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let mut report = OracleReport {
        max_relative_residual: 0.0,
        max_normwise_residual: 0.0,
    };
    let mut pairs = Vec::with_capacity(n);
    for &k in &order {
        let lambda = eig.eigenvalues[k];
        let w = eig.eigenvectors.column(k);
        let mut v_inf = 0.0f64;
        let mut r_inf = 0.0f64;
        let mut active = Vec::with_capacity(n);
        for i in 0..n {
            let s = op.mass[i].sqrt();
            let v = w[i] / s;
            active.push(v);
            v_inf = v_inf.max(v.abs());
            r_inf = r_inf.max(((sw[(i, k)] - lambda * w[i]) / s).abs());
        }
        if lambda.abs() > 0.0 {
            report.max_relative_residual = report
                .max_relative_residual
                .max(r_inf / (lambda.abs() * v_inf));
        }
        report.max_normwise_residual = report
            .max_normwise_residual
            .max(r_inf / (lambda_max * v_inf));
        let mut f = op.embed(&active);
        normalize_sign(&mut f);
        pairs.push(EigenPair {
            graph_eigenvalue: lambda / op.scale,
            eigenvalue: lambda,
            eigenfunction: f,
            genealogy: None,
            multiplicity: 1,
            provenance: Provenance::Oracle,
        });
    }
    if report.max_normwise_residual > 1e-8 {
        return Err(Error::Numerical(format!(
            "oracle residual {:.3e} relative to the spectral radius",
            report.max_normwise_residual
        )));
    }
    let mut spectrum = Spectrum {
        model: op.model,
        level: op.level,
        bc: op.bc,
        scale: op.scale,
        pairs,
    };
    spectrum.sort_and_cluster(CLUSTER_TOL);
    Ok((spectrum, report))
}

/// Effective resistance between vertices `a` and `b` of the conductance network.
pub fn effective_resistance(graph: &GraphApprox, a: usize, b: usize) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let n = graph.vertex_count();
    // Ground b and drop its row; inject a unit current at a.
    let idx: Vec<usize> = (0..n).filter(|&v| v != b).collect();
    let mut pos = vec![usize::MAX; n];
    for (i, &v) in idx.iter().enumerate() {
        pos[v] = i;
    }
    let mut lap = DMatrix::zeros(n - 1, n - 1);
    for &(x, y, c) in &graph.edges {
        for (s, t) in [(x, y), (y, x)] {
            if pos[s] == usize::MAX {
                continue;
            }
            lap[(pos[s], pos[s])] += c;
            if pos[t] != usize::MAX {
                lap[(pos[s], pos[t])] -= c;
            }
        }
    }
    let mut rhs = nalgebra::DVector::zeros(n - 1);
    rhs[pos[a]] = 1.0;
    let chol = lap
        .cholesky()
        .ok_or_else(|| Error::Numerical("grounded Laplacian is not positive definite".into()))?;
    Ok(chol.solve(&rhs)[pos[a]])
}
