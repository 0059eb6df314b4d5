//! Reference eigenvalues for path graphs by Sturm-sequence bisection on the
//! symmetrized tridiagonal Dirichlet matrix. Shares no code with the
//! decimation or the dense solver.

#![allow(dead_code)]

use fractal_spectra::graphs::GraphApprox;

/// Diagonal and off-diagonal of `M^(1/2) L M^(-1/2)` restricted to interior vertices.
fn tridiagonal(graph: &GraphApprox) -> (Vec<f64>, Vec<f64>) {
    let n = graph.vertex_count();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| graph.coords[a][0].total_cmp(&graph.coords[b][0]));
    let mut pos = vec![0; n];
    for (k, &v) in order.iter().enumerate() {
        pos[v] = k;
    }
    let mut cond = vec![0.0; n - 1];
    for &(a, b, c) in &graph.edges {
        let (i, j) = (pos[a].min(pos[b]), pos[a].max(pos[b]));
        assert_eq!(j, i + 1, "not a path graph");
        cond[i] += c;
    }
    let mass: Vec<f64> = order.iter().map(|&v| graph.pointmass[v]).collect();
    let diag = (1..n - 1)
        .map(|k| (cond[k - 1] + cond[k]) / mass[k])
        .collect();
    let off = (1..n - 2)
        .map(|k| -cond[k] / (mass[k] * mass[k + 1]).sqrt())
        .collect();
    (diag, off)
}

/// Number of eigenvalues strictly below `x`.
fn count_below(diag: &[f64], off: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut d = 1.0;
    for i in 0..diag.len() {
        let e2 = if i == 0 { 0.0 } else { off[i - 1] * off[i - 1] };
        d = diag[i] - x - e2 / d;
        if d == 0.0 {
            d = -f64::EPSILON * (diag[i].abs() + x.abs()).max(f64::MIN_POSITIVE);
        }
        if d < 0.0 {
            count += 1;
        }
    }
    count
}

/// All Dirichlet eigenvalues of an interval-type path graph, ascending. The
/// weights already carry the renormalization.
pub fn sturm_eigenvalues(graph: &GraphApprox) -> Vec<f64> {
    let (diag, off) = tridiagonal(graph);
    let n = diag.len();
    let hi = (0..n)
        .map(|i| {
            let l = if i > 0 { off[i - 1].abs() } else { 0.0 };
            let r = if i + 1 < n { off[i].abs() } else { 0.0 };
            diag[i] + l + r
        })
        .fold(0.0f64, f64::max);
    (0..n)
        .map(|k| {
            let (mut a, mut b) = (0.0, hi);
            for _ in 0..200 {
                let mid = 0.5 * (a + b);
                if mid <= a || mid >= b {
                    break;
                }
                if count_below(&diag, &off, mid) > k {
                    b = mid;
                } else {
                    a = mid;
                }
            }
            0.5 * (a + b)
        })
        .collect()
}
