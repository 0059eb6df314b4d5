//! Spectral statistics: counting function, Weyl ratio, eigenvalue ratios,
//! oscillation profiles of interval eigenfunctions and the `p <-> 1-p`
//! coincidence pattern.

use crate::error::{Error, Result};
use crate::interval_decimation::full_spectrum_interval;
use crate::models::{IntervalParams, ModelKind, SgParams};

/// Number of eigenvalues `<= x`, counted with multiplicity, in a sorted slice.
pub fn counting_function(sorted: &[f64], x: f64) -> usize {
    sorted.partition_point(|&v| v <= x)
}

/// Power-law exponent of eigenvalue growth.
///
/// Interval: `log 4 / log(4/pq)`. Gasket: `log 9 / log(1/L(r))`.
pub fn weyl_alpha(model: ModelKind, parameter: f64) -> Result<f64> {
    match model {
        ModelKind::Interval => {
            let params = IntervalParams::new(parameter)?;
            Ok(4f64.ln() / params.renorm_factor().ln())
        }
        ModelKind::Sg => {
            let params = SgParams::new(parameter)?;
            Ok(9f64.ln() / params.renorm_factor().ln())
        }
    }
}

/// One grid point of a Weyl plot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeylSample {
    pub lambda: f64,
    pub count: usize,
    /// `N(lambda) / lambda^alpha`.
    pub w: f64,
}

/// Weyl ratio sampled on a logarithmic grid.
#[derive(Debug, Clone, PartialEq)]
pub struct WeylSeries {
    pub alpha: f64,
    pub samples: Vec<WeylSample>,
    /// Least-squares slope of `log N` against `log lambda` over the middle window.
    pub slope: f64,
    /// Extremes of `W` over the middle window.
    pub w_max: f64,
    pub w_min: f64,
}

impl WeylSeries {
    pub fn w_ratio(&self) -> f64 {
        self.w_max / self.w_min
    }
}

/// Fraction of the log-range trimmed from each end before regression.
pub const WEYL_TRIM: f64 = 0.1;

/// Sample `N` and `W` at `grid` log-spaced points between the smallest
/// positive eigenvalue and the largest one.
pub fn weyl_series(sorted: &[f64], alpha: f64, grid: usize) -> Result<WeylSeries> {
    let positive: Vec<f64> = sorted.iter().copied().filter(|&x| x > 0.0).collect();
    if positive.len() < 2 || grid < 3 {
        return Err(Error::Precondition(
            "a Weyl series needs two positive eigenvalues and three grid points".into(),
        ));
    }
    let lo = positive[0].ln();
    let hi = positive[positive.len() - 1].ln();
    let samples: Vec<WeylSample> = (0..grid)
        .map(|k| {
            let lambda = (lo + (hi - lo) * k as f64 / (grid - 1) as f64).exp();
            // Guard the endpoints against rounding in exp(ln x).
            let lambda = lambda.clamp(positive[0], positive[positive.len() - 1]);
            let count = counting_function(sorted, lambda);
            WeylSample {
                lambda,
                count,
                w: count as f64 / lambda.powf(alpha),
            }
        })
        .collect();
    let (a, b) = (lo + WEYL_TRIM * (hi - lo), hi - WEYL_TRIM * (hi - lo));
    let window: Vec<&WeylSample> = samples
        .iter()
        .filter(|s| (a..=b).contains(&s.lambda.ln()) && s.count > 0)
        .collect();
    if window.len() < 2 {
        return Err(Error::Precondition(
            "regression window holds fewer than two samples".into(),
        ));
    }
    let xs: Vec<f64> = window.iter().map(|s| s.lambda.ln()).collect();
    let ys: Vec<f64> = window.iter().map(|s| (s.count as f64).ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let w_max = window.iter().map(|s| s.w).fold(f64::MIN, f64::max);
    let w_min = window.iter().map(|s| s.w).fold(f64::MAX, f64::min);
    Ok(WeylSeries {
        alpha,
        samples,
        slope: sxy / sxx,
        w_max,
        w_min,
    })
}

/// Windowed eigenvalue ratios with a histogram.
#[derive(Debug, Clone, PartialEq)]
pub struct RatioSet {
    /// `lambda_j / lambda_i` for `0 < |i - j| <= window`, both orders.
    pub ratios: Vec<f64>,
    /// `(bin centre, count)` for non-empty bins.
    pub histogram: Vec<(f64, usize)>,
    /// Pairs skipped because the smaller eigenvalue was negligible.
    pub excluded: usize,
}

impl RatioSet {
    /// Fraction of ratios within `tol` of some target.
    pub fn fraction_near(&self, targets: &[f64], tol: f64) -> f64 {
        if self.ratios.is_empty() {
            return 0.0;
        }
        let hits = self
            .ratios
            .iter()
            .filter(|x| targets.iter().any(|t| (*x - t).abs() <= tol))
            .count();
        hits as f64 / self.ratios.len() as f64
    }

    /// Groups of sorted ratios whose neighbours differ by at most `gap`,
    /// kept when they hold at least `min_fraction` of all ratios. Returns
    /// `(mean, size)` per group.
    pub fn clusters(&self, gap: f64, min_fraction: f64) -> Vec<(f64, usize)> {
        let mut sorted = self.ratios.clone();
        sorted.sort_by(f64::total_cmp);
        let mut out = Vec::new();
        let mut start = 0;
        for i in 1..=sorted.len() {
            if i == sorted.len() || sorted[i] - sorted[i - 1] > gap {
                let group = &sorted[start..i];
                if group.len() as f64 >= min_fraction * sorted.len() as f64 {
                    out.push((group.iter().sum::<f64>() / group.len() as f64, group.len()));
                }
                start = i;
            }
        }
        out
    }
}

/// Relative cut below which an eigenvalue is treated as near zero in ratios.
pub const RATIO_FLOOR: f64 = 1e-6;

/// Ratios of renormalized eigenvalues within an index window.
///
/// Pairs whose smaller member is below `RATIO_FLOOR` times the median are
/// skipped. Histogram bins have width `bin_width` starting at 0.
pub fn ratio_set(sorted: &[f64], window: usize, bin_width: f64) -> Result<RatioSet> {
    if sorted.is_empty() || window == 0 || !(bin_width > 0.0) {
        return Err(Error::Precondition(
            "ratios need a nonempty spectrum, a positive window and a positive bin width".into(),
        ));
    }
    let median = sorted[sorted.len() / 2].abs();
    let floor = RATIO_FLOOR * median;
    let mut ratios = Vec::new();
    let mut excluded = 0;
    for i in 0..sorted.len() {
        for j in i + 1..(i + window + 1).min(sorted.len()) {
            let (a, b) = (sorted[i], sorted[j]);
            if a.abs().min(b.abs()) < floor {
                excluded += 1;
                continue;
            }
            ratios.push(b / a);
            ratios.push(a / b);
        }
    }
    let mut bins = std::collections::BTreeMap::new();
    for &x in &ratios {
        *bins.entry((x / bin_width).floor() as i64).or_insert(0usize) += 1;
    }
    let histogram = bins
        .into_iter()
        .map(|(k, n)| ((k as f64 + 0.5) * bin_width, n))
        .collect();
    Ok(RatioSet {
        ratios,
        histogram,
        excluded,
    })
}

/// Largest ratio between consecutive distinct eigenvalues in the upper half
/// of the spectrum, an empirical gap indicator.
pub fn largest_upper_gap(sorted: &[f64]) -> f64 {
    let upper = &sorted[sorted.len() / 2..];
    upper
        .windows(2)
        .filter(|w| w[0] > 0.0)
        .map(|w| w[1] / w[0])
        .fold(1.0, f64::max)
}

/// Oscillation data of one interval eigenfunction.
#[derive(Debug, Clone, PartialEq)]
pub struct SturmEntry {
    /// One-based index in the sorted spectrum.
    pub index: usize,
    pub zeros: usize,
    pub extrema: usize,
    /// Interior zero positions (vertex position for exact vertex zeros,
    /// linear interpolation otherwise).
    pub zero_locations: Vec<f64>,
    /// Zeros that fell exactly on a vertex.
    pub vertex_zeros: usize,
    /// Every stretch between consecutive zeros (boundary included) holds
    /// exactly one extremum.
    pub one_extremum_per_nodal_domain: bool,
    /// Local maxima are positive and local minima negative.
    pub extrema_signs_ok: bool,
}

impl SturmEntry {
    /// Zero and extremum counts expected for the `index`-th eigenfunction.
    pub fn counts_ok(&self) -> bool {
        self.zeros + 1 == self.index && self.extrema == self.index
    }
}

/// Oscillation profile of a sorted family of Dirichlet interval eigenfunctions.
#[derive(Debug, Clone, PartialEq)]
pub struct SturmProfile {
    pub entries: Vec<SturmEntry>,
    /// Indices `i` for which the zeros of `f_{i+1}` do not interlace with
    /// those of `f_i` (exactly one per stretch between consecutive zeros).
    pub interlacing_failures: Vec<usize>,
}

impl SturmProfile {
    /// Total number of violated checks.
    pub fn failures(&self) -> usize {
        self.entries
            .iter()
            .filter(|e| !(e.counts_ok() && e.one_extremum_per_nodal_domain && e.extrema_signs_ok))
            .count()
            + self.interlacing_failures.len()
    }
}

fn sturm_entry(index: usize, f: &[f64], x: &[f64]) -> SturmEntry {
    let n = f.len();
    let max = f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let tiny = 1e-12 * max;
    let interior = 1..n - 1;
    let mut zero_locations = Vec::new();
    let mut vertex_zeros = 0;
    let mut last: Option<(usize, f64)> = None;
    for k in interior.clone() {
        if f[k].abs() <= tiny {
            continue;
        }
        if let Some((j, prev)) = last {
            if prev.signum() != f[k].signum() {
                if k - j > 1 {
                    // Exact vertex zeros between j and k: report the middle one.
                    vertex_zeros += 1;
                    zero_locations.push(x[(j + k) / 2]);
                } else {
                    let t = prev / (prev - f[k]);
                    zero_locations.push(x[j] + t * (x[k] - x[j]));
                }
            }
        }
        last = Some((k, f[k]));
    }
    let mut extrema_at = Vec::new();
    let mut extrema_signs_ok = true;
    for k in interior {
        let (a, b, c) = (f[k - 1], f[k], f[k + 1]);
        let is_max = b > a && b > c;
        let is_min = b < a && b < c;
        if is_max || is_min {
            extrema_at.push(x[k]);
            if (is_max && b <= 0.0) || (is_min && b >= 0.0) {
                extrema_signs_ok = false;
            }
        }
    }
    let mut bounds = vec![x[0]];
    bounds.extend(&zero_locations);
    bounds.push(x[n - 1]);
    let one_extremum_per_nodal_domain = bounds
        .windows(2)
        .all(|w| extrema_at.iter().filter(|&&e| e > w[0] && e < w[1]).count() == 1);
    SturmEntry {
        index,
        zeros: zero_locations.len(),
        extrema: extrema_at.len(),
        zero_locations,
        vertex_zeros,
        one_extremum_per_nodal_domain,
        extrema_signs_ok,
    }
}

/// Zero counts in each stretch between consecutive points of `bounds`.
fn zeros_per_stretch(bounds: &[f64], zeros: &[f64]) -> Vec<usize> {
    bounds
        .windows(2)
        .map(|w| zeros.partition_point(|&z| z < w[1]) - zeros.partition_point(|&z| z <= w[0]))
        .collect()
}

fn with_ends(zeros: &[f64], x: &[f64]) -> Vec<f64> {
    let mut b = vec![x[0]];
    b.extend(zeros);
    b.push(x[x.len() - 1]);
    b
}

/// Profile of eigenfunctions sorted by eigenvalue, sampled at positions `x`
/// (boundary vertices included).
pub fn sturm_profile(functions: &[Vec<f64>], x: &[f64]) -> Result<SturmProfile> {
    if x.len() < 3 || functions.iter().any(|f| f.len() != x.len()) {
        return Err(Error::Precondition(
            "eigenfunctions must share the vertex positions and have an interior".into(),
        ));
    }
    let entries: Vec<SturmEntry> = functions
        .iter()
        .enumerate()
        .map(|(i, f)| sturm_entry(i + 1, f, x))
        .collect();
    let interlacing_failures = entries
        .windows(2)
        .filter(|w| {
            let bounds = with_ends(&w[0].zero_locations, x);
            zeros_per_stretch(&bounds, &w[1].zero_locations)
                .iter()
                .any(|&c| c != 1)
        })
        .map(|w| w[0].index)
        .collect();
    Ok(SturmProfile {
        entries,
        interlacing_failures,
    })
}

/// Pairs `(i, j)`, `i < j`, where some stretch between consecutive zeros of
/// `f_i` holds no zero of `f_j`.
pub fn comparison_failures(profile: &SturmProfile, x: &[f64]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for (a, ei) in profile.entries.iter().enumerate() {
        let bounds = with_ends(&ei.zero_locations, x);
        for ej in &profile.entries[a + 1..] {
            if zeros_per_stretch(&bounds, &ej.zero_locations).contains(&0) {
                out.push((ei.index, ej.index));
            }
        }
    }
    out
}

/// Indices where `lambda_{n,p}` and `lambda_{n,1-p}` coincide.
#[derive(Debug, Clone, PartialEq)]
pub struct PqSymmetry {
    /// `n` with `n = 4^a / 2 (mod 4^a)` for some `1 <= a <= m`.
    pub predicted: Vec<usize>,
    /// `n` with relative difference at most `1e-8`.
    pub measured: Vec<usize>,
}

impl PqSymmetry {
    pub fn agrees(&self) -> bool {
        self.predicted == self.measured
    }
}

/// One-based indices in `1..4^m` predicted to be shared by `p` and `1-p`.
pub fn predicted_pq_indices(m: usize) -> Vec<usize> {
    (1..1usize << (2 * m))
        .filter(|&n| (1..=m).any(|a| n % (1usize << (2 * a)) == 1usize << (2 * a - 1)))
        .collect()
}

/// Predicted and measured coincidence sets of the level-m spectra for `p` and `1-p`.
pub fn pq_symmetry_indices(p: f64, m: usize) -> Result<PqSymmetry> {
    if m == 0 {
        return Err(Error::Precondition("level must be at least 1".into()));
    }
    let a = full_spectrum_interval(p, m)?.eigenvalues();
    let b = full_spectrum_interval(1.0 - p, m)?.eigenvalues();
    let measured = a
        .iter()
        .zip(&b)
        .enumerate()
        .filter(|(_, (x, y))| (*x - *y).abs() <= 1e-8 * x.abs())
        .map(|(i, _)| i + 1)
        .collect();
    Ok(PqSymmetry {
        predicted: predicted_pq_indices(m),
        measured,
    })
}
