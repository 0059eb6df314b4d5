//! Model parameters and cell-address arithmetic.
//!
//! The interval model splits `[0,1]` into four quarters with the measure
//! weights `(p, q, q, p)/2` and the resistance weights `(q, p, p, q)/2`,
//! where `q = 1 - p`. The gasket model uses the twice-iterated Sierpinski
//! gasket system of nine maps, indexed by pairs `(j, k)`; the three corner
//! maps (`j == k`) carry measure `mu0` and resistance `r0`, the six others
//! carry `mu1` and `r1`.

use crate::error::{Error, Result};

/// Smallest admissible value of `p` and of `1 - p`.
pub const P_MIN: f64 = 1e-9;
/// Admissible range of the gasket parameter `r`.
pub const R_MIN: f64 = 1e-9;
pub const R_MAX: f64 = 1e9;

/// The two fractal models.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    Interval,
    Sg,
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ModelKind::Interval => write!(f, "interval"),
            ModelKind::Sg => write!(f, "sg"),
        }
    }
}

/// Address of an m-cell, most significant (level-1) letter first.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum CellWord {
    /// Letters in `0..4`.
    Interval(Vec<u8>),
    /// Letter pairs `(j, k)` with `j, k` in `0..3`.
    Sg(Vec<(u8, u8)>),
}

impl CellWord {
    /// Validated interval word.
    pub fn interval(letters: Vec<u8>) -> Result<Self> {
        if let Some(&bad) = letters.iter().find(|&&l| l > 3) {
            return Err(Error::Precondition(format!(
                "interval letter {bad} is not in 0..4"
            )));
        }
        Ok(CellWord::Interval(letters))
    }

    /// Validated gasket word.
    pub fn sg(letters: Vec<(u8, u8)>) -> Result<Self> {
        if let Some(&(j, k)) = letters.iter().find(|&&(j, k)| j > 2 || k > 2) {
            return Err(Error::Precondition(format!(
                "gasket letter ({j},{k}) is not a pair over 0..3"
            )));
        }
        Ok(CellWord::Sg(letters))
    }

    pub fn model(&self) -> ModelKind {
        match self {
            CellWord::Interval(_) => ModelKind::Interval,
            CellWord::Sg(_) => ModelKind::Sg,
        }
    }

    /// Word length, i.e. the level of the cell.
    pub fn len(&self) -> usize {
        match self {
            CellWord::Interval(l) => l.len(),
            CellWord::Sg(l) => l.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Number of outer letters: interval letters 0 or 3, gasket pairs with `j == k`.
    pub fn outer_count(&self) -> usize {
        match self {
            CellWord::Interval(l) => l.iter().filter(|&&x| is_outer_interval(x)).count(),
            CellWord::Sg(l) => l.iter().filter(|&&(j, k)| j == k).count(),
        }
    }
}

/// True for the two interval maps touching the boundary.
#[inline]
pub fn is_outer_interval(letter: u8) -> bool {
    letter == 0 || letter == 3
}

/// Interval parameter `p`; `q = 1 - p` is always derived.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntervalParams {
    p: f64,
}

impl IntervalParams {
    pub fn new(p: f64) -> Result<Self> {
        if !p.is_finite() || !(P_MIN..=1.0 - P_MIN).contains(&p) {
            return Err(Error::InvalidParameter {
                name: "p",
                value: p,
                reason: format!("must lie in [{P_MIN}, {}]", 1.0 - P_MIN),
            });
        }
        Ok(Self { p })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        1.0 - self.p
    }

    /// Per-level factor `4/(pq)` converting graph eigenvalues to the operator scale.
    pub fn renorm_factor(&self) -> f64 {
        4.0 / (self.p * self.q())
    }

    /// `(measure, resistance)` of one letter relative to its parent cell.
    pub fn letter_weights(&self, letter: u8) -> (f64, f64) {
        let (p, q) = (self.p, self.q());
        if is_outer_interval(letter) {
            (p / 2.0, q / 2.0)
        } else {
            (q / 2.0, p / 2.0)
        }
    }

    /// `(measure, resistance) = (p^i q^(m-i) / 2^m, q^i p^(m-i) / 2^m)` with `i` the outer count.
    pub fn cell_weights(&self, word: &CellWord) -> Result<(f64, f64)> {
        match word {
            CellWord::Interval(letters) => Ok(letters.iter().fold((1.0, 1.0), |(mu, res), &l| {
                let (a, b) = self.letter_weights(l);
                (mu * a, res * b)
            })),
            CellWord::Sg(_) => Err(Error::Precondition(
                "interval weights requested for a gasket word".into(),
            )),
        }
    }
}

/// Gasket parameter `r = r0/r1` with its derived weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SgParams {
    r: f64,
}

impl SgParams {
    pub fn new(r: f64) -> Result<Self> {
        if !r.is_finite() || !(R_MIN..=R_MAX).contains(&r) {
            return Err(Error::InvalidParameter {
                name: "r",
                value: r,
                reason: format!("must lie in [{R_MIN}, {R_MAX}]"),
            });
        }
        Ok(Self { r })
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    fn d(&self) -> f64 {
        let r = self.r;
        9.0 * r * r + 26.0 * r + 15.0
    }

    /// Measure of each corner map.
    pub fn mu0(&self) -> f64 {
        1.0 / (3.0 * (1.0 + 2.0 * self.r))
    }

    /// Measure of each of the six non-corner maps.
    pub fn mu1(&self) -> f64 {
        self.r / (3.0 * (1.0 + 2.0 * self.r))
    }

    /// Resistance scaling of the corner maps.
    pub fn r0(&self) -> f64 {
        6.0 * self.r * (self.r + 2.0) / self.d()
    }

    /// Resistance scaling of the non-corner maps.
    pub fn r1(&self) -> f64 {
        6.0 * (self.r + 2.0) / self.d()
    }

    /// Effective resistance between two corners of the level-1 network with unit edges.
    pub fn rho(&self) -> f64 {
        self.d() / (6.0 * (self.r + 2.0))
    }

    /// `L(r) = mu0 r0 = mu1 r1`.
    pub fn l(&self) -> f64 {
        l_of(self.r)
    }

    /// Per-level factor `1/L(r)`.
    pub fn renorm_factor(&self) -> f64 {
        1.0 / self.l()
    }

    /// `(measure, conductance scale)` of one letter relative to its parent.
    pub fn letter_weights(&self, (j, k): (u8, u8)) -> (f64, f64) {
        if j == k {
            (self.mu0(), 1.0 / self.r0())
        } else {
            (self.mu1(), 1.0 / self.r1())
        }
    }

    /// `(mu0^i mu1^(m-i), r0^-i r1^-(m-i))` with `i` the outer count.
    pub fn cell_weights(&self, word: &CellWord) -> Result<(f64, f64)> {
        match word {
            CellWord::Sg(letters) => Ok(letters.iter().fold((1.0, 1.0), |(mu, c), &l| {
                let (a, b) = self.letter_weights(l);
                (mu * a, c * b)
            })),
            CellWord::Interval(_) => Err(Error::Precondition(
                "gasket weights requested for an interval word".into(),
            )),
        }
    }
}

/// Closed form of `L(r)`.
pub fn l_of(r: f64) -> f64 {
    2.0 * r * (r + 2.0) / ((2.0 * r + 1.0) * (9.0 * r * r + 26.0 * r + 15.0))
}

/// The `r` maximizing `L(r)`, i.e. minimizing the renormalization factor.
///
/// Golden-section search over `(1e-4, 10)` to a bracket width of `1e-8`.
pub fn r_max() -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (1e-4, 10.0);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (l_of(c), l_of(d));
    while b - a > 1e-8 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = l_of(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = l_of(d);
        }
    }
    0.5 * (a + b)
}

/// The other parameter `r'` with `L(r') = L(r)`, found by bisection on the
/// opposite side of [`r_max`].
pub fn l_partner(params: &SgParams) -> f64 {
    let rm = r_max();
    let target = params.l();
    let (mut lo, mut hi) = if params.r() < rm {
        (rm, R_MAX)
    } else {
        (R_MIN, rm)
    };
    // L is monotone on each side of its maximum.
    let increasing = lo < rm;
    for _ in 0..400 {
        let mid = if hi / lo > 4.0 {
            (lo * hi).sqrt()
        } else {
            0.5 * (lo + hi)
        };
        let above = l_of(mid) > target;
        if above == increasing {
            hi = mid;
        } else {
            lo = mid;
        }
        if (hi - lo) <= 1e-15 * hi {
            break;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn outer_counts() {
        assert_eq!(CellWord::interval(vec![0, 3]).unwrap().outer_count(), 2);
        assert_eq!(CellWord::interval(vec![1, 2]).unwrap().outer_count(), 0);
        assert_eq!(CellWord::sg(vec![(0, 0), (0, 1)]).unwrap().outer_count(), 1);
        assert!(CellWord::interval(vec![4]).is_err());
        assert!(CellWord::sg(vec![(0, 3)]).is_err());
    }

    #[test]
    fn interval_weights() {
        let half = IntervalParams::new(0.5).unwrap();
        let w = half.cell_weights(&CellWord::Interval(vec![0])).unwrap();
        assert_eq!(w, (0.25, 0.25));
        assert_eq!(
            half.cell_weights(&CellWord::Interval(vec![])).unwrap(),
            (1.0, 1.0)
        );
        let p01 = IntervalParams::new(0.1).unwrap();
        let (mu, res) = p01.cell_weights(&CellWord::Interval(vec![1])).unwrap();
        assert!((mu - 0.45).abs() < 1e-15 && (res - 0.05).abs() < 1e-15);
        assert_eq!(half.renorm_factor(), 16.0);
    }

    #[test]
    fn parameter_bounds() {
        assert!(IntervalParams::new(0.0).is_err());
        assert!(IntervalParams::new(1.0).is_err());
        assert!(IntervalParams::new(1e-5).is_ok());
        assert!(SgParams::new(1e5).is_ok());
        assert!(SgParams::new(-1.0).is_err());
        assert!(SgParams::new(f64::NAN).is_err());
    }

    #[test]
    fn sg_identities() {
        for &r in &[1e-3, 0.3, 1.0, 3.0, 1e4] {
            let s = SgParams::new(r).unwrap();
            assert!((3.0 * s.mu0() + 6.0 * s.mu1() - 1.0).abs() < 1e-14);
            assert!((s.r0() / s.r1() - r).abs() <= 1e-14 * r.max(1.0));
            assert!((s.mu0() * s.r0() - s.l()).abs() < 1e-14);
            assert!((s.mu1() * s.r1() - s.l()).abs() < 1e-14);
        }
        let one = SgParams::new(1.0).unwrap();
        assert!((one.renorm_factor() - 25.0).abs() < 1e-12);
        let (mu, c) = one.cell_weights(&CellWord::Sg(vec![(0, 0)])).unwrap();
        assert!((mu - 1.0 / 9.0).abs() < 1e-15 && (c - 25.0 / 9.0).abs() < 1e-13);
        let three = SgParams::new(3.0).unwrap();
        let (mu, c) = three.cell_weights(&CellWord::Sg(vec![(0, 1)])).unwrap();
        assert!((mu - 3.0 / 21.0).abs() < 1e-15);
        assert!((c - 174.0 / 30.0).abs() < 1e-13);
    }

    #[test]
    fn r_max_location() {
        let rm = r_max();
        assert!((rm - 0.641677).abs() < 1e-6, "r_max = {rm}");
        for &r in &[0.1, 0.5, 0.64, 0.65, 2.0] {
            assert!(l_of(r) <= l_of(rm) + 1e-15);
        }
    }

    #[test]
    fn l_partner_matches() {
        for &r in &[0.05, 0.3, 1.0, 3.0, 20.0] {
            let s = SgParams::new(r).unwrap();
            let rp = l_partner(&s);
            assert!((rp - r).abs() > 1e-3);
            assert!((l_of(rp) - s.l()).abs() < 1e-10, "r={r} r'={rp}");
        }
    }

    #[test]
    fn sg_total_measure_level_two() {
        let s = SgParams::new(3.0).unwrap();
        let letters: Vec<(u8, u8)> = (0..3).flat_map(|j| (0..3).map(move |k| (j, k))).collect();
        let mut total = 0.0;
        for &a in &letters {
            for &b in &letters {
                total += s.cell_weights(&CellWord::Sg(vec![a, b])).unwrap().0;
            }
        }
        assert!((total - 1.0).abs() < 1e-12);
    }
}
