//! Oscillation of Dirichlet interval eigenfunctions at level 5.

mod common;

use fractal_spectra::analysis::{comparison_failures, sturm_profile};
use fractal_spectra::graphs::build_interval_graph;
use fractal_spectra::interval_decimation::full_spectrum_interval;
use fractal_spectra::models::IntervalParams;

#[test]
fn level_five_oscillation_and_interlacing() {
    for &p in &[0.1, 0.3, 0.5, 0.7, 0.9] {
        let s = full_spectrum_interval(p, 5).unwrap();
        assert_eq!(s.len(), 1023);
        let g = build_interval_graph(&IntervalParams::new(p).unwrap(), 5).unwrap();
        let x: Vec<f64> = g.coords.iter().map(|c| c[0]).collect();
        let fs: Vec<Vec<f64>> = s.pairs.iter().map(|q| q.eigenfunction.clone()).collect();
        let prof = sturm_profile(&fs, &x).unwrap();
        assert_eq!(prof.entries.len(), 1023);
        assert_eq!(
            prof.failures(),
            0,
            "p = {p}: {:?}",
            prof.interlacing_failures
        );
        let cmp = comparison_failures(&prof, &x);
        assert!(cmp.is_empty(), "p = {p}: comparison failures {cmp:?}");
    }
}

#[test]
fn decimated_values_match_bisection_reference() {
    for &p in &[0.1, 0.3, 0.5, 0.9] {
        for m in 1..=5 {
            let g = build_interval_graph(&IntervalParams::new(p).unwrap(), m).unwrap();
            let reference = common::sturm_eigenvalues(&g);
            let values = full_spectrum_interval(p, m).unwrap().eigenvalues();
            assert_eq!(values.len(), reference.len());
            // Bisection is accurate to a few ulps of the spectral radius.
            let floor = 64.0 * f64::EPSILON * reference.last().unwrap();
            for (a, b) in values.iter().zip(&reference) {
                assert!((a - b).abs() <= 1e-9 * b + floor, "p={p} m={m}: {a} vs {b}");
            }
        }
    }
}
