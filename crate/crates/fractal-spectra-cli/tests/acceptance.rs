//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test -p fractal-spectra-cli --test acceptance -- --nocapture`.
//! Criteria whose reference data is not shipped with the repository are
//! reported as FAIL with the reason; their checkable parts must still hold.

#[path = "../../fractal-spectra/tests/common/mod.rs"]
mod common;

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use fractal_spectra::analysis::{
    pq_symmetry_indices, ratio_set, sturm_profile, weyl_alpha, weyl_series,
};
use fractal_spectra::graphs::{
    assemble_operator, build_interval_graph, build_sg_graph, dense_spectrum, GraphApprox,
    CLUSTER_TOL,
};
use fractal_spectra::interval_decimation::{
    full_spectrum_interval, interval_eigenvalues, renormalized_limit,
};
use fractal_spectra::models::{IntervalParams, ModelKind, SgParams};
use fractal_spectra::sg_decimation::{
    born_eigenspaces_sg, born_values_sg, counting_identity_sg, forbidden_sg,
    full_spectrum_sg_with_report, gamma_coeffs, gamma_eval, renormalized_limit_sg, sg_eigenvalues,
};
use fractal_spectra::spacetime::{
    delta, heat_solution, integral, nearest_vertex, orthonormal_basis, spectral_operator,
    wave_solution, DeltaConvention,
};
use fractal_spectra::spectrum::{
    cluster_ranges, BornClass, BoundaryCondition, Genealogy, Seed, Spectrum,
};
use fractal_spectra::variants::{
    asymmetry_norm, threshold_graph, threshold_partition, threshold_spectrum,
};

struct Outcome {
    pass: bool,
    detail: String,
    /// Reference data needed for a full verdict is unavailable.
    missing_data: Option<&'static str>,
}

impl Outcome {
    fn new(pass: bool, detail: String) -> Outcome {
        Outcome {
            pass,
            detail,
            missing_data: None,
        }
    }
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn fracspec(args: &[&str]) -> bool {
    Command::new(env!("CARGO_BIN_EXE_fracspec"))
        .args(args)
        .output()
        .map(|o| o.status.success())
        .unwrap_or(false)
}

/// Column `name` of a CSV file as floats.
fn column(path: &Path, name: &str) -> Vec<f64> {
    let mut r = csv::Reader::from_path(path).unwrap();
    let idx = r.headers().unwrap().iter().position(|h| h == name).unwrap();
    r.records()
        .map(|rec| rec.unwrap()[idx].parse().unwrap())
        .collect()
}

/// Emit a config's table to a temporary directory, optionally overriding the level.
fn emitted(config: &str, level: Option<usize>) -> (tempfile::TempDir, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join(format!("{config}.toml"));
    let mut args = vec!["--config".to_string(), cfg.to_str().unwrap().into()];
    if let Some(m) = level {
        args.extend(["--level".into(), m.to_string()]);
    }
    args.extend(["--out".into(), dir.path().to_str().unwrap().into()]);
    let refs: Vec<&str> = args.iter().map(String::as_str).collect();
    assert!(fracspec(&refs), "fracspec failed for {config}");
    let path = dir.path().join("spectrum.csv");
    (dir, path)
}

fn max_abs(f: &[f64]) -> f64 {
    f.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Sup-distance between two functions after unit sup-normalization, minimized over sign.
fn function_distance(a: &[f64], b: &[f64]) -> f64 {
    let (na, nb) = (max_abs(a), max_abs(b));
    let plus = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x / na - y / nb).abs())
        .fold(0.0, f64::max);
    let minus = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x / na + y / nb).abs())
        .fold(0.0, f64::max);
    plus.min(minus)
}

fn oracle(graph: &GraphApprox) -> Spectrum {
    dense_spectrum(&assemble_operator(graph, BoundaryCondition::Dirichlet)).unwrap()
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let (mut worst_value, mut worst_function, mut counts_ok) = (0.0f64, 0.0f64, true);
    for &p in &[0.1, 0.3, 0.5, 0.9] {
        for m in 1..=4 {
            let dec = full_spectrum_interval(p, m).unwrap();
            let orc = oracle(&build_interval_graph(&IntervalParams::new(p).unwrap(), m).unwrap());
            counts_ok &= dec.len() == 4usize.pow(m as u32) - 1 && orc.len() == dec.len();
            for (a, b) in dec.pairs.iter().zip(&orc.pairs) {
                worst_value = worst_value.max(rel(a.eigenvalue, b.eigenvalue));
                worst_function =
                    worst_function.max(function_distance(&a.eigenfunction, &b.eigenfunction));
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Outcome::new(
        counts_ok && worst_value <= 1e-8 && worst_function <= 1e-8 && secs <= 30.0,
        format!(
            "counts {}, max value error {worst_value:.2e}, max function error {worst_function:.2e}, {secs:.1} s",
            if counts_ok { "4^m-1" } else { "WRONG" }
        ),
    )
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let (mut worst, mut counts_ok, mut mult_ok) = (0.0f64, true, true);
    for &r in &[0.5, 1.0, 3.0] {
        for m in 1..=3 {
            let (dec, report) = full_spectrum_sg_with_report(r, m).unwrap();
            let orc = oracle(&build_sg_graph(&SgParams::new(r).unwrap(), m).unwrap());
            let want = (3usize.pow(2 * m as u32 + 1) - 3) / 2;
            counts_ok &= dec.len() == want && orc.len() == want;
            counts_ok &= report.last().map_or(m == 1, |c| c.total == want);
            mult_ok &= dec
                .pairs
                .iter()
                .zip(&orc.pairs)
                .all(|(a, b)| a.multiplicity == b.multiplicity);
            for (a, b) in dec.pairs.iter().zip(&orc.pairs) {
                worst = worst.max(rel(a.eigenvalue, b.eigenvalue));
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Outcome::new(
        counts_ok && mult_ok && worst <= 1e-6 && secs <= 300.0,
        format!(
            "counts {}, multiplicities {}, max value error {worst:.2e}, {secs:.1} s",
            if counts_ok { "(3^(2m+1)-3)/2" } else { "WRONG" },
            if mult_ok { "match" } else { "DIFFER" }
        ),
    )
}

fn criterion_3() -> Outcome {
    let mut worst = 0.0f64;
    for (config, p) in [
        ("interval_p01_spectrum", 0.1),
        ("interval_p09_spectrum", 0.9),
    ] {
        for m in 1..=3 {
            let (_dir, path) = emitted(config, Some(m));
            let got = column(&path, "renormalized_eigenvalue");
            let reference = common::sturm_eigenvalues(
                &build_interval_graph(&IntervalParams::new(p).unwrap(), m).unwrap(),
            );
            assert_eq!(got.len(), reference.len());
            for (a, b) in got.iter().zip(&reference) {
                worst = worst.max(rel(*a, *b));
            }
        }
    }
    let symmetry_ok = (1..=3).all(|m| pq_symmetry_indices(0.1, m).unwrap().agrees());
    assert!(
        worst <= 1e-5,
        "emitted table deviates from the bisection reference by {worst:.2e}"
    );
    assert!(
        symmetry_ok,
        "coincidence indices between p and 1-p differ from prediction"
    );
    Outcome {
        pass: false,
        detail: format!(
            "emitted CSV vs independent bisection max error {worst:.2e}; coincidence indices match prediction for m=1..3"
        ),
        missing_data: Some("reference eigenvalue tables for p=0.1 and p=0.9 are not available"),
    }
}

fn criterion_4() -> Outcome {
    let interval = renormalized_limit(1e-4, &Genealogy::born(1, Seed::G1), 40)
        .unwrap()
        .value;
    let sg = renormalized_limit_sg(1e4, 40).unwrap().value;
    Outcome::new(
        (interval - 4.0005).abs() <= 1e-3 && (sg - 9.0008).abs() <= 1e-2,
        format!("interval p=1e-4: {interval:.6}; gasket r=1e4: {sg:.6}"),
    )
}

fn criterion_5() -> Outcome {
    let (mut failures, mut functions) = (0, 0);
    for &p in &[0.1, 0.3, 0.5, 0.7, 0.9] {
        let s = full_spectrum_interval(p, 5).unwrap();
        let g = build_interval_graph(&IntervalParams::new(p).unwrap(), 5).unwrap();
        let x: Vec<f64> = g.coords.iter().map(|c| c[0]).collect();
        let fs: Vec<Vec<f64>> = s.pairs.iter().map(|q| q.eigenfunction.clone()).collect();
        let prof = sturm_profile(&fs, &x).unwrap();
        functions += prof.entries.len();
        failures += prof.failures();
    }
    Outcome::new(
        failures == 0 && functions == 5 * 1023,
        format!("{failures} failures over {functions} functions"),
    )
}

fn criterion_6() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    let cases: [(ModelKind, f64, usize); 5] = [
        (ModelKind::Interval, 0.1, 5),
        (ModelKind::Interval, 0.9, 5),
        (ModelKind::Sg, 0.5, 3),
        (ModelKind::Sg, 1.0, 3),
        (ModelKind::Sg, 3.0, 3),
    ];
    for (model, x, m) in cases {
        let values = match model {
            ModelKind::Interval => interval_eigenvalues(x, m).unwrap(),
            ModelKind::Sg => sg_eigenvalues(x, m).unwrap(),
        };
        let alpha = weyl_alpha(model, x).unwrap();
        let series = weyl_series(&values, alpha, 200).unwrap();
        ok &= (series.slope - alpha).abs() <= 0.05 && series.w_ratio() < 10.0;
        parts.push(format!(
            "{x}: |slope-alpha| {:.3}, W ratio {:.2}",
            (series.slope - alpha).abs(),
            series.w_ratio()
        ));
    }
    Outcome::new(ok, parts.join("; "))
}

fn criterion_7() -> Outcome {
    let v = interval_eigenvalues(1e-4, 5).unwrap();
    let interval = ratio_set(&v, 1, 0.01)
        .unwrap()
        .fraction_near(&[0.5, 1.0, 2.0], 0.02);
    // Every pairwise ratio of the limiting values 3/2, 9/2, 6 and 9.
    let limits = [1.5, 4.5, 6.0, 9.0];
    let targets: Vec<f64> = limits
        .iter()
        .flat_map(|a| limits.iter().map(move |b| a / b))
        .collect();
    let e = sg_eigenvalues(1e4, 3).unwrap();
    let distinct: Vec<f64> = cluster_ranges(&e, CLUSTER_TOL)
        .into_iter()
        .map(|r| e[r.start])
        .collect();
    let set = ratio_set(&distinct, 3, 0.01).unwrap();
    // Comparisons against eigenvalues tending to zero diverge; keep moderate ratios.
    let clusters: Vec<f64> = set
        .clusters(0.02, 0.0)
        .into_iter()
        .map(|(c, _)| c)
        .filter(|c| (0.01..=100.0).contains(c))
        .collect();
    let stray: Vec<f64> = clusters
        .iter()
        .copied()
        .filter(|c| !targets.iter().any(|t| (c - t).abs() <= 0.02))
        .collect();
    Outcome::new(
        interval >= 0.9 && stray.is_empty(),
        format!(
            "p=1e-4: {:.1}% near {{1/2,1,2}}; r=1e4: {} clusters, stray {stray:?}",
            100.0 * interval,
            clusters.len()
        ),
    )
}

fn criterion_8() -> Outcome {
    let mut residual = 0.0f64;
    for &r in &[0.01, 0.5, 1.0, 3.0, 100.0] {
        let b = forbidden_sg(r).unwrap();
        let coeffs = gamma_coeffs(r);
        for i in 1..=5 {
            let x = b.get(i);
            let scale: f64 = coeffs
                .iter()
                .enumerate()
                .map(|(k, c)| c.abs() * x.abs().powi(k as i32))
                .sum();
            residual = residual.max(gamma_eval(r, x).abs() / scale);
        }
    }
    let b = forbidden_sg(1.0).unwrap();
    let ordering =
        b.get(1) < b.get(4) && b.get(4) < b.get(5) && b.get(5) < b.get(2) && b.get(2) < b.get(3);
    let level_one = born_values_sg(1.0, 1).unwrap();
    let carried = level_one
        .iter()
        .filter(|v| matches!(v.class, BornClass::B1 | BornClass::B2))
        .all(|v| v.multiplicity == 1);
    let predicted = born_values_sg(1.0, 2).unwrap();
    let mult = |c: BornClass| {
        predicted
            .iter()
            .find(|v| v.class == c)
            .map(|v| v.multiplicity)
    };
    let predicted_ok = [BornClass::B3, BornClass::B4, BornClass::B5]
        .iter()
        .all(|c| mult(*c) == Some(6))
        && mult(BornClass::B7) == Some(9);
    let spaces = born_eigenspaces_sg(1.0, 2).unwrap();
    let extracted_ok = spaces.iter().all(|s| s.multiplicity() == s.expected);
    let (_, report) = full_spectrum_sg_with_report(1.0, 2).unwrap();
    let (lhs, rhs) = counting_identity_sg(1);
    let total = report.last().unwrap().total;
    Outcome::new(
        residual <= 1e-9 && ordering && carried && predicted_ok && extracted_ok && lhs == 120 && rhs == 120 && total == 120,
        format!(
            "gamma residual {residual:.1e}; r=1 ordering {}; level-1 b1,b2 multiplicity 1; level-2 b3/b4/b5 6, b7 9 {}; extracted eigenspaces {}; identity {lhs} = {rhs}, level total {total}",
            if ordering { "b1<b4<b5<b2<b3" } else { "WRONG" },
            if predicted_ok { "ok" } else { "WRONG" },
            if extracted_ok { "match" } else { "DIFFER" },
        ),
    )
}

fn criterion_9() -> Outcome {
    let mut standard = 0.0f64;
    for m in 1..=4 {
        let a = threshold_spectrum(0.3, 0.0, m, BoundaryCondition::Dirichlet)
            .unwrap()
            .eigenvalues();
        let b = full_spectrum_interval(0.3, m).unwrap().eigenvalues();
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            standard = standard.max(rel(*x, *y));
        }
    }
    let mut table = 0.0f64;
    for (config, c) in [("threshold_p03_c035", 0.35), ("threshold_p03_c05", 0.5)] {
        let (_dir, path) = emitted(config, None);
        let got = column(&path, "renormalized_eigenvalue");
        let reference = common::sturm_eigenvalues(
            &threshold_graph(&threshold_partition(0.3, c, 3).unwrap()).unwrap(),
        );
        assert_eq!(got.len(), reference.len());
        for (a, b) in got.iter().zip(&reference) {
            table = table.max(rel(*a, *b));
        }
    }
    let s = threshold_spectrum(0.3, 0.35, 4, BoundaryCondition::Dirichlet).unwrap();
    let g = threshold_graph(&threshold_partition(0.3, 0.35, 4).unwrap()).unwrap();
    let x: Vec<f64> = g.coords.iter().map(|c| c[0]).collect();
    let asym = s.pairs[s.len() / 2..]
        .iter()
        .map(|p| asymmetry_norm(&x, &p.eigenfunction))
        .fold(0.0, f64::max);
    assert!(
        standard <= 1e-8,
        "c = 0 differs from the standard spectrum by {standard:.2e}"
    );
    assert!(
        table <= 1e-5,
        "threshold tables deviate from the bisection reference by {table:.2e}"
    );
    assert!(asym > 1e-3, "no asymmetric eigenfunction in the upper half");
    Outcome {
        pass: false,
        detail: format!(
            "c=0 vs standard {standard:.1e}; emitted c=0.35/0.5 tables vs bisection {table:.1e}; max upper-half asymmetry {asym:.3}"
        ),
        missing_data: Some("reference threshold tables for c=0.35 and c=0.5 are not available"),
    }
}

fn criterion_10() -> Outcome {
    let mut drift = 0.0f64;
    let mut limit_err = 0.0f64;
    let mut fd_err = 0.0f64;
    let mut gram = 0.0f64;
    let neumann_cases: [(GraphApprox, [f64; 2]); 2] = [
        (
            build_interval_graph(&IntervalParams::new(0.5).unwrap(), 3).unwrap(),
            [0.5, 0.0],
        ),
        (
            build_sg_graph(&SgParams::new(1.0).unwrap(), 2).unwrap(),
            [0.5, 0.3],
        ),
    ];
    for (g, point) in &neumann_cases {
        let s = dense_spectrum(&assemble_operator(g, BoundaryCondition::Neumann)).unwrap();
        let basis = orthonormal_basis(&s, &g.pointmass).unwrap();
        gram = gram.max(basis.gram_deviation);
        let f = delta(
            &g.pointmass,
            nearest_vertex(&g.coords, *point),
            DeltaConvention::UnitMass,
        )
        .unwrap();
        let total = integral(&f, &g.pointmass);
        for k in 0..=20 {
            let u = heat_solution(&basis, &f, 1e-4 * 2f64.powi(k)).unwrap();
            drift = drift.max((integral(&u, &g.pointmass) - total).abs());
        }
        let lambda2 = basis
            .eigenvalues
            .iter()
            .copied()
            .find(|l| *l > 0.0)
            .unwrap();
        let u = heat_solution(&basis, &f, 50.0 / lambda2).unwrap();
        limit_err = limit_err.max(u.iter().map(|x| (x - total).abs()).fold(0.0, f64::max));
    }
    let dirichlet_cases = [
        (
            build_interval_graph(&IntervalParams::new(0.5).unwrap(), 3).unwrap(),
            full_spectrum_interval(0.5, 3).unwrap(),
        ),
        (
            build_sg_graph(&SgParams::new(1.0).unwrap(), 3).unwrap(),
            full_spectrum_sg_with_report(1.0, 3).unwrap().0,
        ),
    ];
    for (g, s) in &dirichlet_cases {
        let basis = orthonormal_basis(s, &g.pointmass).unwrap();
        gram = gram.max(basis.gram_deviation);
        let x0 = nearest_vertex(&g.coords, [0.5, 0.3]);
        let f = delta(&g.pointmass, x0, DeltaConvention::UnitValue).unwrap();
        let h = 1e-6;
        let v = wave_solution(&basis, &f, h);
        let proj = spectral_operator(|_| 1.0, &basis, &f);
        fd_err = fd_err.max(
            v.iter()
                .zip(&proj)
                .map(|(a, b)| (a / h - b).abs())
                .fold(0.0, f64::max),
        );
    }
    Outcome::new(
        drift <= 1e-9 && limit_err <= 1e-8 && fd_err <= 1e-4 && gram <= 1e-8,
        format!("mass drift {drift:.1e}; long-time error {limit_err:.1e}; wave velocity error {fd_err:.1e}; Gram deviation {gram:.1e}"),
    )
}

fn criterion_11() -> Outcome {
    let mut golden_files = 0;
    let mut mismatches = Vec::new();
    let mut entries: Vec<PathBuf> = std::fs::read_dir(configs())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "toml"))
        .collect();
    entries.sort();
    for cfg in &entries {
        let name = cfg.file_stem().unwrap().to_str().unwrap();
        let dir = tempfile::tempdir().unwrap();
        assert!(fracspec(&[
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            dir.path().to_str().unwrap()
        ]));
        for golden in std::fs::read_dir(configs().join("golden").join(name)).unwrap() {
            let golden = golden.unwrap().path();
            let fresh = dir.path().join(golden.file_name().unwrap());
            let a = csv::Reader::from_path(&golden)
                .unwrap()
                .into_records()
                .map(|r| r.unwrap())
                .collect::<Vec<_>>();
            let b = csv::Reader::from_path(&fresh)
                .unwrap()
                .into_records()
                .map(|r| r.unwrap())
                .collect::<Vec<_>>();
            let same = a.len() == b.len()
                && a.iter().zip(&b).all(|(x, y)| {
                    x.iter().zip(y.iter()).all(|(s, t)| {
                        match (s.parse::<f64>(), t.parse::<f64>()) {
                            (Ok(u), Ok(v)) => (u - v).abs() <= 1e-10 * u.abs().max(v.abs()),
                            _ => s == t,
                        }
                    })
                });
            if !same {
                mismatches.push(name.to_string());
            }
            golden_files += 1;
        }
    }
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let plots = [
        fracspec(&[
            "eigenfunctions",
            "--model",
            "interval",
            "--p",
            "0.5",
            "--level",
            "5",
            "--count",
            "6",
            "--svg",
            "--out",
            out,
        ]),
        fracspec(&[
            "counting", "--model", "sg", "--r", "1", "--level", "3", "--svg", "--out", out,
        ]),
        fracspec(&[
            "ratios", "--model", "interval", "--p", "1e-4", "--level", "5", "--svg", "--out", out,
        ]),
        fracspec(&[
            "heat",
            "--model",
            "interval",
            "--p",
            "0.5",
            "--level",
            "4",
            "--t",
            "0.005,0.05",
            "--svg",
            "--out",
            out,
        ]),
        fracspec(&[
            "wave", "--model", "interval", "--p", "0.5", "--level", "4", "--t", "0.1", "--svg",
            "--out", out,
        ]),
    ];
    let svgs: Vec<String> = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "svg"))
        .map(|p| std::fs::read_to_string(p).unwrap())
        .collect();
    let svg_ok = plots.iter().all(|x| *x)
        && svgs.len() == 6
        && svgs
            .iter()
            .all(|s| s.starts_with("<svg") && s.trim_end().ends_with("</svg>"));
    Outcome::new(
        mismatches.is_empty() && golden_files == 9 && svg_ok,
        format!(
            "{golden_files} golden data files from {} configs, mismatches {mismatches:?}; {} SVG plots well formed",
            entries.len(),
            svgs.len()
        ),
    )
}

type Check = (&'static str, fn() -> Outcome);

#[test]
fn acceptance() {
    let criteria: [Check; 11] = [
        ("interval decimation completeness", criterion_1),
        ("gasket decimation completeness", criterion_2),
        ("interval eigenvalue tables", criterion_3),
        ("limiting eigenvalues", criterion_4),
        ("Sturm suite", criterion_5),
        ("Weyl exponents", criterion_6),
        ("eigenvalue ratios", criterion_7),
        ("forbidden and born bookkeeping", criterion_8),
        ("threshold variant", criterion_9),
        ("heat and wave solvers", criterion_10),
        ("golden data and plots", criterion_11),
    ];
    let mut unexpected = Vec::new();
    for (i, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        match o.missing_data {
            Some(why) => println!(
                "[{verdict}] {:>2} {name}: {why}; checked: {}",
                i + 1,
                o.detail
            ),
            None => println!("[{verdict}] {:>2} {name}: {}", i + 1, o.detail),
        }
        if !o.pass && o.missing_data.is_none() {
            unexpected.push(i + 1);
        }
    }
    assert!(unexpected.is_empty(), "criteria failed: {unexpected:?}");
}
