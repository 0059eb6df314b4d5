use std::path::Path;
use std::process::{Command, Output};

fn fracspec(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fracspec"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn rows(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records()
        .map(|rec| rec.unwrap().iter().map(str::to_string).collect())
        .collect()
}

#[test]
fn interval_spectrum_rows_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = fracspec(&[
        "spectrum", "--model", "interval", "--p", "0.5", "--level", "1", "--out", out,
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let path = dir.path().join("spectrum.csv");
    let first = std::fs::read(&path).unwrap();
    let text = String::from_utf8(first.clone()).unwrap();
    assert_eq!(
        text.lines().next().unwrap(),
        "n,level,graph_eigenvalue,renormalized_eigenvalue,multiplicity,birth_level,seed,branches"
    );
    assert_eq!(rows(&path).len(), 3);
    fracspec(&[
        "spectrum", "--model", "interval", "--p", "0.5", "--level", "1", "--out", out,
    ]);
    assert_eq!(std::fs::read(&path).unwrap(), first);
}

#[test]
fn gasket_spectrum_has_counting_identity_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = fracspec(&[
        "spectrum", "--model", "sg", "--r", "0.5", "--level", "2", "--out", out,
    ]);
    assert!(o.status.success());
    let data = rows(&dir.path().join("spectrum.csv"));
    assert_eq!(data.len(), 120);
    // Every value carries a genealogy with a seed.
    assert!(data.iter().all(|r| !r[6].is_empty()));
}

#[test]
fn branches_are_digit_strings() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    fracspec(&[
        "spectrum", "--model", "interval", "--p", "0.3", "--level", "3", "--out", out,
    ]);
    let data = rows(&dir.path().join("spectrum.csv"));
    assert_eq!(data.len(), 63);
    assert!(data.iter().any(|r| r[7].len() == 2));
    assert!(data
        .iter()
        .all(|r| r[7].chars().all(|c| ('1'..='4').contains(&c))));
}

#[test]
fn interval_limit_row() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = fracspec(&["limits", "--model", "interval", "--p", "1e-4", "--out", out]);
    assert!(o.status.success());
    let data = rows(&dir.path().join("limits.csv"));
    let l1: f64 = data[0][1].parse().unwrap();
    assert!((l1 - 4.0005).abs() < 1e-3);
}

#[test]
fn weyl_writes_svg_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = fracspec(&[
        "weyl", "--model", "sg", "--r", "1", "--level", "3", "--out", out, "--svg",
    ]);
    assert!(o.status.success());
    let svg = std::fs::read_to_string(dir.path().join("weyl.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains("<path"));
    let summary = rows(&dir.path().join("weyl_summary.csv"));
    let alpha: f64 = summary[0][0].parse().unwrap();
    let slope: f64 = summary[0][1].parse().unwrap();
    assert!((alpha - slope).abs() < 0.05);
}

#[test]
fn heat_snapshots_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = fracspec(&[
        "heat",
        "--model",
        "interval",
        "--p",
        "0.5",
        "--level",
        "3",
        "--t",
        "0,0.005",
        "--delta-at",
        "0.5",
        "--format",
        "json",
        "--svg",
        "--out",
        out,
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("heat.json")).unwrap())
            .unwrap();
    assert_eq!(json.as_array().unwrap().len(), 2 * 65);
    assert!(dir.path().join("heat_000.svg").exists());
    assert!(dir.path().join("heat_001.svg").exists());
}

#[test]
fn config_file_with_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(
        &cfg,
        "task = \"counting\"\nmodel = \"interval\"\np = 0.1\nlevel = 2\n",
    )
    .unwrap();
    let out = dir.path().to_str().unwrap();
    let o = fracspec(&[
        "--config",
        cfg.to_str().unwrap(),
        "--level",
        "3",
        "--out",
        out,
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(rows(&dir.path().join("counting.csv")).len(), 63);
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    for args in [
        vec![
            "spectrum", "--model", "interval", "--p", "1.5", "--out", out,
        ],
        vec!["spectrum", "--model", "sg", "--p", "0.5", "--out", out],
        vec!["spectrum", "--p", "0.5", "--out", out],
        vec![
            "spectrum", "--model", "interval", "--p", "0.3", "--c", "1.2", "--out", out,
        ],
        vec!["sturm", "--model", "sg", "--r", "1", "--out", out],
        vec!["frobnicate", "--model", "sg"],
        vec!["spectrum", "--bogus"],
    ] {
        let o = fracspec(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn compute_failure_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    // Full decimation with eigenfunctions cannot separate a genuine eigenvalue
    // this close to a forbidden value.
    let o = fracspec(&[
        "spectrum", "--model", "interval", "--p", "1e-4", "--level", "5", "--out", out,
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!o.stderr.is_empty());
}
