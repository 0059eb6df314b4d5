//! Every config under `configs/` reproduces its golden data columns.

use std::path::{Path, PathBuf};
use std::process::Command;

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn read(path: &Path) -> (csv::StringRecord, Vec<csv::StringRecord>) {
    let mut r = csv::Reader::from_path(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    let header = r.headers().unwrap().clone();
    (header, r.records().map(Result::unwrap).collect())
}

fn close(a: &str, b: &str) -> bool {
    match (a.parse::<f64>(), b.parse::<f64>()) {
        (Ok(x), Ok(y)) => (x - y).abs() <= 1e-10 * x.abs().max(y.abs()) || (x - y).abs() < 1e-300,
        _ => a == b,
    }
}

#[test]
fn configs_match_golden_columns() {
    let mut checked = 0;
    let mut entries: Vec<_> = std::fs::read_dir(configs_dir())
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    entries.sort();
    for cfg in entries
        .into_iter()
        .filter(|p| p.extension().is_some_and(|e| e == "toml"))
    {
        let name = cfg.file_stem().unwrap().to_str().unwrap().to_string();
        let golden = configs_dir().join("golden").join(&name);
        let dir = tempfile::tempdir().unwrap();
        let o = Command::new(env!("CARGO_BIN_EXE_fracspec"))
            .args([
                "--config",
                cfg.to_str().unwrap(),
                "--out",
                dir.path().to_str().unwrap(),
            ])
            .output()
            .unwrap();
        assert!(
            o.status.success(),
            "{name}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
        for file in std::fs::read_dir(&golden).unwrap() {
            let file = file.unwrap().path();
            let (gh, grows) = read(&file);
            let (h, rows) = read(&dir.path().join(file.file_name().unwrap()));
            assert_eq!(gh, h, "{name}");
            assert_eq!(grows.len(), rows.len(), "{name}");
            for (i, (g, r)) in grows.iter().zip(&rows).enumerate() {
                for (a, b) in g.iter().zip(r.iter()) {
                    assert!(close(a, b), "{name} row {i}: {a} vs {b}");
                }
            }
            checked += 1;
        }
    }
    assert_eq!(checked, 9);
}
