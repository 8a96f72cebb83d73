use std::path::Path;
use std::process::Command;

fn run(config: &str, dir: &Path, extra: &[&str]) -> std::process::Output {
    let cfg = dir.join("config.toml");
    std::fs::write(&cfg, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_christoffel-lab"))
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .args(extra)
        .output()
        .unwrap()
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("out/manifest.json")).unwrap()).unwrap()
}

const CHRISTOFFEL: &str = r#"
experiment = "christoffel"
potential = { kind = "zero" }
[grids]
xi = [0.5, 1.0, 2.0, 4.0]
lengths = [500.0]
"#;

#[test]
fn christoffel_rows_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(CHRISTOFFEL, dir.path(), &["--strict"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("out/data/christoffel.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "xi,L,L_lambda,reference,deviation");
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 4);
    for r in &rows {
        assert_eq!(r[3], 2.0);
        assert!(r[4] <= 0.02);
    }
    let m = manifest(dir.path());
    assert_eq!(m["tolerances"]["christoffel_sup"], 0.02);
    assert!(m["wall_time_seconds"].as_f64().unwrap() >= 0.0);
    assert_eq!(m["config"]["experiment"], "christoffel");
    assert!(m["versions"]["christoffel-lab"].is_string());
}

#[test]
fn output_independent_of_threads() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let cfg = r#"
experiment = "universality"
potential = { kind = "oscillating_example" }
[grids]
xi = [2.0]
lengths = [40.0]
z = { start = -1.0, stop = 1.0, n = 7 }
[tolerances]
universality_sup = 10.0
"#;
    assert_eq!(run(cfg, a.path(), &["--threads", "1"]).status.code(), Some(0));
    let out = Command::new(env!("CARGO_BIN_EXE_christoffel-lab"))
        .env("CHRISTOFFEL_LAB_THREADS", "4")
        .arg("--config")
        .arg(a.path().join("config.toml"))
        .arg("--out")
        .arg(b.path().join("out"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let read = |d: &Path| std::fs::read(d.join("out/data/universality.csv")).unwrap();
    assert_eq!(read(a.path()), read(b.path()));
    assert_eq!(manifest(b.path())["threads"], 4);
}

#[test]
fn martin_reports_critical_point() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "experiment = \"martin\"\npotential = { kind = \"zero\" }\nset = { b0 = 0.0, gaps = [[1.0, 2.0]] }\n";
    let out = run(cfg, dir.path(), &["--strict"]);
    assert_eq!(out.status.code(), Some(0));
    let m = manifest(dir.path());
    let c1 = m["summary"]["c_1"].as_f64().unwrap();
    assert!(c1 > 1.0 && c1 < 2.0);
    let csv = std::fs::read_to_string(dir.path().join("out/data/martin.csv")).unwrap();
    assert!(csv.starts_with("xi,f_E,M_E\n"));
}

#[test]
fn bad_gap_order_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "experiment = \"martin\"\npotential = { kind = \"zero\" }\nset = { b0 = 0.0, gaps = [[2.0, 1.0]] }\n";
    let out = run(cfg, dir.path(), &[]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("set.gaps[0] = [2, 1]"), "{err}");
}

#[test]
fn parse_error_names_line() {
    let dir = tempfile::tempdir().unwrap();
    let out = run("experiment = \"kernel\"\npotential = { kind = \"zero\" }\n[grids]\nlengths = [1.0,\n", dir.path(), &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line"));
}

#[test]
fn strict_breach_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!("{CHRISTOFFEL}[tolerances]\nchristoffel_sup = 1e-6\n");
    assert_eq!(run(&cfg, dir.path(), &["--strict"]).status.code(), Some(2));
    let relaxed = tempfile::tempdir().unwrap();
    assert_eq!(run(&cfg, relaxed.path(), &[]).status.code(), Some(0));
    assert!(!manifest(relaxed.path())["breaches"].as_array().unwrap().is_empty());
}

#[test]
fn experiment_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(CHRISTOFFEL, dir.path(), &["--experiment", "regularity"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(dir.path().join("out/data/regularity_cesaro.csv").exists());
}
