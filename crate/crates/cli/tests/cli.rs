use std::path::Path;
use std::process::{Command, Output};

fn multatlas(out_dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_multatlas"))
        .args(args)
        .arg("--out-dir")
        .arg(out_dir)
        .env_remove("MULTATLAS_THREADS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn field(row: &str, idx: usize) -> f64 {
    row.split(',').nth(idx).unwrap().parse().unwrap()
}

#[test]
fn orbits_at_minus_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = multatlas(dir.path(), &["orbits", "--c", "-2,0", "--period", "1"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let row = text.lines().find(|l| l.starts_with("1,2.0")).expect("orbit {2}");
    assert!((field(row, 3) - 4.0).abs() < 1e-12);
    assert!((field(row, 5) + 2.0 / 3.0).abs() < 1e-12);
    assert!((field(row, 7) + 1.0 / 6.0).abs() < 1e-12);
    assert!(dir.path().join("orbits_-2_0.manifest.json").exists());
}

#[test]
fn orbits_at_zero() {
    let dir = tempfile::tempdir().unwrap();
    let o = multatlas(dir.path(), &["orbits", "--c", "0+0i", "--period", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 1);
    assert!((field(rows[0], 3) - 4.0).abs() < 1e-12);
    assert!((field(rows[0], 7) - 0.5).abs() < 1e-12);

    let o = multatlas(dir.path(), &["orbits", "--c", "0,0", "--period", "1"]);
    let text = stdout(&o);
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 2);
    let sup = rows.iter().find(|r| r.ends_with("superattracting_flagged")).unwrap();
    assert_eq!(sup.split(',').nth(7), Some(""));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let o = multatlas(dir.path(), &["orbits", "--c", "1+x", "--period", "1"]);
    assert_eq!(o.status.code(), Some(2));
    let o = multatlas(dir.path(), &["orbits", "--period", "1"]);
    assert_eq!(o.status.code(), Some(2));
    let o = multatlas(dir.path(), &["orbits", "--c", "0,0", "--period", "40"]);
    assert_eq!(o.status.code(), Some(2));
    // the period-2 cycle is degenerate at the tangency parameter
    let o = multatlas(dir.path(), &["orbits", "--c", "-0.75,0", "--period", "2"]);
    assert_eq!(o.status.code(), Some(3));
    let o = multatlas(dir.path(), &["orbits", "--c", "-0.75,0", "--period", "2", "--allow-partial"]);
    assert_eq!(o.status.code(), Some(0));
    let o = multatlas(dir.path(), &["verify", "--only", "nonsense"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn yc_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let prefix = dir.path().join("zero");
    let o = multatlas(
        dir.path(),
        &["yc", "--c", "0,0", "--max-period", "3", "--out-prefix", prefix.to_str().unwrap()],
    );
    assert_eq!(o.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("zero.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
    assert!(std::fs::read_to_string(dir.path().join("zero.svg")).unwrap().starts_with("<svg"));
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("zero.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "yc");
    assert_eq!(manifest["resolved"]["max_period"], 3);

    // incomplete sets are recorded, not fatal
    let o = multatlas(dir.path(), &["yc", "--c", "-0.75,0", "--max-period", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("yc_-0.75_0.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["resolved"]["incomplete_periods"], serde_json::json!([2]));
}

#[test]
fn xset_small_grids() {
    let dir = tempfile::tempdir().unwrap();
    let o = multatlas(dir.path(), &["xset", "--res", "1x1", "--bounds", "-0.1,0.1,-0.1,0.1", "--threads", "1"]);
    assert_eq!(o.status.code(), Some(0));
    let m: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("xset.json")).unwrap()).unwrap();
    assert_eq!(m["resolved"]["pixels_in_m"], 1);
    assert_eq!(m["resolved"]["render"]["threads"], 1);

    let prefix = dir.path().join("far");
    let o = multatlas(
        dir.path(),
        &[
            "xset", "--bounds", "2.9,3.1,-0.1,0.1", "--res", "8x8", "--max-period", "8",
            "--out-prefix", prefix.to_str().unwrap(),
        ],
    );
    assert_eq!(o.status.code(), Some(0));
    let m: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("far.json")).unwrap()).unwrap();
    assert_eq!(m["resolved"]["pixels_not_detected"], 64);
    assert!(dir.path().join("far.png").exists());
}

#[test]
fn config_file_and_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(
        &cfg,
        "[xset]\nbounds = \"2.9,3.1,-0.1,0.1\"\nres = \"4x4\"\nmax_period = 3\nthreads = 1\ntile_size = 8\n",
    )
    .unwrap();
    let o = multatlas(dir.path(), &["--config", cfg.to_str().unwrap(), "xset", "--max-period", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let m: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("xset.json")).unwrap()).unwrap();
    assert_eq!(m["resolved"]["max_period"], 2);
    assert_eq!(m["resolved"]["width"], 4);
    assert_eq!(m["resolved"]["render"]["tile_size"], 8);

    std::fs::write(&cfg, "bogus = 1\n").unwrap();
    let o = multatlas(dir.path(), &["--config", cfg.to_str().unwrap(), "verify", "--only", "vieta"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn thread_count_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_multatlas"))
        .args(["xset", "--res", "2x2", "--bounds", "-0.1,0.1,-0.1,0.1", "--out-dir"])
        .arg(dir.path())
        .env("MULTATLAS_THREADS", "3")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    let m: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("xset.json")).unwrap()).unwrap();
    assert_eq!(m["resolved"]["render"]["threads"], 3);
}

#[test]
fn verify_is_deterministic_and_filterable() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["verify", "--seed", "42", "--only", "summation", "--k", "8"];
    let a = multatlas(dir.path(), &args);
    let b = multatlas(dir.path(), &args);
    assert_eq!(a.status.code(), Some(0), "{}", stdout(&a));
    assert_eq!(stdout(&a), stdout(&b));
    let text = stdout(&a);
    let checks: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(checks.len(), 1);
    assert!(checks[0].starts_with("PASS summation"));
    assert!(checks[0].contains("k=[8]"));
}

#[test]
fn help_per_subcommand() {
    for sub in ["orbits", "yc", "xset", "verify"] {
        let o = Command::new(env!("CARGO_BIN_EXE_multatlas")).args([sub, "--help"]).output().unwrap();
        assert_eq!(o.status.code(), Some(0));
        assert!(stdout(&o).contains("Usage"));
    }
}
