use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn run(experiment: &str, config: &str, dir: &Path, extra: &[&str]) -> Output {
    let cfg = dir.join(format!("{experiment}.cfg"));
    fs::write(&cfg, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_displab"))
        .arg(experiment)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .args(extra)
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("terminated by signal")
}

const SMALL_N3: &str = "t = 0.1, 0.2\nr = 1.0\ns = 1.0, 2.0\nl_rule = fixed:1e4\n";

#[test]
fn small_runs_pass_and_write_reports() {
    for (exp, cfg) in [
        ("verify-n3", SMALL_N3),
        ("envelope-check", "samples = 20\n"),
        ("verify-ndim-remainder", "# defaults\n"),
        ("easylem-check", "n = 4\nsigma = 5\nmu = 2\n"),
    ] {
        let dir = TempDir::new().unwrap();
        let o = run(exp, cfg, dir.path(), &[]);
        assert_eq!(code(&o), 0, "{exp}: {}", String::from_utf8_lossy(&o.stderr));
        let out = dir.path().join("out");
        let csv = fs::read_to_string(out.join("samples.csv")).unwrap();
        assert!(csv.starts_with("experiment,n,t,L,"), "{exp}");
        assert!(csv.lines().count() > 1);
        let manifest: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
        assert_eq!(manifest["experiment"], exp);
    }
}

#[test]
fn slope_experiments_draw_the_fit() {
    let dir = TempDir::new().unwrap();
    let o = run("verify-ndim-remainder", "n = 5\n", dir.path(), &[]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stdout).contains("slope"));
    let svg = fs::read_to_string(dir.path().join("out/plot.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
    assert!(svg.contains("slope") && svg.contains("<circle"));
}

#[test]
fn tolerance_miss_exits_one() {
    let dir = TempDir::new().unwrap();
    let o = run("verify-n3", "t = 0.1\nr = 1\ns = 1\nl_rule = fixed:1e3\ntol = 1e-9\n", dir.path(), &[]);
    assert_eq!(code(&o), 1);
    assert!(dir.path().join("out/samples.csv").exists());
}

#[test]
fn bad_configs_exit_two() {
    for (exp, cfg) in [
        ("verify-n3", "bogus = 1\n"),
        ("verify-n3", "t = abc\n"),
        ("verify-n3", "t = 0.05\nl_rule = fixed:5\n"),
        ("verify-n3", "n = 4\n"),
        ("verify-n3", "tol = 1\ntol = 2\n"),
        ("verify-n3", "experiment = verify-n2\n"),
        ("verify-n3", "no equals sign\n"),
        ("counterexample-growth", "n = 5\nalpha = 1.2\n"),
        ("easylem-check", "n = 4\nsigma = 4\nmu = 2\n"),
    ] {
        let dir = TempDir::new().unwrap();
        let o = run(exp, cfg, dir.path(), &[]);
        assert_eq!(code(&o), 2, "{exp} with {cfg:?}");
        assert!(String::from_utf8_lossy(&o.stderr).contains("error"));
    }
}

#[test]
fn missing_config_exits_two() {
    let dir = TempDir::new().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_displab"))
        .args(["verify-n3", "--config"])
        .arg(dir.path().join("absent.cfg"))
        .output()
        .unwrap();
    assert_eq!(code(&o), 2);
}

#[test]
fn reruns_are_byte_identical() {
    let cfg = "n = 5\nt = dyadic:4..8\nseed = 11\n";
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    assert_eq!(code(&run("counterexample-growth", cfg, a.path(), &[])), 0);
    assert_eq!(code(&run("counterexample-growth", cfg, b.path(), &["--jobs", "1"])), 0);
    let ca = fs::read(a.path().join("out/samples.csv")).unwrap();
    let cb = fs::read(b.path().join("out/samples.csv")).unwrap();
    assert_eq!(ca, cb);

    let n3a = TempDir::new().unwrap();
    let n3b = TempDir::new().unwrap();
    run("verify-n3", SMALL_N3, n3a.path(), &[]);
    run("verify-n3", SMALL_N3, n3b.path(), &[]);
    assert_eq!(
        fs::read(n3a.path().join("out/samples.csv")).unwrap(),
        fs::read(n3b.path().join("out/samples.csv")).unwrap()
    );
}

#[test]
fn seed_flag_overrides_config() {
    let cfg = "n = 5\nt = dyadic:4..8\nseed = 1\n";
    let dir = TempDir::new().unwrap();
    let o = run("counterexample-growth", cfg, dir.path(), &["--seed", "99"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let m: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/manifest.json")).unwrap()).unwrap();
    assert_eq!(m["config"]["seed"], 99);
}
