use std::path::Path;
use std::process::{Command, Output};

fn sl3sph(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sl3sph")).args(args).output().expect("binary runs")
}

fn csv_rows(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    (header, rows)
}

fn col(header: &[String], name: &str) -> usize {
    header.iter().position(|h| h == name).unwrap()
}

#[test]
fn eval_at_origin_is_one() {
    let out = sl3sph(&["eval", "--h-mags", "0", "--lam-mags", "0:20:5"]);
    assert!(out.status.success());
    let (header, rows) = csv_rows(&String::from_utf8(out.stdout).unwrap());
    assert_eq!(rows.len(), 10);
    let (re, im) = (col(&header, "re_phi"), col(&header, "im_phi"));
    for r in rows {
        assert!((r[re].parse::<f64>().unwrap() - 1.0).abs() < 1e-12);
        assert!(r[im].parse::<f64>().unwrap().abs() < 1e-12);
    }
}

#[test]
fn scan_default_grid_converges_and_plots() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("scan.csv");
    let svg = dir.path().join("scan.svg");
    let out = sl3sph(&["scan", "--out", csv.to_str().unwrap(), "--plot", svg.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (header, rows) = csv_rows(&std::fs::read_to_string(&csv).unwrap());
    assert_eq!(
        header,
        ["h1", "h2", "h3", "l1", "l2", "l3", "re_phi", "im_phi", "new_bound", "old_bound", "ratio", "converged"]
    );
    assert_eq!(rows.len(), 5 * 2 * 11);
    assert!(rows.iter().all(|r| r[11] == "true"));
    let plot = std::fs::read_to_string(&svg).unwrap();
    assert!(plot.starts_with("<?xml version=\"1.0\""));
    assert!(plot.trim_end().ends_with("</svg>"));
}

#[test]
fn critical_regular_pair_has_24_points() {
    let out = sl3sph(&["critical", "--h-dir", "1,-0.3,-0.7", "--h-mags", "1", "--lam-dir", "1,0.2,-1.2", "--lam-mags", "3"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (header, rows) = csv_rows(&String::from_utf8(out.stdout).unwrap());
    assert_eq!(rows.len(), 24);
    let m = col(&header, "in_m_prime");
    assert!(rows.iter().all(|r| r[m] == "true"));
}

#[test]
fn config_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("a.json");
    let second = dir.path().join("b.json");
    let out = sl3sph(&[
        "eval", "--h-dir", "0.1,0.2,-0.3", "--h-mags", "0.1,0.7", "--lam-mags", "0.3,1e-7", "--tol", "3.3e-9",
        "--seed", "7", "--format", "json", "--nbeta", "24", "--nag", "32", "--out", "/dev/null", "--dump-config",
        first.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out = sl3sph(&["--config", first.to_str().unwrap(), "--dump-config", second.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let a = std::fs::read_to_string(&first).unwrap();
    assert_eq!(a, std::fs::read_to_string(&second).unwrap());
    assert!(a.contains("\"version\": 1") && a.contains("3.3e-9") && a.contains("\"seed\": 7"));
}

#[test]
fn flags_override_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    let eff = dir.path().join("e.json");
    sl3sph(&["eval", "--h-mags", "0", "--lam-mags", "1", "--seed", "5", "--out", "/dev/null", "--dump-config", cfg.to_str().unwrap()]);
    let out = sl3sph(&["--config", cfg.to_str().unwrap(), "--seed", "9", "--out", "/dev/null", "--dump-config", eff.to_str().unwrap()]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&eff).unwrap();
    assert!(text.contains("\"seed\": 9") && text.contains("\"command\": \"eval\""));
}

#[test]
fn outputs_are_deterministic() {
    let run = || sl3sph(&["eval", "--h-mags", "0.4", "--lam-mags", "0:12:3", "--format", "json"]).stdout;
    assert_eq!(run(), run());
}

#[test]
fn config_errors_exit_3() {
    for args in [
        vec!["scan", "--tol", "-1"],
        vec!["scan", "--nbeta", "16"],
        vec!["eval", "--h-dir", "1,1,1"],
        vec!["eval", "--h-mags", ""],
        vec!["eval", "--plot", "x.svg"],
        vec!["--bogus"],
        vec![],
    ] {
        let out = sl3sph(&args);
        assert_eq!(out.status.code(), Some(3), "{args:?}");
        let err = String::from_utf8(out.stderr).unwrap();
        let last = err.lines().last().unwrap();
        let v: serde_json::Value = serde_json::from_str(last).unwrap();
        assert_eq!(v["error"], "config");
    }
}

#[test]
fn bad_config_version_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    sl3sph(&["eval", "--out", "/dev/null", "--h-mags", "0", "--lam-mags", "0", "--dump-config", cfg.to_str().unwrap()]);
    let text = std::fs::read_to_string(&cfg).unwrap().replace("\"version\": 1", "\"version\": 99");
    std::fs::write(&cfg, text).unwrap();
    assert_eq!(sl3sph(&["--config", cfg.to_str().unwrap()]).status.code(), Some(3));
}

#[test]
fn gate_failure_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.csv");
    let out = sl3sph(&["eval", "--nbeta", "4", "--nag", "4", "--h-mags", "1", "--lam-mags", "30", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let v: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(v["error"], "gate");
    assert!(v["details"]["failed"].as_u64().unwrap() > 0);
    assert!(Path::new(&path).exists());
}

#[test]
fn plot_without_points_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let svg = dir.path().join("p.svg");
    let out = sl3sph(&["scan", "--h-mags", "0.5", "--lam-mags", "0", "--out", "/dev/null", "--plot", svg.to_str().unwrap()]);
    assert_ne!(out.status.code(), Some(0));
    assert!(!svg.exists());
}
