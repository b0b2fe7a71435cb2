use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_secquant"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn design_binding_budget() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        dir.path(),
        &["design", "--theta", "1", "--sigma", "1", "--rho-fc", "0", "--rho-eve", "0.1", "--alpha-tilde", "0.1"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let v = json(&dir.path().join("design.json"));
    assert_eq!(v["binding"], true);
    assert!((v["d_eve"].as_f64().unwrap() - 0.1).abs() <= 1e-8);
    assert_eq!(v["units"], "nats");
    for key in ["lambda", "pfa", "pd", "d_sensor", "d_fc", "d_eve", "alpha_tilde"] {
        assert!(v.get(key).is_some(), "{key}");
    }
}

#[test]
fn blind_design_warns() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["design", "--snr", "1", "--rho-eve", "0.1", "--alpha-tilde", "0"]);
    assert!(o.status.success());
    assert!(stderr(&o).contains("blind design"));
    let v = json(&dir.path().join("design.json"));
    for key in ["d_sensor", "d_fc", "d_eve"] {
        assert_eq!(v[key].as_f64().unwrap(), 0.0);
    }
    assert_eq!(v["lambda"], "inf");
}

#[test]
fn missing_sigma_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["design", "--theta", "1", "--rho-eve", "0.1", "--alpha-tilde", "0.1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("sigma"));
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    fs::write(
        &cfg,
        r#"{"theta": 1.0, "sigma": 1.0, "rho_eve": 0.1, "alpha_tilde": 0.05, "out": "from_config.json"}"#,
    )
    .unwrap();
    let o = run(dir.path(), &["--config", "run.json", "design", "--alpha-tilde", "0.1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v = json(&dir.path().join("from_config.json"));
    assert_eq!(v["alpha_tilde"].as_f64().unwrap(), 0.1);

    fs::write(&cfg, r#"{"theta": 1.0, "sigma": 1.0, "rho_eve": 0.1, "alpha_tild": 0.05}"#).unwrap();
    let o = run(dir.path(), &["--config", "run.json", "design"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("alpha_tild"));
}

#[test]
fn invalid_channel_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["design", "--snr", "1", "--rho-eve", "0.6"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("rho_eve"));
}

#[test]
fn tradeoff_rows_and_saturation() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["tradeoff", "--snr", "1", "--rho-eve", "0.1", "--points", "50", "--alpha-max-factor", "1.5"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(dir.path().join("tradeoff.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 51);
    assert_eq!(lines[0], "alpha_tilde,d_fc_max,lambda,pfa,pd,d_eve,binding");
    let d_fc: Vec<f64> = lines[1..].iter().map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    let last = *d_fc.last().unwrap();
    // the top third of the grid lies beyond the Eve peak
    for v in &d_fc[34..] {
        assert!((v - last).abs() <= 1e-9);
    }
}

#[test]
fn descending_grid_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["tradeoff", "--snr", "1", "--rho-eve", "0.1", "--alphas", "0.2,0.1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("alphas"));
}

#[test]
fn greedy_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        dir.path(),
        &["greedy", "--n", "100", "--alpha", "50", "--seed", "5", "--sweep-n", "10,20,40,80,100", "--benchmark"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let summary = json(&dir.path().join("allocation.summary.json"));
    assert!(summary["allocation"]["total_d_eve"].as_f64().unwrap() <= 50.0 + 1e-9);
    assert_eq!(summary["seed"], 5);
    assert!(summary["allocation"]["benchmark"].is_object());
    let csv = fs::read_to_string(dir.path().join("allocation.csv")).unwrap();
    assert_eq!(csv.lines().count(), 101);
    let growth = fs::read_to_string(dir.path().join("allocation.growth.csv")).unwrap();
    let active: Vec<usize> = growth.lines().skip(1).map(|l| l.split(',').nth(3).unwrap().parse().unwrap()).collect();
    assert!(active.windows(2).all(|w| w[1] >= w[0]));

    let o = run(dir.path(), &["greedy", "--n", "20", "--alpha", "0", "--seed", "5", "--out", "zero.csv"]);
    assert!(o.status.success());
    let zero = fs::read_to_string(dir.path().join("zero.csv")).unwrap();
    assert!(zero.lines().skip(1).all(|l| l.split(',').nth(3) == Some("false")));
}

#[test]
fn greedy_requires_seed() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["greedy", "--n", "10", "--alpha", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("seed"));
}

#[test]
fn verify_reports() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run(dir.path(), &["design", "--snr", "1", "--rho-eve", "0.1", "--out", "free.json"]).status.success());
    let o = run(dir.path(), &["verify", "--artifact", "free.json", "--out", "report.json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let r = json(&dir.path().join("report.json"));
    assert_eq!(r["pass"], true);
    assert_eq!(r["no_information"], false);
    let stein = fs::read_to_string(dir.path().join("report.stein.csv")).unwrap();
    assert_eq!(stein.lines().count(), 5);

    assert!(run(dir.path(), &["design", "--snr", "1", "--rho-eve", "0.1", "--alpha-tilde", "0", "--out", "blind.json"])
        .status
        .success());
    let o = run(dir.path(), &["verify", "--artifact", "blind.json"]);
    let out = String::from_utf8_lossy(&o.stdout);
    let report: Value = serde_json::from_str(out.rsplit_once('\n').unwrap().0.trim_end_matches("\nPASS")).unwrap();
    assert_eq!(report["no_information"], true);
    for p in report["stein"]["points"].as_array().unwrap() {
        assert!(p["exponent"].as_f64().unwrap() < 1e-3);
    }
}

#[test]
fn verify_artifact_errors() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.json"), "{ not json").unwrap();
    assert_eq!(run(dir.path(), &["verify", "--artifact", "bad.json"]).status.code(), Some(4));
    assert_eq!(run(dir.path(), &["verify", "--artifact", "absent.json"]).status.code(), Some(4));
    fs::write(dir.path().join("other.json"), r#"{"kind": "tradeoff"}"#).unwrap();
    assert_eq!(run(dir.path(), &["verify", "--artifact", "other.json"]).status.code(), Some(4));
}

#[test]
fn trace_boundary_csv() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["trace-boundary", "--rho-eve", "0.1", "--alpha-tilde", "0.2", "--points", "25"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(dir.path().join("boundary.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "x,y,x_e,y_e,slope,curvature,d_e");
    assert_eq!(lines.len(), 26);
    for l in &lines[1..] {
        let d_e: f64 = l.rsplit(',').next().unwrap().parse().unwrap();
        assert!((d_e - 0.2).abs() <= 1e-10);
    }
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["greedy", "--n", "60", "--alpha", "5", "--seed", "11", "--format", "json", "--out", "a.json"];
    assert!(run(dir.path(), &args).status.success());
    let first = fs::read(dir.path().join("a.json")).unwrap();
    assert!(run(dir.path(), &args).status.success());
    assert_eq!(first, fs::read(dir.path().join("a.json")).unwrap());
}
