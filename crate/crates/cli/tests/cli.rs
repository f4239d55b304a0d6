use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_onsager-lab");

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).env_remove("ONSAGER_LAB_WORKERS").output().unwrap()
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

const QNS: &str = r#"
study = "qns"

[grid]
kind = "stationary"
points = [512]
extents = [1.0]

[law]
gamma = 1.4
kappa = 1.0

[density]
kind = "vacuum_profile"
profile = "power"
m = 1.0

[ladders]
eps = [0.1, 0.05]
radius = [0.1, 0.05]

[params]
region = [0.25, 0.75]
"#;

#[test]
fn run_writes_report_and_series() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "qns.toml", QNS);
    let out = dir.path().join("out");
    let o = run(&["run", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(json["schema_version"], 1);
    assert_eq!(json["config"]["params"]["eps0"], 0.25);
    assert!(json["quantities"].as_array().unwrap().iter().all(|q| q["provenance"].is_string()));
    let csv = fs::read_to_string(out.join("mean_oscillation.csv")).unwrap();
    assert!(csv.starts_with("eps,value\n"));
    assert!(out.join("mean_oscillation.dat").exists());
}

#[test]
fn identical_configs_give_identical_reports() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "qns.toml", QNS);
    let mut texts = Vec::new();
    for (i, workers) in ["0", "2"].iter().enumerate() {
        let out = dir.path().join(format!("o{i}"));
        let o = Command::new(BIN)
            .args(["run", &cfg, "--out", out.to_str().unwrap()])
            .env("ONSAGER_LAB_WORKERS", workers)
            .output()
            .unwrap();
        assert_eq!(o.status.code(), Some(0));
        let mut v: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
        v["config"]["workers"] = serde_json::Value::Null;
        texts.push(v.to_string());
    }
    assert_eq!(texts[0], texts[1]);
}

#[test]
fn malformed_config_exits_one_with_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bad.toml", &QNS.replace("kappa = 1.0", "kappa = 1.0\nunknown_key = 3"));
    let o = run(&["run", &cfg]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line") && err.contains("unknown_key"), "{err}");
    assert_eq!(run(&["run"]).status.code(), Some(1));
    assert_eq!(run(&["run", "/nonexistent/config.toml"]).status.code(), Some(1));
}

#[test]
fn failed_assertion_exits_two_and_report_aggregates() {
    let dir = tempfile::tempdir().unwrap();
    // A constant below 1 cannot hold for |x - 1/2| near its zero.
    let bad = QNS.replace("region = [0.25, 0.75]", "region = [0.25, 0.75]\nqns_constant = 0.5");
    let good_cfg = write_config(dir.path(), "good.toml", QNS);
    let bad_cfg = write_config(dir.path(), "bad.toml", &bad);
    let (good_out, bad_out) = (dir.path().join("g"), dir.path().join("b"));
    assert_eq!(run(&["run", &good_cfg, "--out", good_out.to_str().unwrap()]).status.code(), Some(0));
    let o = run(&["run", &bad_cfg, "--out", bad_out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let failures: serde_json::Value = serde_json::from_str(String::from_utf8_lossy(&o.stderr).trim()).unwrap();
    assert!(failures["failures"].as_array().unwrap().iter().any(|f| f == "qns_empirical_constant"));

    let o = run(&["report", good_out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("overall: PASS"));
    let o = run(&["report", good_out.to_str().unwrap(), bad_out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stdout).contains("overall: FAIL"));
    assert_eq!(run(&["report"]).status.code(), Some(1));
}

#[test]
fn export_field_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "qns.toml", QNS);
    let path = dir.path().join("rho.csv");
    let o = run(&["export-field", "density", path.to_str().unwrap(), "--config", &cfg]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let f = onsager_lab::fieldlab::io::read_field(&path).unwrap();
    assert_eq!(f.grid().node_count(), 512);
    let o = run(&["export-field", "velocity", path.to_str().unwrap(), "--config", &cfg]);
    assert_eq!(o.status.code(), Some(1));
}
