use std::path::Path;
use std::process::{Command, Output};

fn kit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hoermander-kit")).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.display().to_string()
}

#[test]
fn norm_writes_csv_and_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().display().to_string();
    let o = kit(&["norm", "--out", &out, "--seed", "3", "--resolutions", "8,16", "--csv"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("PASS norm (40 records)"));
    let csv = std::fs::read_to_string(dir.path().join("norm.csv")).unwrap();
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(header[0], "record");
    assert!(header.contains(&"quotient_deviation") && header.contains(&"sizes.1"));
    assert_eq!(lines.count(), 40);
}

#[test]
fn trace_check_from_config_writes_json() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "trace.json", r#"{"trials": 3, "r_list": [1, 2], "constants": [[1, 1]]}"#);
    let out = dir.path().display().to_string();
    let o = kit(&["trace-check", "--config", &cfg, "--out", &out, "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("trace-check.json")).unwrap()).unwrap();
    assert_eq!(v["command"], "trace-check");
    assert_eq!(v["pass"], true);
    assert_eq!(v["records"].as_array().unwrap().len(), 3);
}

#[test]
fn failing_check_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "backward.json",
        r#"{"problem": {"geometry": "Interval", "tau": 0.5, "a": [{"alpha": [2], "coeff": "-1"}], "boundary": {"kind": "Dirichlet"}},
            "s_grid": [3.0], "trials": 1}"#,
    );
    let out = dir.path().display().to_string();
    let o = kit(&["compat-check", "--config", &cfg, "--out", &out, "--csv"]);
    assert_eq!(o.status.code(), Some(1));
    let csv = std::fs::read_to_string(dir.path().join("compat-check.csv")).unwrap();
    assert!(csv.lines().nth(1).unwrap().starts_with("petrovskii,"));
}

#[test]
fn bad_input_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.json", r#"{"bogus": 1}"#);
    assert_eq!(kit(&["norm", "--config", &cfg]).status.code(), Some(2));
    let jump = write(dir.path(), "jump.json", r#"{"s_star": 3.0}"#);
    let out = dir.path().display().to_string();
    assert_eq!(kit(&["jump-study", "--config", &jump, "--out", &out]).status.code(), Some(2));
    assert_ne!(kit(&["norm", "--json", "--csv"]).status.code(), Some(0));
}
