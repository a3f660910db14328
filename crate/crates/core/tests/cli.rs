use std::path::Path;
use std::process::{Command, Output};

fn dnc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dnc"))
        .args(args)
        .output()
        .unwrap()
}

fn tmp(name: &str) -> std::path::PathBuf {
    let d = std::env::temp_dir().join(format!("dnc-cli-{}-{name}", std::process::id()));
    std::fs::create_dir_all(&d).unwrap();
    d
}

fn stderr_json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stderr).expect("stderr is one JSON object")
}

#[test]
fn repro_table2_writes_csv() {
    let out = tmp("t2");
    let o = dnc(&["repro-table2", "--out-dir", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(rows.as_array().unwrap().len(), 4);
    let csv = std::fs::read_to_string(out.join("table2.csv")).unwrap();
    assert!(csv.lines().any(|l| l.starts_with("r,") || l.contains("d0")));
}

#[test]
fn solve_from_config_file() {
    let out = tmp("solve");
    let cfg = out.join("cfg.json");
    std::fs::write(
        &cfg,
        r#"{"shape":{"kind":"rectangle","a_x":6000.0,"a_y":6000.0},"n_rrh":120,"n_user":150,
            "d0":150.0,"layers":2,"sides":[2000.0,900.0],"mode":"mode2"}"#,
    )
    .unwrap();
    let o = dnc(&[
        "solve",
        "--config",
        cfg.to_str().unwrap(),
        "--workers",
        "3",
        "--out-dir",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["dbbd_ok"], true);
    assert!(report["oracle_relative_error"].as_f64().unwrap() < 1e-10);
    assert!(Path::new(&out.join("solve.json")).exists());
}

#[test]
fn missing_config_is_json_error() {
    let o = dnc(&["solve"]);
    assert!(!o.status.success());
    let e = stderr_json(&o);
    assert_eq!(e["error"], "InvalidArgument");
    assert!(e["message"].as_str().unwrap().contains("--config"));
}

#[test]
fn unknown_field_is_json_error() {
    let out = tmp("bad");
    let cfg = out.join("cfg.json");
    std::fs::write(
        &cfg,
        r#"{"shape":{"kind":"circle","radius":1000.0},"bogus":1}"#,
    )
    .unwrap();
    let o = dnc(&["threshold", "--config", cfg.to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(stderr_json(&o)["message"]
        .as_str()
        .unwrap()
        .contains("bogus"));
}

#[test]
fn bad_flag_is_json_error() {
    let o = dnc(&["plan", "--workers", "many"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr_json(&o)["error"], "Usage");
}

#[test]
fn shipped_configs_run() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    for (cmd, file, artefact) in [
        ("threshold", "threshold_sweep.json", "threshold.csv"),
        ("detect", "detect_small.json", "detect.csv"),
        ("solve", "solve_two_layer.json", "solve.json"),
        ("plan", "plan_two_layer.json", "plan.json"),
    ] {
        let out = tmp(cmd);
        let cfg = root.join(file);
        let o = dnc(&[
            cmd,
            "--config",
            cfg.to_str().unwrap(),
            "--seed",
            "7",
            "--out-dir",
            out.to_str().unwrap(),
        ]);
        assert!(
            o.status.success(),
            "{cmd}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
        serde_json::from_slice::<serde_json::Value>(&o.stdout).unwrap();
        assert!(out.join(artefact).exists(), "{cmd} wrote no {artefact}");
    }
}
