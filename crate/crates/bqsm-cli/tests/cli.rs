use std::process::{Command, Output};

use serde_json::Value;

fn bqsm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bqsm")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json_out(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("json output")
}

#[test]
fn list_and_filters() {
    let all = bqsm(&["list"]);
    assert_eq!(all.status.code(), Some(0));
    let items = json_out(&all);
    let names: Vec<&str> = items.as_array().unwrap().iter().map(|e| e["name"].as_str().unwrap()).collect();
    assert!(names.contains(&"qkd-thresholds") && names.contains(&"bell-attack"));
    assert!(items[0]["params"].is_array());

    let commit = json_out(&bqsm(&["list", "commit"]));
    let names: Vec<&str> = commit.as_array().unwrap().iter().map(|e| e["name"].as_str().unwrap()).collect();
    assert_eq!(names, vec!["commit-binding"]);

    let none = bqsm(&["list", "no-such-thing"]);
    assert_eq!(none.status.code(), Some(0));
    assert_eq!(json_out(&none), serde_json::json!([]));
}

#[test]
fn parameter_errors_exit_2() {
    for args in [
        vec!["qkd-thresholds"],
        vec!["no-such-experiment", "--seed", "1"],
        vec!["bell-attack", "--seed", "1", "--bogus", "3"],
        vec!["bell-attack", "--seed", "1", "--n", "six"],
        vec!["bell-attack", "--seed", "1", "--format", "xml"],
        vec!["uncertainty-half-split", "--seed", "1", "--n", "3"],
        vec!["--experiment", "bell-attack", "--seed", "1", "--param", "n"],
    ] {
        let o = bqsm(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        let err: Value = serde_json::from_slice(&o.stderr).expect("structured error");
        assert_eq!(err["error"], "parameter", "{args:?}");
        assert!(o.stdout.is_empty());
    }
}

#[test]
fn thresholds_csv_embeds_spec() {
    let o = bqsm(&["qkd-thresholds", "--seed", "0"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("# bqsm "));
    assert!(lines[1].contains("\"experiment\":\"qkd-thresholds\""));
    assert!(lines[2].contains("\"passed\":true"));
    let header: Vec<&str> = lines[3].split(',').collect();
    for c in ["alphabet", "h", "p", "rate"] {
        assert!(header.contains(&c), "{c}");
    }
    let p_col = header.iter().position(|&c| c == "p").unwrap();
    let bb84: Vec<&str> = lines.iter().find(|l| l.starts_with("bb84,")).unwrap().split(',').collect();
    let p: f64 = bb84[p_col].parse().unwrap();
    assert!((p - 0.11).abs() < 5e-4);
    // 12 significant digits at most
    assert!(bb84[p_col].trim_start_matches("0.").len() <= 12);
}

#[test]
fn bell_attack_json() {
    let o = bqsm(&["bell-attack", "--n", "6", "--seed", "3", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let doc = json_out(&o);
    assert_eq!(doc["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(doc["spec"]["seed"], 3);
    assert_eq!(doc["spec"]["params"]["n"], "6");
    assert_eq!(doc["rows"][0]["success"].as_f64(), Some(1.0));
    assert_eq!(doc["rows"][0]["memory_qubits"], 0);
}

#[test]
fn outputs_are_byte_identical() {
    let args = ["uncertainty-two-basis", "--n", "3", "--trials", "40", "--seed", "7"];
    let a = bqsm(&args);
    let b = bqsm(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let c = bqsm(&["uncertainty-two-basis", "--n", "3", "--trials", "40", "--seed", "8"]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn config_param_and_flag_forms_agree() {
    let dir = std::env::temp_dir().join(format!("bqsm-cli-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("spec.json");
    std::fs::write(&cfg, r#"{"experiment": "protocol-run", "seed": 11, "params": {"protocol": "ot12", "n": 12, "ell": 2}}"#)
        .unwrap();
    let out = dir.join("run.csv");
    let a = bqsm(&["--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));
    assert!(a.stdout.is_empty());
    let from_file = std::fs::read(&out).unwrap();
    let b = bqsm(&["--experiment", "protocol-run", "--seed", "11", "--param", "protocol=ot12", "--param", "n=12", "--param", "ell=2"]);
    let c = bqsm(&["protocol-run", "--seed", "11", "--protocol", "ot12", "--n", "12", "--ell", "2"]);
    assert_eq!(from_file, b.stdout);
    assert_eq!(b.stdout, c.stdout);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn adversary_registry_by_name() {
    let o = bqsm(&[
        "protocol-run", "--seed", "2", "--protocol", "rabin", "--n", "4", "--party", "store_prefix", "--q", "4",
        "--format", "json",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let doc = json_out(&o);
    let row = &doc["rows"][0];
    assert_eq!(row["transcript"]["strategy"], "store_prefix(q=4)");
    assert_eq!(row["outputs"]["guess_success"].as_f64(), Some(1.0));
    let bad = bqsm(&["protocol-run", "--seed", "2", "--party", "telepathy"]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn bound_violation_exits_3() {
    // A stored-memory eavesdropper keeps the key far from the demanded level.
    let o = bqsm(&[
        "rate-check", "--seed", "1", "--m", "6", "--strategy", "store_prefix", "--q", "2", "--epsilon", "1e-6",
    ]);
    assert_eq!(o.status.code(), Some(3));
    let err: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"], "bound_violation");
    assert!(stdout(&o).contains("\"passed\":false"));
    let ok = bqsm(&["rate-check", "--seed", "1", "--m", "6", "--strategy", "store_prefix", "--q", "2"]);
    assert_eq!(ok.status.code(), Some(0));
}
