use std::path::Path;
use std::process::{Command, Output};

fn kahler(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kahler"))
        .args(args)
        .arg("--out-dir")
        .arg(out)
        .env_remove("KAHLER_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn metric_prints_the_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let o = kahler(&["metric", "--theta", "0", "-0.5"], dir.path());
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let text = stdout(&o);
    assert!(text.contains("metric        = [[1, 0], [0, 2]]"), "{text}");
    assert!(text.contains("oracle dev"));
    assert!(dir.path().join("metric.verdicts.json").exists());
}

#[test]
fn flow_csv_ends_at_the_exact_endpoint() {
    let dir = tempfile::tempdir().unwrap();
    let o = kahler(
        &[
            "flow", "--gen", "Q", "--start", "1", "-1", "0", "0", "--s-end", "1",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("flow.csv")).unwrap();
    let last: Vec<f64> = csv
        .lines()
        .last()
        .unwrap()
        .split(',')
        .map(|v| v.parse().unwrap())
        .collect();
    let want = [1.0, 1.0, -1.0, 2.0, -2.0];
    for (a, b) in last.iter().zip(want) {
        assert!((a - b).abs() < 1e-10, "{last:?}");
    }
    assert_eq!(csv.lines().count(), 1002);
}

#[test]
fn schrodinger_exports_fields_and_flags() {
    let dir = tempfile::tempdir().unwrap();
    let o = kahler(
        &[
            "schrodinger",
            "--gen",
            "H",
            "--s-end",
            "0.02",
            "--flags",
            "as-printed",
        ],
        dir.path(),
    );
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let summary: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("schrodinger.summary.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(summary["params"]["flags"]["sign_z2_term"], -1);
    assert!(summary["summary"]["max_reduced"].as_f64().unwrap() > 0.0);
    let csv = std::fs::read_to_string(dir.path().join("schrodinger.csv")).unwrap();
    assert!(
        csv.starts_with("s,u,abs_residual_eq23,abs_residual_eq21,hamiltonian_re,hamiltonian_im")
    );
}

#[test]
fn each_suite_writes_its_verdicts() {
    for cmd in ["kahler-check", "pde-check", "isometry-check", "fields"] {
        let dir = tempfile::tempdir().unwrap();
        let o = kahler(&[cmd], dir.path());
        assert_eq!(o.status.code(), Some(0), "{cmd}");
        let doc: serde_json::Value = serde_json::from_str(
            &std::fs::read_to_string(dir.path().join(format!("{cmd}.verdicts.json"))).unwrap(),
        )
        .unwrap();
        assert_eq!(doc["command"], cmd);
        assert_eq!(doc["schema_version"], 1);
        assert!(doc["summary"]["ok"].as_bool().unwrap());
    }
}

#[test]
fn tolerance_overrides_reach_the_document_and_the_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let o = kahler(&["metric", "--tol", "dual.gradient=1e-15"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    let doc: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("metric.verdicts.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(
        doc["config"]["settings"]["tolerances"]["dual.gradient"],
        1e-15
    );
    let v = doc["verdicts"]
        .as_array()
        .unwrap()
        .iter()
        .find(|v| v["claim"] == "dual.gradient")
        .unwrap();
    assert_eq!(v["status"], "FAIL");
}

#[test]
fn config_file_is_read_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(
        &cfg,
        "seed = 11\nrandom_states = 5\n\"tol.pro40.G\" = 1e-9\n",
    )
    .unwrap();
    let o = kahler(
        &["fields", "--config", cfg.to_str().unwrap(), "--seed", "12"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0));
    let doc: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("fields.verdicts.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(doc["seed"], 12);
    assert_eq!(doc["config"]["settings"]["random_states"], 5);
    assert_eq!(doc["config"]["settings"]["tolerances"]["pro40.G"], 1e-9);
}

#[test]
fn out_dir_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_kahler"))
        .args(["fields"])
        .env("KAHLER_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(dir.path().join("fields.verdicts.json").exists());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    // config errors
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "no_such_key = 1\n").unwrap();
    assert_eq!(
        kahler(&["fields", "--config", bad.to_str().unwrap()], dir.path())
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        kahler(&["fields", "--tol", "oops"], dir.path())
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        kahler(&["flow", "--gen", "X"], dir.path()).status.code(),
        Some(2)
    );
    assert_eq!(
        kahler(&["no-such-command"], dir.path()).status.code(),
        Some(2)
    );
    // domain errors
    assert_eq!(
        kahler(&["metric", "--theta", "0", "0.5"], dir.path())
            .status
            .code(),
        Some(3)
    );
    let o = kahler(
        &[
            "flow", "--gen", "P", "--start", "1", "-1", "0", "0", "--s-end", "1",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("left the domain"));
    // output directory is a regular file
    let file = dir.path().join("occupied");
    std::fs::write(&file, "").unwrap();
    assert_eq!(kahler(&["fields"], &file).status.code(), Some(4));
}
