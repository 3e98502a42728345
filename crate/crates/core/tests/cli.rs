use std::process::Command;

const CONFIG: &str = r#"{
    "marginals": {"random_mixture": {"count": 2, "seed": 3}},
    "cover": {"uniform": {"knots": 6}},
    "cost": {"random": {"k_pos": 2, "k_neg": 1, "seed": 3}},
    "mc": {"samples": 2000, "reps": 4, "seed": 1}
}"#;

fn mmot() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mmot"))
}

#[test]
fn solve_writes_a_report() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.json");
    let out = dir.path().join("report.json");
    std::fs::write(&config, CONFIG).unwrap();
    let status = mmot().arg("solve").arg("--config").arg(&config).arg("--out").arg(&out).status().unwrap();
    assert!(status.success());
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let lb = report["alpha_lb"].as_f64().unwrap();
    let gap = report["relaxed_gap"].as_f64().unwrap();
    assert!(lb.is_finite());
    assert!(gap <= 1e-4);
    assert_eq!(report["knots"], serde_json::json!([6, 6]));
}

#[test]
fn sweep_writes_one_row_per_count() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.json");
    let out = dir.path().join("curve.csv");
    std::fs::write(&config, CONFIG).unwrap();
    let status = mmot()
        .args(["sweep", "--knots", "3,5,9", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .env("MMOT_THREADS", "1")
        .status()
        .unwrap();
    assert!(status.success());
    let mut reader = csv::Reader::from_path(&out).unwrap();
    let knots: Vec<String> = reader.records().map(|r| r.unwrap()[0].to_string()).collect();
    assert_eq!(knots, ["3", "5", "9"]);
}

#[test]
fn oracle_check_and_radius_succeed() {
    let out = mmot().args(["oracle-check", "--seed", "4", "--n", "2"]).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.json");
    std::fs::write(&config, CONFIG).unwrap();
    let out = mmot().arg("radius").arg("--config").arg(&config).output().unwrap();
    assert!(out.status.success());
    assert!(!out.stdout.is_empty());
}

#[test]
fn bad_config_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.json");
    std::fs::write(&config, "{\"marginals\": 3}").unwrap();
    let status = mmot().arg("solve").arg("--config").arg(&config).status().unwrap();
    assert_eq!(status.code(), Some(1));
}
