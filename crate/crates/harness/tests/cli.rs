use std::process::Command;

fn cave() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cave"))
}

#[test]
fn run_replay_summarize() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("episodes.ndjson");
    let out = cave()
        .args(["run", "--agent", "oracle", "--grid", "3", "--pits", "1", "--wumpus", "1", "--trials", "4"])
        .args(["--seed", "9", "--parallelism", "2", "--out"])
        .arg(&log)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("runs: 4"));
    assert_eq!(cave_harness::load_records(&log).unwrap().len(), 4);

    let out = cave().args(["replay", "--episode", "2", "--log"]).arg(&log).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.starts_with("start | score 50"));
    assert!(text.contains("replay verified"));

    let prices = dir.path().join("prices.toml");
    std::fs::write(&prices, "[default]\nprompt_per_1k = 1.0\ncompletion_per_1k = 2.0\n").unwrap();
    let out = cave().args(["summarize", "--json", "--log"]).arg(&log).arg("--prices").arg(&prices).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(summary["runs"], 4);
    assert_eq!(summary["total_cost"], 0.0);
}

#[test]
fn llm_run_against_mock_script() {
    let dir = tempfile::tempdir().unwrap();
    let replies: Vec<_> = (0..3)
        .map(|_| serde_json::json!({"content": "Action: <exit>", "usage": {"prompt_tokens": 5, "completion_tokens": 2, "total_tokens": 7}}))
        .collect();
    let server = cave_harness::MockServer::start(serde_json::from_value(replies.into()).unwrap(), 0).unwrap();
    let log = dir.path().join("llm.ndjson");
    let out = cave()
        .args(["run", "--agent", "llm", "--mechanism", "cot", "--model", "mock", "--endpoint", &server.url()])
        .args(["--grid", "3", "--pits", "0", "--wumpus", "1", "--trials", "3", "--parallelism", "1", "--out"])
        .arg(&log)
        .env_remove("CAVE_API_KEY")
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let records = cave_harness::load_records(&log).unwrap();
    assert_eq!(records.len(), 3);
    assert!(records.iter().all(|r| r.status == cave_core::Status::Exited));
    assert_eq!(records.iter().map(|r| r.total_usage().total_tokens).sum::<u64>(), 21);
}

#[test]
fn corrupt_log_names_line() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("bad.ndjson");
    std::fs::write(&log, "\n{not json\n").unwrap();
    let out = cave().args(["summarize", "--log"]).arg(&log).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
}

#[test]
fn mechanism_needs_llm_agent() {
    let dir = tempfile::tempdir().unwrap();
    let out = cave()
        .args(["run", "--agent", "oracle", "--mechanism", "cos", "--trials", "1", "--out"])
        .arg(dir.path().join("x.ndjson"))
        .output()
        .unwrap();
    assert!(!out.status.success());
}
