use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn rads(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rads"))
        .current_dir(dir)
        .env_remove("RADS_SEED")
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(out: &Output) {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn scores(dir: &Path) -> PathBuf {
    let p = dir.join("scores.jsonl");
    ok(&rads(dir, &["score", "--out", "scores.jsonl", "--seed", "3"]));
    p
}

#[test]
fn score_then_validate_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let p = scores(dir.path());
    let text = std::fs::read_to_string(&p).unwrap();
    assert_eq!(text.lines().count(), 135);
    let first: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
    assert_eq!(first["probs"].as_array().unwrap().len(), 10);
    let out = rads(dir.path(), &["validate", "--scores", "scores.jsonl"]);
    ok(&out);
    assert!(String::from_utf8_lossy(&out.stdout).contains("135 entries, 10 passes"));
}

#[test]
fn select_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    scores(dir.path());
    for policy in ["random", "rads", "greedy_utility"] {
        let args = |out: &'static str| {
            vec![
                "select",
                "--scores",
                "scores.jsonl",
                "--policy",
                policy,
                "--budget",
                "5",
                "--seed",
                "7",
                "--episodes",
                "20",
                "--out",
                out,
            ]
        };
        ok(&rads(dir.path(), &args("a.json")));
        ok(&rads(dir.path(), &args("b.json")));
        let a = std::fs::read(dir.path().join("a.json")).unwrap();
        assert_eq!(a, std::fs::read(dir.path().join("b.json")).unwrap());
        let v: serde_json::Value = serde_json::from_slice(&a).unwrap();
        assert!(v["selected"].as_array().unwrap().len() <= 5);
        assert_eq!(v["policy"], policy);
    }
}

#[test]
fn select_rejects_bad_budget_and_policy() {
    let dir = tempfile::tempdir().unwrap();
    scores(dir.path());
    let base = ["select", "--scores", "scores.jsonl", "--out", "sel.json"];
    let with = |extra: &[&str]| {
        let mut v = base.to_vec();
        v.extend_from_slice(extra);
        rads(dir.path(), &v)
    };
    assert_eq!(code(&with(&["--budget", "0"])), 2);
    assert_eq!(code(&with(&["--budget", "1000"])), 2);
    let out = with(&["--budget", "3", "--policy", "coreset"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown policy"));
    assert!(!dir.path().join("sel.json").exists());
}

#[test]
fn malformed_score_row_names_its_line() {
    let dir = tempfile::tempdir().unwrap();
    let good = r#"{"id":"a","probs":[[0.5,0.5],[0.4,0.6]]}"#;
    let bad = r#"{"id":"b","probs":[[0.5,0.3],[0.4,0.6]]}"#;
    std::fs::write(dir.path().join("s.jsonl"), format!("{good}\n{bad}\n")).unwrap();
    let out = rads(dir.path(), &["validate", "--scores", "s.jsonl"]);
    assert_eq!(code(&out), 2);
    assert!(
        String::from_utf8_lossy(&out.stderr).contains("line 2"),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn sweep_rejects_empty_and_unsorted_budgets() {
    let dir = tempfile::tempdir().unwrap();
    for budgets in ["", " , ", "4,2"] {
        let out = rads(dir.path(), &["sweep", "--budgets", budgets, "--out", "s.csv"]);
        assert_eq!(code(&out), 2, "{budgets:?}");
    }
}

#[test]
fn config_errors_name_the_field() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("c.json"),
        r#"{"harness": {"learner": {"dropout": 1.5}}}"#,
    )
    .unwrap();
    let out = rads(dir.path(), &["validate", "--config", "c.json"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("harness.learner.dropout"));
}

#[test]
fn experiment_csv_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let run = |out: &str| {
        rads(
            dir.path(),
            &[
                "experiment",
                "--policy",
                "uncertainty",
                "--budget",
                "3",
                "--runs",
                "2",
                "--resamples",
                "50",
                "--out",
                out,
            ],
        )
    };
    ok(&run("a.csv"));
    ok(&run("b.csv"));
    let a = std::fs::read_to_string(dir.path().join("a.csv")).unwrap();
    assert_eq!(a, std::fs::read_to_string(dir.path().join("b.csv")).unwrap());
    assert_eq!(a.lines().count(), 3);
    assert!(a.starts_with("policy,budget,budget_used,seed,src_acc"));
}

#[test]
fn env_seed_applies_when_flag_absent() {
    let dir = tempfile::tempdir().unwrap();
    scores(dir.path());
    let select = |seed_env: Option<&str>, extra: &[&str], out: &str| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_rads"));
        cmd.current_dir(dir.path()).env_remove("RADS_SEED");
        if let Some(s) = seed_env {
            cmd.env("RADS_SEED", s);
        }
        cmd.args([
            "select",
            "--scores",
            "scores.jsonl",
            "--policy",
            "random",
            "--budget",
            "4",
            "--out",
            out,
        ]);
        cmd.args(extra);
        ok(&cmd.output().unwrap());
        std::fs::read(dir.path().join(out)).unwrap()
    };
    let env11 = select(Some("11"), &[], "a.json");
    let flag11 = select(None, &["--seed", "11"], "b.json");
    let flag_wins = select(Some("11"), &["--seed", "12"], "c.json");
    let flag12 = select(None, &["--seed", "12"], "d.json");
    assert_eq!(env11, flag11);
    assert_eq!(flag_wins, flag12);
}

#[test]
fn corpusgap_reads_directories_and_jsonl() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    std::fs::create_dir(&a).unwrap();
    std::fs::write(a.join("1.txt"), "Chest pain, no fever.").unwrap();
    std::fs::write(a.join("2.txt"), "No acute fracture.").unwrap();
    std::fs::write(
        dir.path().join("b.jsonl"),
        "{\"id\":\"x\",\"text\":\"acute chest pain\"}\n{\"id\":\"y\",\"text\":\"fever\"}\n",
    )
    .unwrap();
    ok(&rads(
        dir.path(),
        &["corpusgap", "--a", "a", "--b", "b.jsonl", "--out", "gap.json"],
    ));
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("gap.json")).unwrap()).unwrap();
    let j = v["jaccard"].as_f64().unwrap();
    assert!(j > 0.0 && j < 1.0);
    std::fs::write(dir.path().join("bad.jsonl"), "{\"id\":\"x\"}\n").unwrap();
    let out = rads(
        dir.path(),
        &["corpusgap", "--a", "a", "--b", "bad.jsonl", "--out", "gap2.json"],
    );
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 1"));
}

#[test]
fn help_lists_defaults() {
    let out = Command::new(env!("CARGO_BIN_EXE_rads"))
        .args(["select", "--help"])
        .output()
        .unwrap();
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("[default: 300]") && text.contains("[default: 0.01]") && text.contains("[default: 0.9]"));
    let out = Command::new(env!("CARGO_BIN_EXE_rads"))
        .args(["score", "--help"])
        .output()
        .unwrap();
    assert!(String::from_utf8_lossy(&out.stdout).contains("[default: 10]"));
}
