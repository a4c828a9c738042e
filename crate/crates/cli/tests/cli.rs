use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn tvrec(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tvrec"))
        .arg("--out")
        .arg(out)
        .args(args)
        .env_remove("TVREC_OUT")
        .output()
        .expect("binary runs")
}

fn ok(o: &Output) -> String {
    assert!(
        o.status.success(),
        "exit {:?}\nstdout: {}\nstderr: {}",
        o.status,
        String::from_utf8_lossy(&o.stdout),
        String::from_utf8_lossy(&o.stderr)
    );
    String::from_utf8_lossy(&o.stdout).into_owned()
}

/// Six weeks is the smallest log with a fold; a short ranker keeps it quick.
const FAST: &str = r#"
seed = 7

[synth]
n_users = 40
n_channels = 5
programs_per_week = 200
n_weeks = 6

[eval.ltr]
rounds = 5
learning_rate = 0.1
max_leaves = 6
min_samples_leaf = 10
truncation_k = 10
seed = 0
"#;

fn setup() -> (tempfile::TempDir, std::path::PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, FAST).unwrap();
    let out = dir.path().join("out");
    ok(&tvrec(&out, &["--config", cfg.to_str().unwrap(), "synth"]));
    (dir, cfg)
}

fn no_staging_left(out: &Path) -> bool {
    fs::read_dir(out)
        .map(|d| {
            d.flatten()
                .all(|e| !e.file_name().to_string_lossy().starts_with(".staging"))
        })
        .unwrap_or(true)
}

#[test]
fn synth_then_evaluate_twice_gives_identical_reports() {
    let (dir, cfg) = setup();
    let out = dir.path().join("out");
    let c = cfg.to_str().unwrap();
    let table = ok(&tvrec(
        &out,
        &[
            "--config",
            c,
            "evaluate",
            "--scenario",
            "live",
            "--feedback",
            "live+catchup",
        ],
    ));
    let first = fs::read(out.join("report.csv")).unwrap();
    ok(&tvrec(
        &out,
        &[
            "--config",
            c,
            "evaluate",
            "--scenario",
            "live",
            "--feedback",
            "live+catchup",
        ],
    ));
    assert_eq!(first, fs::read(out.join("report.csv")).unwrap());

    assert!(table.contains("live/live+catchup @5"));
    assert!(table.contains("live/live+catchup @10"));
    for col in [
        "Accuracy",
        "Diversity",
        "Novelty",
        "Serendipity",
        "Accuracy (new)",
        "Global",
    ] {
        assert!(table.contains(col), "missing column {col}");
    }
    assert!(table.contains("UserPopular") && table.contains("GreedyRec"));
    let resolved = fs::read_to_string(out.join("run_config.toml")).unwrap();
    assert!(resolved.contains("seed = 7"));
    assert!(no_staging_left(&out));
}

#[test]
fn every_subcommand_writes_its_outputs() {
    let (dir, cfg) = setup();
    let out = dir.path().join("out");
    let c = cfg.to_str().unwrap();
    for f in ["epg.csv", "views.jsonl", "manifest.json", "run_config.toml"] {
        assert!(out.join(f).exists(), "synth did not write {f}");
    }

    let summary = ok(&tvrec(&out, &["--config", c, "ingest"]));
    assert!(summary.contains("40 users"), "{summary}");
    assert!(summary.contains("(0 dropped)"), "{summary}");
    let ingest: serde_json::Value = serde_json::from_slice(&fs::read(out.join("ingest.json")).unwrap()).unwrap();
    assert_eq!(ingest["programs"], 1200);
    assert!(ingest["quadruples"].as_u64().unwrap() > 0);

    ok(&tvrec(&out, &["--config", c, "train"]));
    for f in ["ranker.json", "wrmf.json", "train.svm", "validation.svm", "schema.json"] {
        assert!(out.join(f).exists(), "train did not write {f}");
    }

    ok(&tvrec(
        &out,
        &["--config", c, "rerank", "--objective", "0.5,0.25,0.25,0", "--k", "5"],
    ));
    let lists = fs::read_to_string(out.join("rerank.csv")).unwrap();
    let mut lines = lists.lines();
    assert_eq!(lines.next(), Some("user,time,rank,program,title"));
    let rows: Vec<&str> = lines.collect();
    assert!(!rows.is_empty());
    assert!(rows.iter().all(|r| {
        let rank: usize = r.split(',').nth(2).unwrap().parse().unwrap();
        (1..=5).contains(&rank)
    }));
    let resolved = fs::read_to_string(out.join("run_config.toml")).unwrap();
    assert!(resolved.contains("accuracy = 0.5"), "{resolved}");

    ok(&tvrec(
        &out,
        &["--config", c, "evaluate", "--algorithms", "Random,UserPopular"],
    ));
    fs::remove_file(out.join("report.txt")).unwrap();
    let table = ok(&tvrec(&out, &["report"]));
    assert!(table.contains("UserPopular"));
    assert!(!table.contains("GreedyRec"));
    assert!(out.join("report.txt").exists());
}

#[test]
fn unknown_config_keys_are_rejected_before_any_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "[synth]\nn_users = 10\nloyalty = 0.5\n").unwrap();
    let out = dir.path().join("out");
    let o = tvrec(&out, &["--config", cfg.to_str().unwrap(), "synth"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("loyalty"));
    assert!(!out.exists());
}

#[test]
fn invalid_values_fail_with_a_message() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = tvrec(&out, &["synth", "--channel-loyalty", "1.5"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("channel_loyalty"));

    let o = tvrec(&out, &["evaluate", "--objective", "1,2"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("four"));
}

#[test]
fn failed_runs_leave_no_partial_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = tvrec(&out, &["evaluate", "--views", "/nonexistent/views.jsonl"]);
    assert!(!o.status.success());
    let left: Vec<_> = fs::read_dir(&out).unwrap().flatten().map(|e| e.file_name()).collect();
    assert!(left.is_empty(), "left behind {left:?}");
}

#[test]
fn output_directory_comes_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("from-env");
    let o = Command::new(env!("CARGO_BIN_EXE_tvrec"))
        .args([
            "synth",
            "--users",
            "5",
            "--channels",
            "3",
            "--programs-per-week",
            "150",
            "--weeks",
            "1",
        ])
        .env("TVREC_OUT", &out)
        .output()
        .unwrap();
    ok(&o);
    assert!(out.join("views.jsonl").exists());
}

#[test]
fn partial_tables_fill_in_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("partial.toml");
    fs::write(
        &cfg,
        "[synth]\nn_users = 5\nn_channels = 3\nprograms_per_week = 150\nn_weeks = 1\n\n[eval.ltr]\nrounds = 3\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    ok(&tvrec(&out, &["--config", cfg.to_str().unwrap(), "synth"]));
    let resolved = fs::read_to_string(out.join("run_config.toml")).unwrap();
    assert!(resolved.contains("rounds = 3"), "{resolved}");
    assert!(resolved.contains("learning_rate = 0.1"), "{resolved}");
}
