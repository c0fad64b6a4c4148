use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cueselect"))
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Generates a small corpus into `<dir>/gen` and writes a config pointing at it.
fn workspace() -> (tempfile::TempDir, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.conf");
    let gen = dir.path().join("gen");
    fs::write(
        &config,
        format!(
            "paths:\n  corpus = {g}/corpus.jsonl\n  oracle = {g}/oracle.jsonl\n  out_dir = {o}\n\
             generator:\n  n_docs = 1200\n  visible_fraction = 0.25\n\
             campaign:\n  rounds = 1\n  budget = 400\n\
             embedding:\n  dim = 128\n",
            g = gen.display(),
            o = dir.path().join("out").display()
        ),
    )
    .unwrap();
    let o = run(dir.path(), &["-c", config.to_str().unwrap(), "generate", "--paths.out_dir", gen.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    (dir, config)
}

#[test]
fn help_lists_every_key() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["--help"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    for key in ["paths.corpus", "bm25.k1", "embedding.provider", "campaign.cap", "generator.planted"] {
        assert!(text.contains(key), "missing {key}");
    }
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&run(dir.path(), &["frobnicate"])), 1);
    assert_eq!(code(&run(dir.path(), &["index", "--bm25.kk", "2"])), 1);
    assert_eq!(code(&run(dir.path(), &["index"])), 1, "paths.corpus unset");
    fs::write(dir.path().join("bad.conf"), "bm25:\n  k1 = 1.2\n  typo = 3\n").unwrap();
    let o = run(dir.path(), &["-c", "bad.conf", "config"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("bad.conf:3"), "{}", stderr(&o));
}

#[test]
fn data_errors_exit_two_and_name_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["index", "--paths.corpus", "missing.jsonl"]);
    assert_eq!(code(&o), 2);
    fs::write(dir.path().join("c.jsonl"), "{\"id\":\"a\",\"text\":\"x\"}\n{\"id\":\"a\",\"text\":\"y\"}\n").unwrap();
    let o = run(dir.path(), &["index", "--paths.corpus", "c.jsonl"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("c.jsonl:2"), "{}", stderr(&o));
}

#[test]
fn config_snapshot_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["config", "--campaign.cap", "50,25", "--bm25.b=0.5"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    fs::write(dir.path().join("snap.conf"), &o.stdout).unwrap();
    let again = run(dir.path(), &["-c", "snap.conf", "config"]);
    assert_eq!(stdout(&again), stdout(&o));
    assert!(stdout(&o).contains("50,25"));
}

#[test]
fn pipeline_commands() {
    let (dir, config) = workspace();
    let c = config.to_str().unwrap();
    let d = dir.path();

    let o = run(d, &["-c", c, "index"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("documents: 1200"));

    let o = run(d, &["-c", c, "search", "health", "weight", "gym", "exercise", "--category", "health"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("precision@k for health"), "{}", stdout(&o));

    let o = run(d, &["-c", c, "suggest", "--category", "health"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(fs::read_to_string(d.join("out/queries.txt")).unwrap().contains("[health]"));

    let o = run(d, &["-c", c, "train", "--category", "health"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(d.join("out/health.model").exists());
    let o = run(d, &["-c", c, "eval", "--category", "health"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("macro"), "{}", stdout(&o));
}

#[test]
fn select_is_repeatable_and_import_checks_ids() {
    let (dir, config) = workspace();
    let c = config.to_str().unwrap();
    let d = dir.path();
    let args = ["-c", c, "select", "--category", "health", "--campaign.annotation", "file"];
    let first = run(d, &args);
    assert_eq!(code(&first), 0, "{}", stderr(&first));
    let pending_a = fs::read(d.join("out/pending.jsonl")).unwrap();
    let second = run(d, &args);
    assert_eq!(stdout(&first), stdout(&second));
    assert_eq!(pending_a, fs::read(d.join("out/pending.jsonl")).unwrap());

    let pending = d.join("out/pending.jsonl");
    let labels = d.join("labels.jsonl");
    fs::write(&labels, "{\"id\":\"not-pending\",\"category\":\"health\",\"label\":1}\n").unwrap();
    let o = run(d, &["-c", c, "import", "--pending", pending.to_str().unwrap(), "--labels", labels.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("not-pending"), "{}", stderr(&o));

    let first_id = String::from_utf8(pending_a).unwrap().lines().next().map(|l| {
        let v: serde_json::Value = serde_json::from_str(l).unwrap();
        v["id"].as_str().unwrap().to_string()
    });
    if let Some(id) = first_id {
        fs::write(&labels, format!("{{\"id\":\"{id}\",\"category\":\"health\",\"label\":1}}\n")).unwrap();
        let o = run(d, &["-c", c, "import", "--pending", pending.to_str().unwrap(), "--labels", labels.to_str().unwrap()]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
}

#[test]
fn campaign_outputs_are_reproducible() {
    let (dir, config) = workspace();
    let c = config.to_str().unwrap();
    let d = dir.path();
    let o = run(d, &["-c", c, "campaign"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv_a = fs::read(d.join("out/campaign.csv")).unwrap();
    let summary = fs::read_to_string(d.join("out/summary.txt")).unwrap();
    assert!(summary.contains("fused") && summary.contains("random"));
    let o = run(d, &["-c", c, "campaign"]);
    assert_eq!(code(&o), 0);
    assert_eq!(csv_a, fs::read(d.join("out/campaign.csv")).unwrap());
    let text = String::from_utf8(csv_a).unwrap();
    assert!(text.starts_with("round,category,arm,n_labeled,minority_f1,macro_f1,precision_at_k,batch_size\n"));
    assert!(d.join("out/config.txt").exists());

    let o = run(d, &["-c", c, "campaign", "--campaign.rounds", "0"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = fs::read_to_string(d.join("out/campaign.csv")).unwrap();
    assert!(text.lines().skip(1).all(|l| l.starts_with("0,")), "{text}");
}
