use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const SMALL: &str = r#"
seed = 5

[corpus]
width = 6
eval_test = 20
eval_dev = 20

[gm]
levels = ["elr", "swlr", "clr-cnn"]
hidden = 16
char_dim = 4
name_len = 12
char_widths = [1, 2]
char_filters = 4
epochs = 4
patience = 2
batch_size = 20

[cm]
word_dim = 8
hidden = 12
widths = [1, 2]
filters = 4
type_dim = 8
epochs = 3
patience = 2
batch_size = 40

[synth]
vocab_size = 150
num_types = 8
entities = 80
contexts_min = 3
contexts_max = 6
embedding_dim = 8
"#;

fn figment(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_figment"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = figment(dir, args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn workspace() -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("run.toml"), SMALL).unwrap();
    dir
}

fn full_run(dir: &Path) -> String {
    let c = ["-c", "run.toml"];
    for step in [&["synth"][..], &["preprocess"], &["train", "gm"], &["train", "cm"], &["predict", "gm"], &["predict", "cm"]] {
        let args: Vec<&str> = c.iter().chain(step.iter()).copied().collect();
        ok(dir, &args);
    }
    ok(dir, &["joint", "--gm", "out/scores/gm.test.tsv", "--cm", "out/scores/cm.test.tsv", "--out", "out/scores/joint.test.tsv"]);
    ok(dir, &["joint", "--gm", "out/scores/gm.dev.tsv", "--cm", "out/scores/cm.dev.tsv", "--out", "out/scores/joint.dev.tsv"]);
    ok(dir, &["-c", "run.toml", "evaluate", "--scores", "out/scores/joint.test.tsv", "--dev", "out/scores/joint.dev.tsv"])
}

fn artifacts(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut files = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                files.push((p.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&p).unwrap()));
            }
        }
    }
    files.sort();
    files
}

#[test]
fn full_command_chain_produces_hashed_artifacts() {
    let dir = workspace();
    let report = full_run(dir.path());
    let json: serde_json::Value = serde_json::from_str(&report).unwrap();
    let hash = json["config_hash"].as_str().unwrap().to_string();
    for slice in ["all", "head", "tail", "known", "unknown"] {
        assert!(json["entity_slices"][slice]["size"].is_u64(), "{slice}");
    }
    assert!(json["entity_slices"]["all"]["metrics"]["micro_f1"].is_f64());
    for f in ["out/scores/gm.test.tsv", "out/contexts/train.tsv", "out/split/dev.txt", "out/gm.log.tsv", "corpus.tsv"] {
        let text = fs::read_to_string(dir.path().join(f)).unwrap();
        assert_eq!(text.lines().next().unwrap(), format!("# config_hash={hash}"), "{f}");
    }
    let log = fs::read_to_string(dir.path().join("out/cm.log.tsv")).unwrap();
    let epochs: Vec<usize> = log.lines().skip(2).filter(|l| !l.starts_with('#')).map(|l| l.split('\t').next().unwrap().parse().unwrap()).collect();
    assert_eq!(epochs, (1..=epochs.len()).collect::<Vec<_>>());
}

#[test]
fn reruns_are_byte_identical() {
    let a = workspace();
    let b = workspace();
    assert_eq!(full_run(a.path()), full_run(b.path()));
    assert_eq!(artifacts(a.path()), artifacts(b.path()));
}

#[test]
fn evaluate_refuses_mismatched_hashes_unless_forced() {
    let dir = workspace();
    full_run(dir.path());
    let args = ["-c", "run.toml", "--set", "seed=6", "evaluate", "--scores", "out/scores/gm.test.tsv", "--dev", "out/scores/gm.dev.tsv"];
    let out = figment(dir.path(), &args);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("config hash"));
    let forced: Vec<&str> = args.iter().copied().chain(["--force"]).collect();
    ok(dir.path(), &forced);
}

#[test]
fn failures_exit_nonzero_with_a_diagnostic() {
    let dir = workspace();
    ok(dir.path(), &["-c", "run.toml", "synth"]);
    let corpus = dir.path().join("corpus.tsv");
    let mut text = fs::read_to_string(&corpus).unwrap();
    text.push_str("broken line\t/m/e00000,4\n");
    fs::write(&corpus, &text).unwrap();
    let line = text.lines().count();
    let out = figment(dir.path(), &["-c", "run.toml", "preprocess"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains(&format!("corpus.tsv:{line}:")));

    fs::write(&corpus, "").unwrap();
    assert!(!figment(dir.path(), &["-c", "run.toml", "preprocess"]).status.success());

    let out = figment(dir.path(), &["-c", "run.toml", "--set", "gm.bogus=1", "synth"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("bogus"));
}

#[test]
fn train_without_preprocess_fails() {
    let dir = workspace();
    ok(dir.path(), &["-c", "run.toml", "synth"]);
    assert!(!figment(dir.path(), &["-c", "run.toml", "train", "gm"]).status.success());
}
