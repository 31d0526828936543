use std::collections::BTreeSet;
use std::fs;

use figment::checkpoint::Checkpoint;
use figment::commands::{self, ModelKind};
use figment::formats;
use figment::pipeline::{evaluate, gold_for, prepare, train_cm, train_gm, CmRun, GmRun, Prepared, Resources};
use figment::RunConfig;
use figment_core::corpus::SLOT;
use figment_core::synth::generate;
use figment_core::train::tuned_micro_f1;

const CONFIG: &str = r#"
seed = 3

[corpus]
eval_dev = 6

[gm]
levels = ["elr", "swlr", "clr-cnn"]
hidden = 16
char_dim = 4
char_widths = [1, 2]
char_filters = 4
epochs = 6

[cm]
mode = "max-avg"
word_dim = 8
hidden = 12
widths = [1, 2]
filters = 4
epochs = 4

[synth]
num_types = 6
entities = 120
contexts_min = 1
contexts_max = 9
vocab_size = 150
embedding_dim = 8
noise = 0.3
"#;

fn setup() -> (RunConfig, Resources, Prepared) {
    let cfg = RunConfig::from_toml(CONFIG, &[]).unwrap();
    let res = Resources::from_world(&generate(&cfg.synth.spec(cfg.seed)).unwrap()).unwrap();
    let prep = prepare(&cfg, &res).unwrap();
    (cfg, res, prep)
}

#[test]
fn logged_best_epoch_is_the_returned_model() {
    let (cfg, res, prep) = setup();
    let types = prep.inventory.ids().to_vec();

    let gm = train_gm(&cfg, &res, &prep).unwrap();
    let dev = gm.scores(&cfg, &res, &prep.dev_entities()).unwrap();
    let f = tuned_micro_f1(dev.scores(), &gold_for(&dev, &prep.catalog).unwrap()).unwrap();
    assert_eq!(f, gm.log.best_dev_micro_f1);
    let best = gm.log.epochs.iter().map(|e| e.dev_micro_f1).fold(f64::NEG_INFINITY, f64::max);
    assert_eq!(gm.log.epochs[gm.log.best_epoch - 1].dev_micro_f1, best);

    let cm = train_cm(&cfg, &res, &prep).unwrap();
    let dev = cm.scores(&prep.dev_bags, &types).unwrap();
    let f = tuned_micro_f1(dev.scores(), &gold_for(&dev, &prep.catalog).unwrap()).unwrap();
    assert_eq!(f, cm.log.best_dev_micro_f1);
    assert!(cm.log.epochs.iter().all(|e| e.dev_micro_f1 <= f));
}

#[test]
fn checkpoints_reproduce_in_memory_scores() {
    let (cfg, res, prep) = setup();
    let types = prep.inventory.ids().to_vec();
    let test = prep.test_entities();

    let gm = train_gm(&cfg, &res, &prep).unwrap();
    let ck = Checkpoint::from_bytes(&gm.checkpoint(&cfg, &types).to_bytes()).unwrap();
    let back = GmRun::from_checkpoint(&cfg, &ck).unwrap();
    assert_eq!(back.scores(&cfg, &res, &test).unwrap(), gm.scores(&cfg, &res, &test).unwrap());

    let cm = train_cm(&cfg, &res, &prep).unwrap();
    let ck = Checkpoint::from_bytes(&cm.checkpoint(&cfg, &types).to_bytes()).unwrap();
    let back = CmRun::from_checkpoint(&cfg, &ck).unwrap();
    assert_eq!(back.scores(&prep.test_bags, &types).unwrap(), cm.scores(&prep.test_bags, &types).unwrap());
}

#[test]
fn preprocess_counts_match_a_recount() {
    let (cfg, res, prep) = setup();
    let r = &prep.report;
    let mentions: usize = res.sentences.iter().map(|s| s.mentions.len()).sum();
    assert_eq!(r.contexts, mentions);
    assert_eq!(r.train_entities + r.dev_entities + r.test_entities, res.catalog.len());

    let train: BTreeSet<&str> = prep.split.train.iter().map(String::as_str).collect();
    let dev: BTreeSet<&str> = prep.split.dev.iter().map(String::as_str).collect();
    assert!(prep.train_contexts.iter().all(|c| train.contains(c.entity.as_str())));
    assert!(prep.dev_bags.iter().all(|b| dev.contains(b.entity.as_str()) && b.len() <= cfg.corpus.eval_dev));
    assert_eq!(r.dev_contexts, prep.dev_bags.iter().map(|b| b.len()).sum::<usize>());
    let with_contexts: BTreeSet<&str> = res.sentences.iter().flat_map(|s| s.mentions.iter().map(|m| m.entity.as_str())).collect();
    assert_eq!(r.test_without_contexts, prep.split.test.iter().filter(|e| !with_contexts.contains(e.as_str())).count());

    let half = cfg.corpus.width / 2;
    for c in prep.train_contexts.iter().chain(prep.test_bags.iter().flat_map(|b| &b.contexts)) {
        assert_eq!(c.tokens.len(), cfg.corpus.width);
        assert_eq!(c.tokens[half], SLOT);
        assert_eq!(c.tokens.iter().filter(|t| *t == SLOT).count(), 1);
    }
}

#[test]
fn evaluate_command_matches_the_library() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("run.toml"), CONFIG).unwrap();
    let cfg = RunConfig::load(&dir.path().join("run.toml"), &[]).unwrap();
    commands::synth(&cfg).unwrap();
    commands::preprocess(&cfg).unwrap();
    commands::train(&cfg, ModelKind::Gm, false).unwrap();
    commands::predict(&cfg, ModelKind::Gm, false).unwrap();
    let test_path = commands::scores_path(&cfg, ModelKind::Gm, "test");
    let dev_path = commands::scores_path(&cfg, ModelKind::Gm, "dev");
    let json = commands::evaluate_files(&cfg, &test_path, &dev_path, false).unwrap();

    let res = Resources::load(&cfg.paths).unwrap();
    let prep = Prepared::load(&cfg.paths.out_dir, &res, &cfg.hash(), false).unwrap();
    let types = prep.inventory.ids().to_vec();
    let (test, _) = formats::read_scores(&test_path, Some(&types)).unwrap();
    let (dev, _) = formats::read_scores(&dev_path, Some(&types)).unwrap();
    let report = evaluate(&cfg, &test, &dev, &prep, &[]).unwrap();
    assert_eq!(json, formats::format_metrics(&report, Some(&cfg.hash())));

    let parsed: serde_json::Value = serde_json::from_str(&json).unwrap();
    let all = &parsed["entity_slices"]["all"];
    assert_eq!(all["size"].as_u64().unwrap() as usize, test.num_entities());
    for key in ["p_at_1", "bep", "accuracy", "micro_f1", "entity_macro_f1", "map", "p_at_k", "type_macro_f1"] {
        let v = all["metrics"][key].as_f64().unwrap();
        assert!((0.0..=1.0).contains(&v), "{key}");
    }
}
