//! One function per subcommand. Each reads its inputs from the paths in the
//! config, writes its artifacts under `paths.out_dir`, and returns a short
//! human-readable summary.
//!
//! Output layout:
//!
//! ```text
//! out_dir/split/{train,dev,test}.txt
//! out_dir/contexts/{train,dev,test}.tsv
//! out_dir/preprocess.json
//! out_dir/{gm,cm}.ckpt
//! out_dir/{gm,cm}.log.tsv
//! out_dir/scores/{gm,cm}.{dev,test}.tsv
//! ```

use std::path::{Path, PathBuf};

use figment_core::joint::joint_predict;
use figment_core::synth::generate;

use crate::checkpoint::Checkpoint;
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::formats;
use crate::pipeline::{evaluate, prepare, train_cm, train_gm, CmRun, GmRun, Prepared, Resources};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Gm,
    Cm,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Gm => "gm",
            ModelKind::Cm => "cm",
        }
    }
}

pub fn checkpoint_path(cfg: &RunConfig, kind: ModelKind) -> PathBuf {
    cfg.paths.out_dir.join(format!("{}.ckpt", kind.name()))
}

pub fn log_path(cfg: &RunConfig, kind: ModelKind) -> PathBuf {
    cfg.paths.out_dir.join(format!("{}.log.tsv", kind.name()))
}

pub fn scores_path(cfg: &RunConfig, kind: ModelKind, split: &str) -> PathBuf {
    cfg.paths.out_dir.join("scores").join(format!("{}.{split}.tsv", kind.name()))
}

fn check_hash(path: &Path, expected: &str, found: Option<&str>, force: bool) -> Result<()> {
    let found = found.unwrap_or_default();
    if force || found == expected {
        Ok(())
    } else {
        Err(Error::HashMismatch { path: path.to_path_buf(), expected: expected.into(), found: found.into() })
    }
}

/// Writes a synthetic corpus, catalog, inventory, embeddings and descriptions.
pub fn synth(cfg: &RunConfig) -> Result<String> {
    let world = generate(&cfg.synth.spec(cfg.seed))?;
    let hash = cfg.hash();
    let h = Some(hash.as_str());
    let p = &cfg.paths;
    let inventory = figment_core::corpus::TypeInventory::new(world.types.clone())?;
    formats::write_text(&p.inventory, &formats::format_inventory(&world.types, h))?;
    formats::write_text(&p.corpus, &formats::format_corpus(&world.sentences, h))?;
    formats::write_text(&p.catalog, &formats::format_catalog(&world.records, &inventory, h))?;
    let dim = cfg.synth.embedding_dim;
    let tables = [
        (&p.entity_embeddings, &world.entity_vectors),
        (&p.word_embeddings, &world.word_vectors),
        (&p.subword_embeddings, &world.word_vectors),
        (&p.type_embeddings, &world.type_vectors),
    ];
    for (path, rows) in tables {
        if let Some(path) = path {
            formats::write_text(path, &formats::format_embeddings(dim, rows))?;
        }
    }
    if let Some(path) = &p.descriptions {
        formats::write_text(path, &formats::format_descriptions(&world.descriptions, h))?;
    }
    Ok(format!(
        "synth: {} entities, {} types, {} sentences",
        world.records.len(),
        world.types.len(),
        world.sentences.len()
    ))
}

/// Cleans and splits the corpus, extracts and samples contexts.
pub fn preprocess(cfg: &RunConfig) -> Result<String> {
    let res = Resources::load(&cfg.paths)?;
    let prep = prepare(cfg, &res)?;
    prep.write(&cfg.paths.out_dir, &cfg.hash())?;
    let r = &prep.report;
    Ok(format!(
        "preprocess: kept {} of {} sentences, {} contexts; train/dev/test entities {}/{}/{}",
        r.kept_sentences, r.sentences, r.contexts, r.train_entities, r.dev_entities, r.test_entities
    ))
}

fn load_prepared(cfg: &RunConfig, force: bool) -> Result<(Resources, Prepared)> {
    let res = Resources::load(&cfg.paths)?;
    let prep = Prepared::load(&cfg.paths.out_dir, &res, &cfg.hash(), force)?;
    Ok((res, prep))
}

/// Trains one model on the preprocessed data; writes checkpoint and log.
pub fn train(cfg: &RunConfig, kind: ModelKind, force: bool) -> Result<String> {
    let (res, prep) = load_prepared(cfg, force)?;
    let types = prep.inventory.ids().to_vec();
    let (ck, log) = match kind {
        ModelKind::Gm => {
            let run = train_gm(cfg, &res, &prep)?;
            (run.checkpoint(cfg, &types), run.log)
        }
        ModelKind::Cm => {
            let run = train_cm(cfg, &res, &prep)?;
            (run.checkpoint(cfg, &types), run.log)
        }
    };
    ck.write(&checkpoint_path(cfg, kind))?;
    formats::write_text(&log_path(cfg, kind), &formats::format_log(&log, Some(&cfg.hash())))?;
    Ok(format!(
        "train {}: best epoch {} of {}, dev micro F1 {:.4}",
        kind.name(),
        log.best_epoch,
        log.epochs.len(),
        log.best_dev_micro_f1
    ))
}

/// Scores the dev and test entities with a trained checkpoint.
pub fn predict(cfg: &RunConfig, kind: ModelKind, force: bool) -> Result<String> {
    let path = checkpoint_path(cfg, kind);
    let ck = Checkpoint::read(&path)?;
    check_hash(&path, &cfg.hash(), Some(&ck.config_hash), force)?;
    let (res, prep) = load_prepared(cfg, force)?;
    let types = prep.inventory.ids().to_vec();
    let hash = cfg.hash();
    let (dev, test) = match kind {
        ModelKind::Gm => {
            let run = GmRun::from_checkpoint(cfg, &ck)?;
            (run.scores(cfg, &res, &prep.dev_entities())?, run.scores(cfg, &res, &prep.test_entities())?)
        }
        ModelKind::Cm => {
            let run = CmRun::from_checkpoint(cfg, &ck)?;
            (run.scores(&prep.dev_bags, &types)?, run.scores(&prep.test_bags, &types)?)
        }
    };
    formats::write_text(&scores_path(cfg, kind, "dev"), &formats::format_scores(&dev, Some(&hash)))?;
    formats::write_text(&scores_path(cfg, kind, "test"), &formats::format_scores(&test, Some(&hash)))?;
    Ok(format!("predict {}: {} dev and {} test entities", kind.name(), dev.num_entities(), test.num_entities()))
}

/// Averages two score files; both must come from the same configuration.
pub fn joint(gm: &Path, cm: &Path, out: &Path, force: bool) -> Result<String> {
    let (g, gh) = formats::read_scores(gm, None)?;
    let (c, ch) = formats::read_scores(cm, Some(g.types()))?;
    let gh = gh.unwrap_or_default();
    check_hash(cm, &gh, ch.as_deref(), force)?;
    let j = joint_predict(&g, &c)?;
    let hash = if gh.is_empty() { None } else { Some(gh.as_str()) };
    formats::write_text(out, &formats::format_scores(&j, hash))?;
    Ok(format!("joint: {} entities x {} types", j.num_entities(), j.num_types()))
}

/// Tunes thresholds on `dev`, evaluates `scores`, returns the report JSON.
pub fn evaluate_files(cfg: &RunConfig, scores: &Path, dev: &Path, force: bool) -> Result<String> {
    let hash = cfg.hash();
    let (res, prep) = load_prepared(cfg, force)?;
    let types = res.inventory.ids().to_vec();
    let (test, th) = formats::read_scores(scores, Some(&types))?;
    check_hash(scores, &hash, th.as_deref(), force)?;
    let (dev_scores, dh) = formats::read_scores(dev, Some(&types))?;
    check_hash(dev, &hash, dh.as_deref(), force)?;
    let report = evaluate(cfg, &test, &dev_scores, &prep, &[])?;
    Ok(formats::format_metrics(&report, Some(&hash)))
}
