//! Run configuration: one TOML file with a section per stage, plus
//! `section.key=value` overrides from the command line.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use figment_core::context::{EncoderConfig, EncoderKind, MimlMode};
use figment_core::corpus::{EvalSampling, TrainSampling};
use figment_core::eval::PartitionThresholds;
use figment_core::repr::{Level, Levels, MissingPolicy};
use figment_core::synth::{ContextCount, SyntheticSpec};
use figment_core::tensor::AdaGrad;
use figment_core::train::Schedule;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub paths: PathsConfig,
    pub corpus: CorpusConfig,
    pub gm: GmConfig,
    pub cm: CmConfig,
    pub eval: EvalConfig,
    pub synth: SynthConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 13,
            paths: PathsConfig::default(),
            corpus: CorpusConfig::default(),
            gm: GmConfig::default(),
            cm: CmConfig::default(),
            eval: EvalConfig::default(),
            synth: SynthConfig::default(),
        }
    }
}

/// Input files, relative to the config file's directory unless absolute.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsConfig {
    pub corpus: PathBuf,
    pub catalog: PathBuf,
    pub inventory: PathBuf,
    pub entity_embeddings: Option<PathBuf>,
    pub word_embeddings: Option<PathBuf>,
    pub subword_embeddings: Option<PathBuf>,
    pub type_embeddings: Option<PathBuf>,
    pub descriptions: Option<PathBuf>,
    pub out_dir: PathBuf,
}

impl Default for PathsConfig {
    fn default() -> Self {
        PathsConfig {
            corpus: PathBuf::from("corpus.tsv"),
            catalog: PathBuf::from("catalog.tsv"),
            inventory: PathBuf::from("types.txt"),
            entity_embeddings: Some(PathBuf::from("entity_vectors.txt")),
            word_embeddings: Some(PathBuf::from("word_vectors.txt")),
            subword_embeddings: Some(PathBuf::from("word_vectors.txt")),
            type_embeddings: Some(PathBuf::from("type_vectors.txt")),
            descriptions: Some(PathBuf::from("descriptions.tsv")),
            out_dir: PathBuf::from("out"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusConfig {
    /// Context window width including SLOT.
    pub width: usize,
    /// Train, dev, test shares of the entities.
    pub split: [f64; 3],
    pub min_per_type: usize,
    pub cap_per_type: usize,
    pub per_entity: f64,
    pub eval_test: usize,
    pub eval_dev: usize,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        let t = TrainSampling::default();
        let e = EvalSampling::default();
        CorpusConfig {
            width: 10,
            split: [0.5, 0.2, 0.3],
            min_per_type: t.min_per_type,
            cap_per_type: t.cap_per_type,
            per_entity: t.per_entity,
            eval_test: e.test,
            eval_dev: e.dev,
        }
    }
}

impl CorpusConfig {
    pub fn train_sampling(&self) -> TrainSampling {
        TrainSampling { min_per_type: self.min_per_type, cap_per_type: self.cap_per_type, per_entity: self.per_entity }
    }

    pub fn eval_sampling(&self) -> EvalSampling {
        EvalSampling { test: self.eval_test, dev: self.eval_dev }
    }
}

/// Input representation of the global model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GmFeatures {
    /// Embedding levels listed in `levels`.
    Dense,
    Nsl,
    Bow,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GmConfig {
    pub features: GmFeatures,
    pub levels: Vec<String>,
    pub hidden: usize,
    pub char_dim: usize,
    pub name_len: usize,
    pub char_widths: Vec<usize>,
    pub char_filters: usize,
    /// `zero` or `strict` for entities without an embedding.
    pub missing: String,
    pub des_top_k: usize,
    pub epochs: usize,
    pub patience: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
}

impl Default for GmConfig {
    fn default() -> Self {
        GmConfig {
            features: GmFeatures::Dense,
            levels: vec![String::from("elr")],
            hidden: 100,
            char_dim: 16,
            name_len: 24,
            char_widths: vec![1, 2, 3, 4],
            char_filters: 25,
            missing: String::from("zero"),
            des_top_k: 20,
            epochs: 100,
            patience: 10,
            batch_size: 50,
            learning_rate: 0.05,
        }
    }
}

impl GmConfig {
    pub fn levels(&self) -> Result<Levels> {
        let parsed = self.levels.iter().map(|l| Level::parse(l)).collect::<figment_core::Result<Vec<_>>>()?;
        Ok(Levels::new(parsed)?)
    }

    pub fn missing_policy(&self) -> Result<MissingPolicy> {
        match self.missing.as_str() {
            "zero" => Ok(MissingPolicy::Zero),
            "strict" => Ok(MissingPolicy::Strict),
            other => Err(Error::Config(format!("unknown missing-embedding policy `{other}`"))),
        }
    }

    pub fn schedule(&self) -> Schedule {
        Schedule {
            epochs: self.epochs,
            patience: self.patience,
            batch_size: self.batch_size,
            optimizer: AdaGrad { learning_rate: self.learning_rate, ..AdaGrad::default() },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CmConfig {
    pub encoder: String,
    pub mode: String,
    pub word_dim: usize,
    pub hidden: usize,
    pub widths: Vec<usize>,
    pub filters: usize,
    pub unshared_halves: bool,
    pub type_dim: usize,
    /// Seed the word table from the word embedding file when dimensions match.
    pub init_words: bool,
    /// Seed attention type vectors from the type embedding file when dimensions match.
    pub init_types: bool,
    pub epochs: usize,
    pub patience: usize,
    pub batch_size: usize,
    pub bags_per_batch: usize,
    pub bag_cap: usize,
    pub learning_rate: f64,
}

impl Default for CmConfig {
    fn default() -> Self {
        CmConfig {
            encoder: String::from("cnn"),
            mode: String::from("ds"),
            word_dim: 100,
            hidden: 600,
            widths: vec![1, 2, 3, 4],
            filters: 300,
            unshared_halves: false,
            type_dim: 100,
            init_words: true,
            init_types: true,
            epochs: 100,
            patience: 10,
            batch_size: 100,
            bags_per_batch: 10,
            bag_cap: 100,
            learning_rate: 0.05,
        }
    }
}

impl CmConfig {
    pub fn kind(&self) -> Result<EncoderKind> {
        Ok(EncoderKind::parse(&self.encoder)?)
    }

    pub fn miml_mode(&self) -> Result<MimlMode> {
        Ok(MimlMode::parse(&self.mode)?)
    }

    pub fn encoder_config(&self, width: usize) -> Result<EncoderConfig> {
        let cfg = EncoderConfig {
            kind: self.kind()?,
            width,
            word_dim: self.word_dim,
            hidden: self.hidden,
            filter_widths: self.widths.clone(),
            filters_per_width: self.filters,
            unshared_halves: self.unshared_halves,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn train_config(&self) -> figment_core::context::CmTrainConfig {
        figment_core::context::CmTrainConfig {
            schedule: Schedule {
                epochs: self.epochs,
                patience: self.patience,
                batch_size: self.batch_size,
                optimizer: AdaGrad { learning_rate: self.learning_rate, ..AdaGrad::default() },
            },
            bags_per_batch: self.bags_per_batch,
            bag_cap: self.bag_cap,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub k: usize,
    pub entity_head_above: u64,
    pub entity_tail_below: u64,
    pub type_head_above: u64,
    pub type_tail_below: u64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            k: 50,
            entity_head_above: PartitionThresholds::ENTITIES.head_above,
            entity_tail_below: PartitionThresholds::ENTITIES.tail_below,
            type_head_above: PartitionThresholds::TYPES.head_above,
            type_tail_below: PartitionThresholds::TYPES.tail_below,
        }
    }
}

impl EvalConfig {
    pub fn entity_thresholds(&self) -> PartitionThresholds {
        PartitionThresholds { head_above: self.entity_head_above, tail_below: self.entity_tail_below }
    }

    pub fn type_thresholds(&self) -> PartitionThresholds {
        PartitionThresholds { head_above: self.type_head_above, tail_below: self.type_tail_below }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub vocab_size: usize,
    pub num_types: usize,
    pub entities: usize,
    pub contexts_min: usize,
    pub contexts_max: usize,
    pub indicative_per_type: usize,
    pub indicative_strength: f64,
    pub noise: f64,
    pub name_strength: f64,
    pub fine_fraction: f64,
    pub embedding_dim: usize,
    pub embedding_noise: f64,
    pub split_channels: bool,
}

impl Default for SynthConfig {
    fn default() -> Self {
        let s = SyntheticSpec::default();
        let n = match s.contexts {
            ContextCount::Fixed(n) => n,
            ContextCount::Uniform { max, .. } => max,
        };
        SynthConfig {
            vocab_size: s.vocab_size,
            num_types: s.num_types,
            entities: s.entities,
            contexts_min: n,
            contexts_max: n,
            indicative_per_type: s.indicative_per_type,
            indicative_strength: s.indicative_strength,
            noise: s.noise,
            name_strength: s.name_strength,
            fine_fraction: s.fine_fraction,
            embedding_dim: s.embedding_dim,
            embedding_noise: s.embedding_noise,
            split_channels: s.split_channels,
        }
    }
}

impl SynthConfig {
    pub fn spec(&self, seed: u64) -> SyntheticSpec {
        let contexts = if self.contexts_min == self.contexts_max {
            ContextCount::Fixed(self.contexts_min)
        } else {
            ContextCount::Uniform { min: self.contexts_min, max: self.contexts_max }
        };
        SyntheticSpec {
            vocab_size: self.vocab_size,
            num_types: self.num_types,
            entities: self.entities,
            contexts,
            indicative_per_type: self.indicative_per_type,
            indicative_strength: self.indicative_strength,
            noise: self.noise,
            name_strength: self.name_strength,
            fine_fraction: self.fine_fraction,
            embedding_dim: self.embedding_dim,
            embedding_noise: self.embedding_noise,
            split_channels: self.split_channels,
            seed,
        }
    }
}

impl RunConfig {
    /// Parses TOML text, applies overrides and validates.
    pub fn from_toml(text: &str, overrides: &[String]) -> Result<Self> {
        let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let cfg: RunConfig =
            RunConfig::deserialize(toml::Value::Table(table)).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file; relative paths are resolved against its directory.
    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(Error::io(path))?;
        let mut cfg = Self::from_toml(&text, overrides)?;
        if let Some(dir) = path.parent() {
            cfg.paths.resolve(dir);
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let c = &self.corpus;
        if c.width < 2 || !c.width.is_multiple_of(2) {
            return Err(Error::Config(format!("corpus.width must be even and >= 2, got {}", c.width)));
        }
        if (c.split.iter().sum::<f64>() - 1.0).abs() > 1e-9 || c.split.iter().any(|r| *r < 0.0) {
            return Err(Error::Config(format!("corpus.split {:?} must be non-negative and sum to 1", c.split)));
        }
        if c.min_per_type > c.cap_per_type {
            return Err(Error::Config(String::from("corpus.min_per_type exceeds corpus.cap_per_type")));
        }
        if self.gm.features == GmFeatures::Dense {
            self.gm.levels()?;
        }
        self.gm.missing_policy()?;
        self.gm.schedule().validate()?;
        self.cm.encoder_config(c.width)?;
        self.cm.miml_mode()?;
        self.cm.train_config().schedule.validate()?;
        if self.eval.k == 0 {
            return Err(Error::Config(String::from("eval.k must be positive")));
        }
        self.synth.spec(self.seed).validate()?;
        Ok(())
    }

    /// Canonical TOML rendering (paths as given, not resolved).
    pub fn canonical(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// The canonical rendering with paths reset to their defaults, so
    /// relocated inputs render (and hash) identically.
    pub fn settings(&self) -> String {
        RunConfig { paths: PathsConfig::default(), ..self.clone() }.canonical()
    }

    /// First 16 hex digits of the SHA-256 of `settings`.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.settings().as_bytes());
        hex::encode(&digest[..8])
    }
}

impl PathsConfig {
    fn resolve(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.corpus);
        fix(&mut self.catalog);
        fix(&mut self.inventory);
        fix(&mut self.out_dir);
        for p in [
            &mut self.entity_embeddings,
            &mut self.word_embeddings,
            &mut self.subword_embeddings,
            &mut self.type_embeddings,
            &mut self.descriptions,
        ]
        .into_iter()
        .flatten()
        {
            fix(p);
        }
    }
}

/// `section.key=value` (or `key=value` at top level); the value is parsed as
/// TOML and falls back to a plain string.
fn apply_override(table: &mut toml::Table, spec: &str) -> Result<()> {
    let (key, raw) = spec.split_once('=').ok_or_else(|| Error::Config(format!("override `{spec}` lacks `=`")))?;
    let value = format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let parts: Vec<&str> = key.trim().split('.').collect();
    let (last, sections) = parts.split_last().expect("split yields one part");
    let mut cur = table;
    for s in sections {
        cur = cur
            .entry(s.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("`{s}` is not a section")))?;
    }
    cur.insert(last.to_string(), value);
    Ok(())
}
