//! The in-process pipeline shared by the commands and the experiments:
//! resources, prepared bags, both models, score matrices and evaluation.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::Serialize;

use figment_core::context::{
    cm_predict, cm_train, encode_bags, ContextEncoder, ContextModel, EncodedBag, WordVocab,
};
use figment_core::corpus::{
    extract_contexts, group_bags, preprocess, sample_eval_contexts, sample_train_contexts, split_entities, Bag,
    Catalog, Context, EntityRecord, Split, TypeInventory,
};
use figment_core::eval::{partition_entities, partition_types, tune_thresholds, LabelMatrix, MetricsReport};
use figment_core::global::{gm_predict, gm_train, GlobalModel, GmExample, GmInput};
use figment_core::repr::{
    bow_features, known_unknown_partition, nsl_features, CharEncoder, CharVocab, DescriptionIndex, EmbeddingTable,
    FeatureDictionary, Level, Levels, Sources,
};
use figment_core::rng::stream;
use figment_core::synth::SyntheticWorld;
use figment_core::tensor::Parameters;
use figment_core::train::TrainLog;
use figment_core::{Matrix, TypeScoreMatrix};

use crate::checkpoint::Checkpoint;
use crate::config::{GmConfig, GmFeatures, PathsConfig, RunConfig};
use crate::error::{Error, Result};
use crate::formats;

/// Everything read from disk (or generated) before any processing.
#[derive(Debug, Clone)]
pub struct Resources {
    pub sentences: Vec<figment_core::corpus::Sentence>,
    pub catalog: Catalog,
    pub inventory: TypeInventory,
    pub entity_vectors: Option<EmbeddingTable>,
    pub word_vectors: Option<EmbeddingTable>,
    pub subword_vectors: Option<EmbeddingTable>,
    pub type_vectors: Option<EmbeddingTable>,
    pub descriptions: Option<DescriptionIndex>,
}

fn optional<T>(path: Option<&Path>, read: impl FnOnce(&Path) -> Result<T>) -> Result<Option<T>> {
    match path {
        Some(p) if p.exists() => read(p).map(Some),
        _ => Ok(None),
    }
}

fn table(rows: &[(String, Vec<f64>)]) -> Result<Option<EmbeddingTable>> {
    match rows.first() {
        Some((_, v)) => Ok(Some(EmbeddingTable::new(v.len(), rows.to_vec())?)),
        None => Ok(None),
    }
}

impl Resources {
    /// Reads the configured files. Optional files that do not exist are
    /// skipped; catalog rows without a frequency get their corpus mention count.
    pub fn load(paths: &PathsConfig) -> Result<Self> {
        let inventory = formats::read_inventory(&paths.inventory)?;
        let sentences = formats::read_corpus(&paths.corpus)?;
        let rows = formats::read_catalog(&paths.catalog, &inventory)?;
        let mut mentions: BTreeMap<&str, u64> = BTreeMap::new();
        for s in &sentences {
            for m in &s.mentions {
                *mentions.entry(m.entity.as_str()).or_default() += 1;
            }
        }
        let records = rows
            .into_iter()
            .map(|(mut r, has_freq)| {
                if !has_freq {
                    r.freq = mentions.get(r.id.as_str()).copied().unwrap_or(0);
                }
                r
            })
            .collect();
        let catalog = Catalog::new(records)?;
        let read_desc = |p: &Path| formats::read_descriptions(p).map(DescriptionIndex::new);
        Ok(Resources {
            sentences,
            catalog,
            inventory,
            entity_vectors: optional(paths.entity_embeddings.as_deref(), formats::read_embeddings)?,
            word_vectors: optional(paths.word_embeddings.as_deref(), formats::read_embeddings)?,
            subword_vectors: optional(paths.subword_embeddings.as_deref(), formats::read_embeddings)?,
            type_vectors: optional(paths.type_embeddings.as_deref(), formats::read_embeddings)?,
            descriptions: optional(paths.descriptions.as_deref(), read_desc)?,
        })
    }

    /// The same resources `load` would produce from the files `synth` writes.
    pub fn from_world(world: &SyntheticWorld) -> Result<Self> {
        let words = table(&world.word_vectors)?;
        Ok(Resources {
            sentences: world.sentences.clone(),
            catalog: Catalog::new(world.records.clone())?,
            inventory: TypeInventory::new(world.types.clone())?,
            entity_vectors: table(&world.entity_vectors)?,
            subword_vectors: words.clone(),
            word_vectors: words,
            type_vectors: table(&world.type_vectors)?,
            descriptions: Some(DescriptionIndex::new(world.descriptions.clone())),
        })
    }

    pub fn sources(&self, gm: &GmConfig) -> Result<Sources<'_>> {
        Ok(Sources {
            entities: self.entity_vectors.as_ref(),
            words: self.word_vectors.as_ref(),
            subwords: self.subword_vectors.as_ref(),
            descriptions: self.descriptions.as_ref(),
            missing: gm.missing_policy()?,
            des_top_k: gm.des_top_k,
        })
    }
}

/// Counts reported by `prepare`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct PrepareReport {
    pub sentences: usize,
    pub kept_sentences: usize,
    pub dropped_short: usize,
    pub skipped_mentions: usize,
    pub contexts: usize,
    pub unknown_mentions: usize,
    pub train_entities: usize,
    pub dev_entities: usize,
    pub test_entities: usize,
    pub train_contexts: usize,
    pub dev_contexts: usize,
    pub test_contexts: usize,
    pub dev_without_contexts: usize,
    pub test_without_contexts: usize,
    pub types_without_contexts: Vec<String>,
}

/// Split, sampled training contexts and evaluation bags.
#[derive(Debug, Clone, PartialEq)]
pub struct Prepared {
    pub catalog: Catalog,
    /// With train-entity counts filled in.
    pub inventory: TypeInventory,
    pub split: Split,
    pub train_contexts: Vec<Context>,
    pub train_bags: Vec<Bag>,
    pub dev_bags: Vec<Bag>,
    pub test_bags: Vec<Bag>,
    pub report: PrepareReport,
}

impl Prepared {
    /// Dev entities with at least one context; both models are scored on these.
    pub fn dev_entities(&self) -> Vec<String> {
        self.dev_bags.iter().map(|b| b.entity.clone()).collect()
    }

    pub fn test_entities(&self) -> Vec<String> {
        self.test_bags.iter().map(|b| b.entity.clone()).collect()
    }

    pub fn train_records(&self) -> Result<Vec<&EntityRecord>> {
        Ok(self.catalog.subset(&self.split.train)?)
    }

    /// Writes split lists, context dumps and the report under `dir`.
    pub fn write(&self, dir: &Path, hash: &str) -> Result<()> {
        let h = Some(hash);
        for (name, ids) in [("train", &self.split.train), ("dev", &self.split.dev), ("test", &self.split.test)] {
            formats::write_text(&dir.join("split").join(format!("{name}.txt")), &formats::format_ids(ids, h))?;
        }
        let flat = |bags: &[Bag]| bags.iter().flat_map(|b| b.contexts.iter().cloned()).collect::<Vec<_>>();
        for (name, contexts) in
            [("train", self.train_contexts.clone()), ("dev", flat(&self.dev_bags)), ("test", flat(&self.test_bags))]
        {
            let text = formats::format_contexts(&contexts, &self.inventory, h);
            formats::write_text(&dir.join("contexts").join(format!("{name}.tsv")), &text)?;
        }
        let mut json = serde_json::to_string_pretty(&serde_json::json!({
            "config_hash": hash,
            "counts": &self.report,
        }))
        .expect("report serializes");
        json.push('\n');
        formats::write_text(&dir.join("preprocess.json"), &json)
    }

    /// Reads what `write` produced. Every file must carry `hash` unless `force`.
    pub fn load(dir: &Path, res: &Resources, hash: &str, force: bool) -> Result<Self> {
        let check = |path: &Path, found: Option<String>| -> Result<()> {
            let found = found.unwrap_or_default();
            if !force && found != hash {
                return Err(Error::HashMismatch { path: path.to_path_buf(), expected: hash.into(), found });
            }
            Ok(())
        };
        let mut lists = Vec::new();
        for name in ["train", "dev", "test"] {
            let path = dir.join("split").join(format!("{name}.txt"));
            let (ids, h) = formats::read_ids(&path)?;
            check(&path, h)?;
            lists.push(ids);
        }
        let mut bags = Vec::new();
        let mut train_contexts = Vec::new();
        for name in ["train", "dev", "test"] {
            let path = dir.join("contexts").join(format!("{name}.tsv"));
            check(&path, formats::read_text(&path)?.hash)?;
            let contexts = formats::read_contexts(&path, &res.inventory)?;
            if name == "train" {
                train_contexts = contexts.clone();
            }
            bags.push(group_bags(contexts));
        }
        let test = lists.pop().expect("three lists");
        let dev = lists.pop().expect("three lists");
        let train = lists.pop().expect("three lists");
        let split = Split { train, dev, test };
        let mut inventory = res.inventory.clone();
        inventory.count_train_entities(res.catalog.subset(&split.train)?);
        let test_bags = bags.pop().expect("three bag lists");
        let dev_bags = bags.pop().expect("three bag lists");
        let train_bags = bags.pop().expect("three bag lists");
        Ok(Prepared {
            catalog: res.catalog.clone(),
            inventory,
            split,
            train_contexts,
            train_bags,
            dev_bags,
            test_bags,
            report: PrepareReport::default(),
        })
    }
}

/// Cleaning, split, context extraction and sampling.
pub fn prepare(cfg: &RunConfig, res: &Resources) -> Result<Prepared> {
    if res.sentences.is_empty() {
        return Err(Error::Config(String::from("the corpus has no sentences")));
    }
    let (sentences, pre) = preprocess(&res.sentences);
    let ids: Vec<String> = res.catalog.ids().map(String::from).collect();
    let split = split_entities(&ids, cfg.corpus.split, &mut stream(cfg.seed, "split"))?;
    let mut inventory = res.inventory.clone();
    inventory.count_train_entities(res.catalog.subset(&split.train)?);

    let train: BTreeSet<String> = split.train.iter().cloned().collect();
    let dev: BTreeSet<&str> = split.dev.iter().map(String::as_str).collect();
    let test: BTreeSet<&str> = split.test.iter().map(String::as_str).collect();
    let (contexts, extract) = extract_contexts(&sentences, &res.catalog, &inventory, &train, cfg.corpus.width)?;
    let total_contexts = contexts.len();

    let (mut train_pool, mut dev_pool, mut test_pool) = (Vec::new(), Vec::new(), Vec::new());
    for c in contexts {
        if train.contains(&c.entity) {
            train_pool.push(c);
        } else if dev.contains(c.entity.as_str()) {
            dev_pool.push(c);
        } else if test.contains(c.entity.as_str()) {
            test_pool.push(c);
        }
    }
    let (picked, sampling) = sample_train_contexts(
        &train_pool,
        &res.catalog,
        inventory.len(),
        &train,
        &cfg.corpus.train_sampling(),
        &mut stream(cfg.seed, "sample-train"),
    )?;
    let mut slots: Vec<Option<Context>> = train_pool.into_iter().map(Some).collect();
    let train_contexts: Vec<Context> =
        picked.into_iter().map(|i| slots[i].take().expect("distinct indices")).collect();
    let train_bags = group_bags(train_contexts.clone());

    let eval = cfg.corpus.eval_sampling();
    let dev_bags = sample_eval_contexts(group_bags(dev_pool), eval.dev, &mut stream(cfg.seed, "sample-dev")).0;
    let test_bags = sample_eval_contexts(group_bags(test_pool), eval.test, &mut stream(cfg.seed, "sample-test")).0;

    let report = PrepareReport {
        sentences: res.sentences.len(),
        kept_sentences: pre.kept,
        dropped_short: pre.dropped_short,
        skipped_mentions: pre.skipped_mentions,
        contexts: total_contexts,
        unknown_mentions: extract.unknown_mentions,
        train_entities: split.train.len(),
        dev_entities: split.dev.len(),
        test_entities: split.test.len(),
        train_contexts: train_contexts.len(),
        dev_contexts: dev_bags.iter().map(Bag::len).sum(),
        test_contexts: test_bags.iter().map(Bag::len).sum(),
        dev_without_contexts: split.dev.len() - dev_bags.len(),
        test_without_contexts: split.test.len() - test_bags.len(),
        types_without_contexts: sampling.empty_types.iter().map(|&t| inventory.id(t).to_string()).collect(),
    };
    Ok(Prepared { catalog: res.catalog.clone(), inventory, split, train_contexts, train_bags, dev_bags, test_bags, report })
}

/// Turns catalog records into global-model inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct InputBuilder {
    features: GmFeatures,
    levels: Option<Levels>,
    chars: Option<CharVocab>,
    name_len: usize,
    dict: Option<FeatureDictionary>,
}

fn name_features(kind: GmFeatures, name: &str) -> Vec<String> {
    match kind {
        GmFeatures::Bow => bow_features(name),
        _ => nsl_features(name),
    }
}

impl InputBuilder {
    /// Character and feature vocabularies come from the training names only.
    pub fn new(cfg: &GmConfig, train: &[&EntityRecord]) -> Result<Self> {
        let names: Vec<String> = train.iter().map(|r| r.name_string()).collect();
        match cfg.features {
            GmFeatures::Dense => {
                let levels = cfg.levels()?;
                let chars = levels.char_level().map(|_| CharVocab::build(names.iter().map(String::as_str)));
                Ok(InputBuilder { features: cfg.features, levels: Some(levels), chars, name_len: cfg.name_len, dict: None })
            }
            kind => {
                let dict = FeatureDictionary::build(names.iter().map(|n| name_features(kind, n)));
                Ok(InputBuilder { features: kind, levels: None, chars: None, name_len: cfg.name_len, dict: Some(dict) })
            }
        }
    }

    pub fn input(&self, record: &EntityRecord, sources: &Sources<'_>) -> Result<GmInput> {
        match (&self.levels, &self.dict) {
            (Some(levels), _) => {
                Ok(GmInput::from_record(record, levels, sources, self.chars.as_ref().map(|v| (v, self.name_len)))?)
            }
            (None, Some(dict)) => Ok(GmInput::Sparse(dict.encode(&name_features(self.features, &record.name_string())))),
            (None, None) => unreachable!("builder has levels or a dictionary"),
        }
    }

    fn meta(&self) -> BTreeMap<String, Vec<String>> {
        let mut m = BTreeMap::new();
        if let Some(v) = &self.chars {
            m.insert(String::from("chars"), v.chars().iter().map(|c| c.to_string()).collect());
        }
        if let Some(d) = &self.dict {
            m.insert(String::from("features"), d.names().to_vec());
        }
        m
    }

    fn from_meta(cfg: &GmConfig, ck: &Checkpoint) -> Result<Self> {
        match cfg.features {
            GmFeatures::Dense => {
                let levels = cfg.levels()?;
                let chars = match levels.char_level() {
                    Some(_) => {
                        let chars = ck
                            .meta("chars")?
                            .iter()
                            .map(|s| s.chars().next().ok_or_else(|| Error::Config(String::from("empty char entry"))))
                            .collect::<Result<Vec<char>>>()?;
                        Some(CharVocab::from_chars(chars))
                    }
                    None => None,
                };
                Ok(InputBuilder { features: cfg.features, levels: Some(levels), chars, name_len: cfg.name_len, dict: None })
            }
            kind => Ok(InputBuilder {
                features: kind,
                levels: None,
                chars: None,
                name_len: cfg.name_len,
                dict: Some(FeatureDictionary::from_names(ck.meta("features")?.to_vec())),
            }),
        }
    }

    fn model(&self, cfg: &GmConfig, frozen_dim: usize, num_types: usize, seed: u64) -> Result<GlobalModel> {
        let mut rng = stream(seed, "gm-init");
        if let Some(dict) = &self.dict {
            return Ok(GlobalModel::sparse(dict.len(), cfg.hidden, num_types, &mut rng)?);
        }
        let levels = self.levels.as_ref().expect("dense builder has levels");
        let chars = match (levels.char_level(), &self.chars) {
            (Some(Level::ClrCnn), Some(v)) => Some(CharEncoder::cnn(
                v.size(),
                cfg.char_dim,
                cfg.name_len,
                &cfg.char_widths,
                cfg.char_filters,
                &mut rng,
            )?),
            (Some(_), Some(v)) => Some(CharEncoder::ff(v.size(), cfg.char_dim, cfg.name_len, &mut rng)),
            _ => None,
        };
        Ok(GlobalModel::dense(frozen_dim, chars, cfg.hidden, num_types, &mut rng)?)
    }
}

fn frozen_dim(input: &GmInput) -> usize {
    match input {
        GmInput::Dense { before, after, .. } => before.len() + after.len(),
        GmInput::Sparse(_) => 0,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GmRun {
    pub model: GlobalModel,
    pub inputs: InputBuilder,
    pub log: TrainLog,
    frozen_dim: usize,
}

fn examples(
    ids: &[String],
    catalog: &Catalog,
    builder: &InputBuilder,
    sources: &Sources<'_>,
) -> Result<Vec<GmExample>> {
    catalog
        .subset(ids)?
        .into_iter()
        .map(|r| Ok(GmExample { input: builder.input(r, sources)?, gold: r.gold_types.clone() }))
        .collect()
}

/// Trains on every train entity; model selection uses dev entities with contexts.
pub fn train_gm(cfg: &RunConfig, res: &Resources, prep: &Prepared) -> Result<GmRun> {
    let sources = res.sources(&cfg.gm)?;
    let builder = InputBuilder::new(&cfg.gm, &prep.train_records()?)?;
    let train = examples(&prep.split.train, &prep.catalog, &builder, &sources)?;
    let dev = examples(&prep.dev_entities(), &prep.catalog, &builder, &sources)?;
    let dim = train.first().map_or(0, |e| frozen_dim(&e.input));
    let model = builder.model(&cfg.gm, dim, prep.inventory.len(), cfg.seed)?;
    let (model, log) = gm_train(model, &train, &dev, &cfg.gm.schedule(), &mut stream(cfg.seed, "gm-train"))?;
    Ok(GmRun { model, inputs: builder, log, frozen_dim: dim })
}

impl GmRun {
    pub fn scores(&self, cfg: &RunConfig, res: &Resources, entities: &[String]) -> Result<TypeScoreMatrix> {
        let sources = res.sources(&cfg.gm)?;
        let inputs: Vec<GmInput> = res
            .catalog
            .subset(entities)?
            .into_iter()
            .map(|r| self.inputs.input(r, &sources))
            .collect::<Result<_>>()?;
        let refs: Vec<&GmInput> = inputs.iter().collect();
        Ok(gm_predict(&self.model, entities.to_vec(), &refs, res.inventory.ids().to_vec())?)
    }

    pub fn checkpoint(&self, cfg: &RunConfig, types: &[String]) -> Checkpoint {
        let mut meta = self.inputs.meta();
        meta.insert(String::from("types"), types.to_vec());
        meta.insert(String::from("frozen_dim"), vec![self.frozen_dim.to_string()]);
        meta.insert(String::from("best_epoch"), vec![self.log.best_epoch.to_string()]);
        Checkpoint::capture("gm", &cfg.hash(), &cfg.settings(), meta, &self.model)
    }

    pub fn from_checkpoint(cfg: &RunConfig, ck: &Checkpoint) -> Result<Self> {
        expect_kind(ck, "gm")?;
        let inputs = InputBuilder::from_meta(&cfg.gm, ck)?;
        let frozen_dim = ck.meta_usize("frozen_dim")?;
        let mut model = inputs.model(&cfg.gm, frozen_dim, ck.meta("types")?.len(), cfg.seed)?;
        ck.restore(&mut model)?;
        Ok(GmRun { model, inputs, log: TrainLog::default(), frozen_dim })
    }
}

fn expect_kind(ck: &Checkpoint, kind: &str) -> Result<()> {
    if ck.kind != kind {
        return Err(Error::Checkpoint {
            path: Default::default(),
            message: format!("expected a `{kind}` checkpoint, found `{}`", ck.kind),
        });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct CmRun {
    pub model: ContextModel,
    pub vocab: WordVocab,
    pub log: TrainLog,
}

fn cm_model(cfg: &RunConfig, vocab_size: usize, num_types: usize) -> Result<ContextModel> {
    let mut rng = stream(cfg.seed, "cm-init");
    let encoder = ContextEncoder::new(cfg.cm.encoder_config(cfg.corpus.width)?, vocab_size, &mut rng)?;
    Ok(ContextModel::new(encoder, num_types, cfg.cm.miml_mode()?, cfg.cm.type_dim, &mut rng)?)
}

pub fn train_cm(cfg: &RunConfig, res: &Resources, prep: &Prepared) -> Result<CmRun> {
    let vocab = WordVocab::build(prep.train_contexts.iter().map(|c| c.tokens.as_slice()));
    let train = encode_bags(&prep.train_bags, &vocab).0;
    let dev = encode_bags(&prep.dev_bags, &vocab).0;
    let mut model = cm_model(cfg, vocab.size(), prep.inventory.len())?;
    if let Some(table) = res.word_vectors.as_ref().filter(|t| cfg.cm.init_words && t.dim() == cfg.cm.word_dim) {
        model.encoder.init_words(&vocab, table)?;
    }
    if let (Some(att), Some(table)) = (model.attention.as_ref(), res.type_vectors.as_ref()) {
        if cfg.cm.init_types && table.dim() == cfg.cm.type_dim {
            let mut m: Matrix = att.types.value.clone();
            for (t, id) in prep.inventory.ids().iter().enumerate() {
                if let Some(v) = table.get(id) {
                    m.row_mut(t).copy_from_slice(v);
                }
            }
            model.init_type_embeddings(&m)?;
        }
    }
    let (model, log) = cm_train(model, &train, &dev, &cfg.cm.train_config(), &mut stream(cfg.seed, "cm-train"))?;
    Ok(CmRun { model, vocab, log })
}

impl CmRun {
    pub fn encode(&self, bags: &[Bag]) -> Vec<EncodedBag> {
        encode_bags(bags, &self.vocab).0
    }

    pub fn scores(&self, bags: &[Bag], types: &[String]) -> Result<TypeScoreMatrix> {
        Ok(cm_predict(&self.model, &self.encode(bags), types.to_vec())?)
    }

    pub fn checkpoint(&self, cfg: &RunConfig, types: &[String]) -> Checkpoint {
        let meta = BTreeMap::from([
            (String::from("types"), types.to_vec()),
            (String::from("words"), self.vocab.tokens().to_vec()),
            (String::from("best_epoch"), vec![self.log.best_epoch.to_string()]),
        ]);
        Checkpoint::capture("cm", &cfg.hash(), &cfg.settings(), meta, &self.model)
    }

    pub fn from_checkpoint(cfg: &RunConfig, ck: &Checkpoint) -> Result<Self> {
        expect_kind(ck, "cm")?;
        let vocab = WordVocab::from_tokens(ck.meta("words")?.to_vec())?;
        let mut model = cm_model(cfg, vocab.size(), ck.meta("types")?.len())?;
        ck.restore(&mut model)?;
        model.zero_grad();
        Ok(CmRun { model, vocab, log: TrainLog::default() })
    }
}

/// Gold label matrix for the rows of `scores`.
pub fn gold_for(scores: &TypeScoreMatrix, catalog: &Catalog) -> Result<LabelMatrix> {
    let sets: Vec<&[usize]> = catalog
        .subset(scores.entities())?
        .into_iter()
        .map(|r| r.gold_types.as_slice())
        .collect();
    Ok(LabelMatrix::from_sets(scores.num_types(), &sets)?)
}

/// Thresholds tuned on `dev`, applied to `test`; entity slices all, head,
/// tail, known, unknown plus `extra`; type slices all, head, tail.
pub fn evaluate(
    cfg: &RunConfig,
    test: &TypeScoreMatrix,
    dev: &TypeScoreMatrix,
    prep: &Prepared,
    extra: &[(&str, Vec<String>)],
) -> Result<MetricsReport> {
    for (name, m) in [("test", test), ("dev", dev)] {
        if m.types() != prep.inventory.ids() {
            return Err(Error::Core(figment_core::Error::Alignment(format!(
                "{name} score columns differ from the type inventory"
            ))));
        }
    }
    let test_gold = gold_for(test, &prep.catalog)?;
    let tuned = tune_thresholds(dev.scores(), &gold_for(dev, &prep.catalog)?)?;
    let mut report = MetricsReport::new(cfg.eval.k);
    for &t in &tuned.no_positive_types {
        report
            .warnings
            .push(format!("type {} has no dev positives; threshold fixed at 1", prep.inventory.id(t)));
    }

    let rows_of = |ids: &BTreeSet<&str>| -> Vec<usize> {
        test.entities().iter().enumerate().filter(|(_, e)| ids.contains(e.as_str())).map(|(i, _)| i).collect()
    };
    let entities = partition_entities(&prep.catalog, cfg.eval.entity_thresholds());
    let test_records = prep.catalog.subset(test.entities())?;
    let (known, unknown) = known_unknown_partition(&test_records, &prep.train_records()?);
    let as_set = |v: &[String]| -> BTreeSet<String> { v.iter().cloned().collect() };
    let mut slices: Vec<(String, BTreeSet<String>)> = vec![
        (String::from("all"), as_set(test.entities())),
        (String::from("head"), as_set(&entities.head)),
        (String::from("tail"), as_set(&entities.tail)),
        (String::from("known"), as_set(&known)),
        (String::from("unknown"), as_set(&unknown)),
    ];
    slices.extend(extra.iter().map(|(n, ids)| (n.to_string(), as_set(ids))));
    for (name, ids) in &slices {
        let ids: BTreeSet<&str> = ids.iter().map(String::as_str).collect();
        report.add_entity_slice(name, &rows_of(&ids), test.scores(), &test_gold, &tuned.thresholds)?;
    }

    let types = partition_types(&prep.inventory, cfg.eval.type_thresholds());
    for (name, ts) in [("all", &types.all), ("head", &types.head), ("tail", &types.tail)] {
        report.add_type_slice(name, ts, test.scores(), &test_gold, &tuned.thresholds)?;
    }
    Ok(report)
}

/// Micro F1 of an entity slice, when the slice is non-empty.
pub fn slice_micro_f1(report: &MetricsReport, slice: &str) -> Option<f64> {
    report.entity_slice(slice).and_then(|s| s.metrics.get("micro_f1").copied())
}
