//! Text file formats. Every artifact written by the pipeline starts with a
//! `# config_hash=<hex>` line; readers accept files with or without it.
//! Embedding files are plain word2vec text and carry no header.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use figment_core::corpus::{Context, EntityRecord, Mention, Sentence, TypeInventory};
use figment_core::eval::{MetricsReport, SliceReport};
use figment_core::repr::EmbeddingTable;
use figment_core::train::TrainLog;
use figment_core::{Matrix, TypeScoreMatrix};

use crate::error::{Error, Result};

pub const HASH_PREFIX: &str = "# config_hash=";

/// Body lines of a text file, numbered from 1, plus the hash header if present.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TextFile {
    pub hash: Option<String>,
    pub lines: Vec<(usize, String)>,
}

pub fn read_text(path: &Path) -> Result<TextFile> {
    let text = std::fs::read_to_string(path).map_err(Error::io(path))?;
    Ok(split_text(&text))
}

fn split_text(text: &str) -> TextFile {
    let mut hash = None;
    let mut lines = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 {
            if let Some(h) = line.strip_prefix(HASH_PREFIX) {
                hash = Some(h.to_string());
                continue;
            }
        }
        lines.push((i + 1, line.to_string()));
    }
    TextFile { hash, lines }
}

pub fn ensure_parent(path: &Path) -> Result<()> {
    match path.parent().filter(|d| !d.as_os_str().is_empty()) {
        Some(dir) => std::fs::create_dir_all(dir).map_err(Error::io(dir)),
        None => Ok(()),
    }
}

/// Writes `contents`, creating parent directories.
pub fn write_text(path: &Path, contents: &str) -> Result<()> {
    ensure_parent(path)?;
    std::fs::write(path, contents).map_err(Error::io(path))
}

fn header(hash: Option<&str>) -> String {
    hash.map(|h| format!("{HASH_PREFIX}{h}\n")).unwrap_or_default()
}

// corpus: `tok tok ...<TAB>entity,start,end;entity,start,end`

pub fn parse_sentence(line: &str) -> std::result::Result<Sentence, String> {
    let (toks, spans) = line.split_once('\t').unwrap_or((line, ""));
    let tokens: Vec<String> = toks.split_whitespace().map(String::from).collect();
    let mut mentions = Vec::new();
    for spec in spans.split(';').filter(|s| !s.is_empty()) {
        let mut parts = spec.rsplitn(3, ',');
        let (end, start, entity) = match (parts.next(), parts.next(), parts.next()) {
            (Some(e), Some(s), Some(id)) if !id.is_empty() => (e, s, id),
            _ => return Err(format!("mention `{spec}` is not entity,start,end")),
        };
        let start = start.parse().map_err(|_| format!("bad mention start `{start}`"))?;
        let end = end.parse().map_err(|_| format!("bad mention end `{end}`"))?;
        mentions.push(Mention { entity: entity.to_string(), start, end });
    }
    let sentence = Sentence { tokens, mentions };
    sentence.validate().map_err(|e| e.to_string())?;
    Ok(sentence)
}

pub fn format_sentence(s: &Sentence) -> String {
    let spans: Vec<String> = s.mentions.iter().map(|m| format!("{},{},{}", m.entity, m.start, m.end)).collect();
    format!("{}\t{}", s.tokens.join(" "), spans.join(";"))
}

pub fn read_corpus(path: &Path) -> Result<Vec<Sentence>> {
    read_text(path)?
        .lines
        .iter()
        .map(|(n, line)| parse_sentence(line).map_err(|m| Error::parse(path, *n, m)))
        .collect()
}

pub fn format_corpus(sentences: &[Sentence], hash: Option<&str>) -> String {
    let mut out = header(hash);
    for s in sentences {
        out.push_str(&format_sentence(s));
        out.push('\n');
    }
    out
}

// type inventory: one id per line

pub fn read_inventory(path: &Path) -> Result<TypeInventory> {
    let file = read_text(path)?;
    let mut ids = Vec::with_capacity(file.lines.len());
    for (n, line) in &file.lines {
        let id = line.trim();
        if id.is_empty() || id.contains(char::is_whitespace) {
            return Err(Error::parse(path, *n, format!("bad type id `{line}`")));
        }
        ids.push(id.to_string());
    }
    TypeInventory::new(ids).map_err(|e| Error::parse(path, 0, e.to_string()))
}

pub fn format_inventory(types: &[String], hash: Option<&str>) -> String {
    let mut out = header(hash);
    for t in types {
        out.push_str(t);
        out.push('\n');
    }
    out
}

// catalog: `id<TAB>name<TAB>notable<TAB>type,type[<TAB>freq]`

/// Catalog rows; the flag says whether the row gave a frequency.
pub fn read_catalog(path: &Path, inventory: &TypeInventory) -> Result<Vec<(EntityRecord, bool)>> {
    let file = read_text(path)?;
    let mut out = Vec::with_capacity(file.lines.len());
    for (n, line) in &file.lines {
        let err = |m: String| Error::parse(path, *n, m);
        let cols: Vec<&str> = line.split('\t').collect();
        if !(4..=5).contains(&cols.len()) {
            return Err(err(format!("expected 4 or 5 tab-separated columns, found {}", cols.len())));
        }
        let name: Vec<String> = cols[1].split_whitespace().map(String::from).collect();
        let notable = inventory.index_of(cols[2]).map_err(|e| err(e.to_string()))?;
        let gold = cols[3]
            .split(',')
            .map(|t| inventory.index_of(t.trim()))
            .collect::<figment_core::Result<Vec<_>>>()
            .map_err(|e| err(e.to_string()))?;
        let freq = match cols.get(4) {
            Some(f) => Some(f.trim().parse::<u64>().map_err(|_| err(format!("bad frequency `{f}`")))?),
            None => None,
        };
        let rec = EntityRecord::new(cols[0].to_string(), name, notable, gold, freq.unwrap_or(0))
            .map_err(|e| err(e.to_string()))?;
        out.push((rec, freq.is_some()));
    }
    Ok(out)
}

pub fn format_catalog(records: &[EntityRecord], inventory: &TypeInventory, hash: Option<&str>) -> String {
    let mut out = header(hash);
    for r in records {
        let gold: Vec<&str> = r.gold_types.iter().map(|&t| inventory.id(t)).collect();
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}",
            r.id,
            r.name_string(),
            inventory.id(r.notable_type),
            gold.join(","),
            r.freq
        );
    }
    out
}

// embeddings: word2vec text

pub fn read_embeddings(path: &Path) -> Result<EmbeddingTable> {
    let text = std::fs::read_to_string(path).map_err(Error::io(path))?;
    let mut lines = text.lines().enumerate();
    let (count, dim) = match lines.next() {
        Some((_, head)) => {
            let nums: Vec<usize> = head.split_whitespace().filter_map(|x| x.parse().ok()).collect();
            match nums.as_slice() {
                [n, d] if *d > 0 => (*n, *d),
                _ => return Err(Error::parse(path, 1, "header must be `vocab_size dim`")),
            }
        }
        None => return Err(Error::parse(path, 1, "empty embedding file")),
    };
    let mut rows = Vec::with_capacity(count);
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split_whitespace();
        let token = fields.next().expect("non-empty line").to_string();
        let v = fields
            .map(|x| x.parse::<f64>().map_err(|_| Error::parse(path, i + 1, format!("bad number `{x}`"))))
            .collect::<Result<Vec<_>>>()?;
        if v.len() != dim {
            return Err(Error::parse(path, i + 1, format!("expected {dim} values, found {}", v.len())));
        }
        rows.push((token, v));
    }
    if rows.len() != count {
        return Err(Error::parse(path, 1, format!("header announces {count} rows, file has {}", rows.len())));
    }
    EmbeddingTable::new(dim, rows).map_err(|e| Error::parse(path, 0, e.to_string()))
}

pub fn format_embeddings(dim: usize, rows: &[(String, Vec<f64>)]) -> String {
    let mut out = format!("{} {}\n", rows.len(), dim);
    for (token, v) in rows {
        out.push_str(token);
        for x in v {
            let _ = write!(out, " {x}");
        }
        out.push('\n');
    }
    out
}

// descriptions: `id<TAB>text`

pub fn read_descriptions(path: &Path) -> Result<BTreeMap<String, Vec<String>>> {
    let mut docs = BTreeMap::new();
    for (n, line) in read_text(path)?.lines {
        let (id, text) = line.split_once('\t').ok_or_else(|| Error::parse(path, n, "missing tab"))?;
        let words = text.split_whitespace().map(String::from).collect();
        if docs.insert(id.to_string(), words).is_some() {
            return Err(Error::parse(path, n, format!("duplicate description for `{id}`")));
        }
    }
    Ok(docs)
}

pub fn format_descriptions(docs: &BTreeMap<String, Vec<String>>, hash: Option<&str>) -> String {
    let mut out = header(hash);
    for (id, words) in docs {
        let _ = writeln!(out, "{id}\t{}", words.join(" "));
    }
    out
}

// context dump: `entity<TAB>type,type<TAB>tok tok SLOT tok`

pub fn read_contexts(path: &Path, inventory: &TypeInventory) -> Result<Vec<Context>> {
    let file = read_text(path)?;
    let mut out = Vec::with_capacity(file.lines.len());
    for (n, line) in &file.lines {
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 3 {
            return Err(Error::parse(path, *n, format!("expected 3 columns, found {}", cols.len())));
        }
        let labels = cols[1]
            .split(',')
            .map(|t| inventory.index_of(t))
            .collect::<figment_core::Result<Vec<_>>>()
            .map_err(|e| Error::parse(path, *n, e.to_string()))?;
        let tokens = cols[2].split(' ').map(String::from).collect();
        out.push(Context { entity: cols[0].to_string(), labels, tokens });
    }
    Ok(out)
}

pub fn format_contexts(contexts: &[Context], inventory: &TypeInventory, hash: Option<&str>) -> String {
    let mut out = header(hash);
    for c in contexts {
        let labels: Vec<&str> = c.labels.iter().map(|&t| inventory.id(t)).collect();
        let _ = writeln!(out, "{}\t{}\t{}", c.entity, labels.join(","), c.tokens.join(" "));
    }
    out
}

// entity id lists (split files)

pub fn read_ids(path: &Path) -> Result<(Vec<String>, Option<String>)> {
    let file = read_text(path)?;
    let ids = file.lines.into_iter().map(|(_, l)| l.trim().to_string()).filter(|l| !l.is_empty()).collect();
    Ok((ids, file.hash))
}

pub fn format_ids(ids: &[String], hash: Option<&str>) -> String {
    let mut out = header(hash);
    for id in ids {
        out.push_str(id);
        out.push('\n');
    }
    out
}

// type score matrix: `entity<TAB>type<TAB>score`

/// Dense rendering: one line per (entity, type) in matrix order.
pub fn format_scores(scores: &TypeScoreMatrix, hash: Option<&str>) -> String {
    let mut out = header(hash);
    for (e, entity) in scores.entities().iter().enumerate() {
        for (t, ty) in scores.types().iter().enumerate() {
            let _ = writeln!(out, "{entity}\t{ty}\t{}", scores.get(e, t));
        }
    }
    out
}

/// Entities keep first-appearance order. Types come from `types` when
/// given, else first-appearance order. Absent cells are 0.
pub fn parse_scores(path: &Path, file: &TextFile, types: Option<&[String]>) -> Result<TypeScoreMatrix> {
    let mut type_order: Vec<String> = types.map(<[String]>::to_vec).unwrap_or_default();
    let mut type_index: BTreeMap<String, usize> =
        type_order.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
    let mut entity_order: Vec<String> = Vec::new();
    let mut entity_index: BTreeMap<String, usize> = BTreeMap::new();
    let mut cells: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for (n, line) in &file.lines {
        let err = |m: String| Error::parse(path, *n, m);
        let cols: Vec<&str> = line.split('\t').collect();
        let [entity, ty, score] = cols.as_slice() else {
            return Err(err(format!("expected 3 columns, found {}", cols.len())));
        };
        let score: f64 = score.parse().map_err(|_| err(format!("bad score `{score}`")))?;
        if !(0.0..=1.0).contains(&score) {
            return Err(err(format!("score {score} outside [0, 1]")));
        }
        let t = match type_index.get(*ty) {
            Some(&t) => t,
            None if types.is_none() => {
                type_order.push(ty.to_string());
                type_index.insert(ty.to_string(), type_order.len() - 1);
                type_order.len() - 1
            }
            None => return Err(err(format!("unknown type `{ty}`"))),
        };
        let e = *entity_index.entry(entity.to_string()).or_insert_with(|| {
            entity_order.push(entity.to_string());
            entity_order.len() - 1
        });
        if cells.insert((e, t), score).is_some() {
            return Err(err(format!("duplicate cell ({entity}, {ty})")));
        }
    }
    let mut m = Matrix::zeros(entity_order.len(), type_order.len());
    for ((e, t), v) in cells {
        m.set(e, t, v);
    }
    TypeScoreMatrix::new(entity_order, type_order, m).map_err(|e| Error::parse(path, 0, e.to_string()))
}

pub fn read_scores(path: &Path, types: Option<&[String]>) -> Result<(TypeScoreMatrix, Option<String>)> {
    let file = read_text(path)?;
    let scores = parse_scores(path, &file, types)?;
    Ok((scores, file.hash))
}

// metrics report: JSON

#[derive(Serialize)]
struct SliceJson<'a> {
    size: usize,
    metrics: &'a BTreeMap<&'static str, f64>,
}

#[derive(Serialize)]
struct ReportJson<'a> {
    config_hash: Option<&'a str>,
    k: usize,
    entity_slices: BTreeMap<&'a str, SliceJson<'a>>,
    type_slices: BTreeMap<&'a str, SliceJson<'a>>,
    warnings: &'a [String],
}

fn slices(v: &[SliceReport]) -> BTreeMap<&str, SliceJson<'_>> {
    v.iter().map(|s| (s.name.as_str(), SliceJson { size: s.size, metrics: &s.metrics })).collect()
}

pub fn format_metrics(report: &MetricsReport, hash: Option<&str>) -> String {
    let json = ReportJson {
        config_hash: hash,
        k: report.k,
        entity_slices: slices(&report.entity_slices),
        type_slices: slices(&report.type_slices),
        warnings: &report.warnings,
    };
    let mut out = serde_json::to_string_pretty(&json).expect("report serializes");
    out.push('\n');
    out
}

// training log: `epoch<TAB>loss<TAB>dev_micro_f1`

pub fn format_log(log: &TrainLog, hash: Option<&str>) -> String {
    let mut out = header(hash);
    out.push_str("epoch\tloss\tdev_micro_f1\n");
    for r in &log.epochs {
        let _ = writeln!(out, "{}\t{}\t{}", r.epoch, r.loss, r.dev_micro_f1);
    }
    let _ = writeln!(out, "# best_epoch={} best_dev_micro_f1={}", log.best_epoch, log.best_dev_micro_f1);
    out
}
