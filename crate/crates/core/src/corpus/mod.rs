//! Entity catalog, type inventory, sentences with entity mentions, SLOT
//! contexts and bags, plus the transforms that turn a linked corpus into
//! training data.

mod contexts;
mod preprocess;
mod sampling;
mod split;

pub use contexts::{distant_labels, extract_contexts, group_bags, ExtractReport};
pub use preprocess::{preprocess, preprocess_sentence, PreprocessReport, MIN_SENTENCE_CHARS};
pub use sampling::{
    sample_eval_contexts, sample_train_contexts, weighted_sample, EvalSampling, SamplingReport,
    TrainSampling, TypeSampling,
};
pub use split::{split_entities, Split};

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};

pub const PAD: &str = "PAD";
pub const SLOT: &str = "SLOT";
pub const TYPE_PREFIX: &str = "TYPE_";

/// Ordered type ids; position is the dense index used everywhere else.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeInventory {
    ids: Vec<String>,
    index: BTreeMap<String, usize>,
    train_freq: Vec<u64>,
}

impl TypeInventory {
    pub fn new(ids: Vec<String>) -> Result<Self> {
        let mut index = BTreeMap::new();
        for (i, id) in ids.iter().enumerate() {
            if index.insert(id.clone(), i).is_some() {
                return Err(Error::Invalid(format!("duplicate type id `{id}`")));
            }
        }
        let n = ids.len();
        Ok(TypeInventory { ids, index, train_freq: alloc::vec![0; n] })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn id(&self, index: usize) -> &str {
        &self.ids[index]
    }

    pub fn index_of(&self, id: &str) -> Result<usize> {
        self.index.get(id).copied().ok_or_else(|| Error::UnknownType(String::from(id)))
    }

    /// Number of train entities carrying each type.
    pub fn train_freq(&self) -> &[u64] {
        &self.train_freq
    }

    pub fn count_train_entities<'a, I>(&mut self, train: I)
    where
        I: IntoIterator<Item = &'a EntityRecord>,
    {
        self.train_freq.iter_mut().for_each(|c| *c = 0);
        for e in train {
            for &t in &e.gold_types {
                self.train_freq[t] += 1;
            }
        }
    }

    /// Token substituted for in-window mentions of train entities.
    pub fn type_token(&self, index: usize) -> String {
        format!("{TYPE_PREFIX}{}", self.ids[index])
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntityRecord {
    pub id: String,
    /// Canonical name, whitespace tokenized.
    pub name: Vec<String>,
    pub notable_type: usize,
    /// Sorted, deduplicated type indices.
    pub gold_types: Vec<usize>,
    pub freq: u64,
}

impl EntityRecord {
    pub fn new(
        id: String,
        name: Vec<String>,
        notable_type: usize,
        gold: impl IntoIterator<Item = usize>,
        freq: u64,
    ) -> Result<Self> {
        let gold_types: Vec<usize> = gold.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
        let rec = EntityRecord { id, name, notable_type, gold_types, freq };
        rec.validate()?;
        Ok(rec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.gold_types.is_empty() {
            return Err(Error::Invalid(format!("entity `{}` has no gold types", self.id)));
        }
        if self.gold_types.binary_search(&self.notable_type).is_err() {
            return Err(Error::Invalid(format!(
                "notable type of `{}` is not among its gold types",
                self.id
            )));
        }
        Ok(())
    }

    pub fn name_string(&self) -> String {
        self.name.join(" ")
    }

    pub fn has_type(&self, t: usize) -> bool {
        self.gold_types.binary_search(&t).is_ok()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Catalog {
    records: Vec<EntityRecord>,
    index: BTreeMap<String, usize>,
}

impl Catalog {
    pub fn new(records: Vec<EntityRecord>) -> Result<Self> {
        let mut index = BTreeMap::new();
        for (i, r) in records.iter().enumerate() {
            r.validate()?;
            if index.insert(r.id.clone(), i).is_some() {
                return Err(Error::Invalid(format!("duplicate entity id `{}`", r.id)));
            }
        }
        Ok(Catalog { records, index })
    }

    pub fn get(&self, id: &str) -> Option<&EntityRecord> {
        self.index.get(id).map(|&i| &self.records[i])
    }

    pub fn require(&self, id: &str) -> Result<&EntityRecord> {
        self.get(id).ok_or_else(|| Error::UnknownEntity(String::from(id)))
    }

    pub fn records(&self) -> &[EntityRecord] {
        &self.records
    }

    pub fn records_mut(&mut self) -> &mut [EntityRecord] {
        &mut self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.records.iter().map(|r| r.id.as_str())
    }

    /// Records for `ids`, in the given order.
    pub fn subset<'a>(&'a self, ids: &'a [String]) -> Result<Vec<&'a EntityRecord>> {
        ids.iter().map(|id| self.require(id)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mention {
    pub entity: String,
    /// Token span `[start, end)`.
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Sentence {
    pub tokens: Vec<String>,
    pub mentions: Vec<Mention>,
}

impl Sentence {
    /// Spans must be non-empty, in bounds and pairwise disjoint.
    pub fn validate(&self) -> Result<()> {
        let mut spans: Vec<(usize, usize)> = self.mentions.iter().map(|m| (m.start, m.end)).collect();
        spans.sort_unstable();
        let mut last_end = 0;
        for (i, &(s, e)) in spans.iter().enumerate() {
            if s >= e || e > self.tokens.len() {
                return Err(Error::Invalid(format!("mention span [{s},{e}) out of bounds")));
            }
            if i > 0 && s < last_end {
                return Err(Error::Invalid(format!("mention span [{s},{e}) overlaps another")));
            }
            last_end = e;
        }
        Ok(())
    }
}

/// Fixed-width token window around one mention; the mention itself is the
/// single `SLOT` token at position `width / 2`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Context {
    pub entity: String,
    pub labels: Vec<usize>,
    pub tokens: Vec<String>,
}

impl Context {
    pub fn width(&self) -> usize {
        self.tokens.len()
    }

    pub fn slot_position(&self) -> usize {
        self.tokens.len() / 2
    }

    /// Tokens preceding the mention.
    pub fn left(&self) -> &[String] {
        &self.tokens[..self.slot_position()]
    }

    /// `SLOT` followed by the tokens after the mention.
    pub fn right(&self) -> &[String] {
        &self.tokens[self.slot_position()..]
    }
}

/// All (sampled) contexts of one entity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bag {
    pub entity: String,
    pub contexts: Vec<Context>,
}

impl Bag {
    pub fn len(&self) -> usize {
        self.contexts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.contexts.is_empty()
    }
}
