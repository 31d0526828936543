use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::EmbeddingTable;
use crate::corpus::EntityRecord;
use crate::error::{Error, Result};

/// What to do when an entity has no row in the entity table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MissingPolicy {
    #[default]
    Zero,
    Strict,
}

/// Entity-level representation: the entity's pretrained vector. With
/// `MissingPolicy::Zero` a missing entity yields a zero vector and `true`.
pub fn elr(entity: &str, table: &EmbeddingTable, policy: MissingPolicy) -> Result<(Vec<f64>, bool)> {
    match (table.get(entity), policy) {
        (Some(v), _) => Ok((v.to_vec(), false)),
        (None, MissingPolicy::Zero) => Ok((vec![0.0; table.dim()], true)),
        (None, MissingPolicy::Strict) => Err(Error::MissingEmbedding(String::from(entity))),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WordAverage {
    pub vector: Vec<f64>,
    /// Name words found in the table; zero means the vector is a placeholder.
    pub known: usize,
}

/// Mean of the in-vocabulary word vectors of a name.
pub fn wlr<S: AsRef<str>>(name: &[S], table: &EmbeddingTable) -> WordAverage {
    let mut acc = vec![0.0; table.dim()];
    let mut known = 0;
    for w in name {
        if let Some(v) = table.get(w.as_ref()) {
            crate::tensor::axpy(1.0, v, &mut acc);
            known += 1;
        }
    }
    if known > 0 {
        let inv = 1.0 / known as f64;
        acc.iter_mut().for_each(|x| *x *= inv);
    }
    WordAverage { vector: acc, known }
}

/// Document frequencies over all catalog descriptions.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DescriptionIndex {
    docs: BTreeMap<String, Vec<String>>,
    df: BTreeMap<String, usize>,
}

impl DescriptionIndex {
    pub fn new(docs: BTreeMap<String, Vec<String>>) -> Self {
        let mut df: BTreeMap<String, usize> = BTreeMap::new();
        for words in docs.values() {
            for w in words.iter().collect::<BTreeSet<_>>() {
                *df.entry(w.clone()).or_default() += 1;
            }
        }
        DescriptionIndex { docs, df }
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn description(&self, entity: &str) -> Option<&[String]> {
        self.docs.get(entity).map(|d| d.as_slice())
    }

    pub fn df(&self, word: &str) -> usize {
        self.df.get(word).copied().unwrap_or(0)
    }

    /// `ln(N / (df + 1))`.
    pub fn idf(&self, word: &str) -> f64 {
        libm::log(self.docs.len() as f64 / (self.df(word) + 1) as f64)
    }

    /// In-vocabulary words of `description` ranked by tf-idf, best first;
    /// ties broken alphabetically.
    pub fn ranked_words<'a, S: AsRef<str>>(
        &self,
        description: &'a [S],
        table: &EmbeddingTable,
    ) -> Vec<(&'a str, f64)> {
        let mut tf: BTreeMap<&str, usize> = BTreeMap::new();
        for w in description {
            let w = w.as_ref();
            if table.contains(w) {
                *tf.entry(w).or_default() += 1;
            }
        }
        let mut scored: Vec<(&str, f64)> =
            tf.into_iter().map(|(w, c)| (w, c as f64 * self.idf(w))).collect();
        scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(b.0)));
        scored
    }
}

pub const AVG_DES_TOP_K: usize = 20;

/// Mean embedding of the top-`k` tf-idf words of a description; `None`
/// when no description word has a vector.
pub fn avg_des<S: AsRef<str>>(
    description: &[S],
    table: &EmbeddingTable,
    index: &DescriptionIndex,
    k: usize,
) -> Option<Vec<f64>> {
    let top: Vec<&str> = index.ranked_words(description, table).into_iter().take(k).map(|(w, _)| w).collect();
    if top.is_empty() {
        return None;
    }
    Some(wlr(&top, table).vector)
}

/// Test entities sharing at least one name word with some train entity are
/// `known`; the rest are `unknown`.
pub fn known_unknown_partition(
    test: &[&EntityRecord],
    train: &[&EntityRecord],
) -> (Vec<String>, Vec<String>) {
    let vocab: BTreeSet<&str> = train.iter().flat_map(|r| r.name.iter().map(|w| w.as_str())).collect();
    let (known, unknown): (Vec<&EntityRecord>, Vec<&EntityRecord>) =
        test.iter().partition(|r| r.name.iter().any(|w| vocab.contains(w.as_str())));
    (
        known.into_iter().map(|r| r.id.clone()).collect(),
        unknown.into_iter().map(|r| r.id.clone()).collect(),
    )
}
