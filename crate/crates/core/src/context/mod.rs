//! The context model: FF and CNN encoders over SLOT contexts, a per-type
//! logistic head, and distant-supervision or multi-instance training.

mod encoder;
mod model;
mod train;

pub use encoder::{ContextEncoder, EncoderCache, EncoderConfig, EncoderKind};
pub use model::{attention_weights, miml_avg, miml_max, Attention, ContextModel, Head};
pub use train::{cm_predict, cm_scores, cm_train, cm_train_epoch, CmTrainConfig, EpochStats};

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use crate::corpus::{Bag, PAD, SLOT};
use crate::error::{Error, Result};

pub const UNK: &str = "UNK";
pub const PAD_ID: usize = 0;
pub const SLOT_ID: usize = 1;
pub const UNK_ID: usize = 2;

/// How per-context type probabilities are pooled into one entity score.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Aggregation {
    /// Every context is its own training unit.
    PerContext,
    Max,
    Avg,
    Att,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum MimlMode {
    Ds,
    Max,
    Avg,
    MaxAvg,
    Att,
}

impl MimlMode {
    pub const ALL: [MimlMode; 5] = [MimlMode::Ds, MimlMode::Max, MimlMode::Avg, MimlMode::MaxAvg, MimlMode::Att];

    pub fn train_aggregation(self) -> Aggregation {
        match self {
            MimlMode::Ds => Aggregation::PerContext,
            MimlMode::Max | MimlMode::MaxAvg => Aggregation::Max,
            MimlMode::Avg => Aggregation::Avg,
            MimlMode::Att => Aggregation::Att,
        }
    }

    pub fn predict_aggregation(self) -> Aggregation {
        match self {
            MimlMode::Ds | MimlMode::Avg | MimlMode::MaxAvg => Aggregation::Avg,
            MimlMode::Max => Aggregation::Max,
            MimlMode::Att => Aggregation::Att,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            MimlMode::Ds => "ds",
            MimlMode::Max => "max",
            MimlMode::Avg => "avg",
            MimlMode::MaxAvg => "max-avg",
            MimlMode::Att => "att",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        let norm = s.to_ascii_lowercase().replace('_', "-");
        MimlMode::ALL
            .into_iter()
            .find(|m| m.name() == norm)
            .ok_or_else(|| Error::Config(alloc::format!("unknown MIML mode `{s}`")))
    }
}

/// Context-token vocabulary with `PAD`, `SLOT` and `UNK` at ids 0, 1, 2.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WordVocab {
    tokens: Vec<String>,
    index: BTreeMap<String, usize>,
}

impl WordVocab {
    /// Every distinct token of the given contexts, sorted.
    pub fn build<'a, I: IntoIterator<Item = &'a [String]>>(contexts: I) -> Self {
        let mut seen: alloc::collections::BTreeSet<&str> = alloc::collections::BTreeSet::new();
        for c in contexts {
            seen.extend(c.iter().map(String::as_str));
        }
        let mut tokens = alloc::vec![String::from(PAD), String::from(SLOT), String::from(UNK)];
        tokens.extend(seen.into_iter().filter(|t| ![PAD, SLOT, UNK].contains(t)).map(String::from));
        Self::from_tokens(tokens).expect("reserved tokens are in place")
    }

    pub fn from_tokens(tokens: Vec<String>) -> Result<Self> {
        if tokens.len() < 3 || tokens[0] != PAD || tokens[1] != SLOT || tokens[2] != UNK {
            return Err(Error::Invalid(String::from("word vocabulary must start with PAD, SLOT, UNK")));
        }
        let mut index = BTreeMap::new();
        for (i, t) in tokens.iter().enumerate() {
            if index.insert(t.clone(), i).is_some() {
                return Err(Error::Invalid(alloc::format!("duplicate vocabulary token `{t}`")));
            }
        }
        Ok(WordVocab { tokens, index })
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn size(&self) -> usize {
        self.tokens.len()
    }

    pub fn id(&self, token: &str) -> usize {
        self.index.get(token).copied().unwrap_or(UNK_ID)
    }

    pub fn encode(&self, tokens: &[String]) -> Vec<usize> {
        tokens.iter().map(|t| self.id(t)).collect()
    }
}

/// A bag with token ids in place of strings.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedBag {
    pub entity: String,
    pub gold: Vec<usize>,
    pub contexts: Vec<Vec<usize>>,
}

/// Encodes every non-empty bag; entities with empty bags are returned
/// separately.
pub fn encode_bags(bags: &[Bag], vocab: &WordVocab) -> (Vec<EncodedBag>, Vec<String>) {
    let mut out = Vec::with_capacity(bags.len());
    let mut empty = Vec::new();
    for bag in bags {
        match bag.contexts.first() {
            None => empty.push(bag.entity.clone()),
            Some(first) => out.push(EncodedBag {
                entity: bag.entity.clone(),
                gold: first.labels.clone(),
                contexts: bag.contexts.iter().map(|c| vocab.encode(&c.tokens)).collect(),
            }),
        }
    }
    (out, empty)
}
