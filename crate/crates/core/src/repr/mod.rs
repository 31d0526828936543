//! Entity representations for the global model: entity-level (pretrained
//! entity vectors), word-level (mean of name word vectors), character-level
//! (trainable encoders over the name), description averages, and the sparse
//! NSL/BOW baselines.

mod chars;
mod embedding;
mod sparse;
mod words;

pub use chars::{encode_name, CharCache, CharCnn, CharEncoder, CharFf, CharVocab, CPAD, END, START, UNK};
pub use embedding::EmbeddingTable;
pub use sparse::{
    bow_features, char_ngrams, nsl_features, token_shape, FeatureDictionary, SparseFeatureVector,
    NGRAM_MAX,
};
pub use words::{
    avg_des, elr, known_unknown_partition, wlr, DescriptionIndex, MissingPolicy, WordAverage,
    AVG_DES_TOP_K,
};

use alloc::vec::Vec;

use crate::corpus::EntityRecord;
use crate::error::{Error, Result};

/// One constituent of a multi-level representation. The derive order is
/// the concatenation order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Level {
    Elr,
    Wwlr,
    Swlr,
    ClrFf,
    ClrCnn,
    AvgDes,
}

impl Level {
    pub const ALL: [Level; 6] = [Level::Elr, Level::Wwlr, Level::Swlr, Level::ClrFf, Level::ClrCnn, Level::AvgDes];

    pub fn name(self) -> &'static str {
        match self {
            Level::Elr => "elr",
            Level::Wwlr => "wwlr",
            Level::Swlr => "swlr",
            Level::ClrFf => "clr-ff",
            Level::ClrCnn => "clr-cnn",
            Level::AvgDes => "avg-des",
        }
    }

    pub fn parse(s: &str) -> Result<Level> {
        Level::ALL
            .into_iter()
            .find(|l| l.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(alloc::format!("unknown representation level `{s}`")))
    }

    pub fn is_char(self) -> bool {
        matches!(self, Level::ClrFf | Level::ClrCnn)
    }
}

/// A validated, ordered, non-empty level selection with at most one
/// character-level encoder.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Levels(Vec<Level>);

impl Levels {
    pub fn new<I: IntoIterator<Item = Level>>(levels: I) -> Result<Self> {
        let mut v: Vec<Level> = levels.into_iter().collect();
        v.sort();
        v.dedup();
        if v.is_empty() {
            return Err(Error::Config(alloc::string::String::from("no representation level enabled")));
        }
        if v.iter().filter(|l| l.is_char()).count() > 1 {
            return Err(Error::Config(alloc::string::String::from("at most one character-level encoder")));
        }
        Ok(Levels(v))
    }

    pub fn as_slice(&self) -> &[Level] {
        &self.0
    }

    pub fn contains(&self, level: Level) -> bool {
        self.0.contains(&level)
    }

    pub fn char_level(&self) -> Option<Level> {
        self.0.iter().copied().find(|l| l.is_char())
    }
}

/// Frozen inputs the levels draw from.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sources<'a> {
    pub entities: Option<&'a EmbeddingTable>,
    pub words: Option<&'a EmbeddingTable>,
    pub subwords: Option<&'a EmbeddingTable>,
    pub descriptions: Option<&'a DescriptionIndex>,
    pub missing: MissingPolicy,
    pub des_top_k: usize,
}

impl Sources<'_> {
    fn table(&self, level: Level) -> Result<&EmbeddingTable> {
        let t = match level {
            Level::Elr => self.entities,
            Level::Wwlr => self.words,
            Level::Swlr => self.subwords,
            Level::AvgDes => self.words.or(self.subwords),
            Level::ClrFf | Level::ClrCnn => None,
        };
        t.ok_or_else(|| Error::Config(alloc::format!("level {} needs an embedding table", level.name())))
    }

    /// Width of a frozen level.
    pub fn dim(&self, level: Level) -> Result<usize> {
        Ok(self.table(level)?.dim())
    }
}

/// Frozen levels split around the (trainable) character level.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FrozenParts {
    pub before: Vec<f64>,
    pub after: Vec<f64>,
    pub missing_entity: bool,
    pub name_oov: bool,
}

pub fn frozen_parts(record: &EntityRecord, levels: &Levels, src: &Sources<'_>) -> Result<FrozenParts> {
    let mut parts = FrozenParts::default();
    for &level in levels.as_slice() {
        match level {
            Level::Elr => {
                let (v, missing) = elr(&record.id, src.table(level)?, src.missing)?;
                parts.missing_entity = missing;
                parts.before.extend(v);
            }
            Level::Wwlr | Level::Swlr => {
                let w = wlr(&record.name, src.table(level)?);
                parts.name_oov |= w.known == 0;
                parts.before.extend(w.vector);
            }
            Level::AvgDes => {
                let index = src
                    .descriptions
                    .ok_or_else(|| Error::Config(alloc::string::String::from("avg-des needs descriptions")))?;
                let desc = index.description(&record.id).unwrap_or(&[]);
                let k = if src.des_top_k == 0 { AVG_DES_TOP_K } else { src.des_top_k };
                let v = avg_des(desc, src.table(level)?, index, k)
                    .ok_or(Error::Empty("entity description"))?;
                parts.after.extend(v);
            }
            Level::ClrFf | Level::ClrCnn => {}
        }
    }
    Ok(parts)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntityRepresentation {
    pub vector: Vec<f64>,
    pub levels: Vec<Level>,
}

/// Full concatenated representation of one entity.
pub fn multi_level(
    record: &EntityRecord,
    levels: &Levels,
    src: &Sources<'_>,
    chars: Option<(&CharEncoder, &CharVocab)>,
) -> Result<EntityRepresentation> {
    let parts = frozen_parts(record, levels, src)?;
    let mut vector = parts.before;
    if levels.char_level().is_some() {
        let (enc, vocab) =
            chars.ok_or_else(|| Error::Config(alloc::string::String::from("character level needs an encoder")))?;
        let ids = encode_name(vocab, &record.name, enc.name_len())?;
        vector.extend(enc.forward(&ids)?.0);
    }
    vector.extend(parts.after);
    Ok(EntityRepresentation { vector, levels: levels.as_slice().to_vec() })
}
