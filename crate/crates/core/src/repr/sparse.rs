//! Hand-crafted sparse name features: bag of words, and n-gram/shape/length.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

pub const NGRAM_MAX: usize = 5;

/// Binary indicator vector as strictly increasing feature ids.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SparseFeatureVector {
    ids: Vec<usize>,
}

impl SparseFeatureVector {
    pub fn ids(&self) -> &[usize] {
        &self.ids
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

/// Feature string → id, built on training names only.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FeatureDictionary {
    names: Vec<String>,
    index: BTreeMap<String, usize>,
}

impl FeatureDictionary {
    pub fn build<I, F>(features: I) -> Self
    where
        I: IntoIterator<Item = F>,
        F: IntoIterator<Item = String>,
    {
        let all: BTreeSet<String> = features.into_iter().flatten().collect();
        FeatureDictionary::from_names(all.into_iter().collect())
    }

    pub fn from_names(names: Vec<String>) -> Self {
        let index = names.iter().enumerate().map(|(i, n)| (n.clone(), i)).collect();
        FeatureDictionary { names, index }
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    /// Unseen features are dropped.
    pub fn encode(&self, features: &[String]) -> SparseFeatureVector {
        let ids: BTreeSet<usize> = features.iter().filter_map(|f| self.index.get(f).copied()).collect();
        SparseFeatureVector { ids: ids.into_iter().collect() }
    }
}

fn char_class(c: char) -> char {
    if c.is_uppercase() {
        'X'
    } else if c.is_lowercase() {
        'x'
    } else if c.is_numeric() {
        'd'
    } else if c.is_alphabetic() {
        'a'
    } else {
        '.'
    }
}

/// `Rolph` → `Xx`, `P.` → `X.`: character classes with runs collapsed.
pub fn token_shape(token: &str) -> String {
    let mut out = String::new();
    for c in token.chars().map(char_class) {
        if !out.ends_with(c) {
            out.push(c);
        }
    }
    out
}

fn normalize(name: &str) -> String {
    name.chars()
        .map(|c| {
            if c.is_numeric() {
                '7'
            } else if c.is_alphanumeric() || c == ' ' {
                c.to_lowercase().next().unwrap_or(c)
            } else {
                '.'
            }
        })
        .collect()
}

/// All substrings of `^s$` with length in `1..=n_max`.
pub fn char_ngrams(s: &str, n_max: usize) -> BTreeSet<String> {
    let chars: Vec<char> = core::iter::once('^').chain(s.chars()).chain(core::iter::once('$')).collect();
    let mut out = BTreeSet::new();
    for n in 1..=n_max.min(chars.len()) {
        for w in chars.windows(n) {
            out.insert(w.iter().collect());
        }
    }
    out
}

/// Name shape, exact length, character n-grams and normalized n-grams.
pub fn nsl_features(name: &str) -> Vec<String> {
    let mut out = BTreeSet::new();
    out.insert(format!("len:{}", name.chars().count()));
    if !name.is_empty() {
        let shape: Vec<String> = name.split_whitespace().map(token_shape).collect();
        out.insert(format!("shape:{}", shape.join("-")));
        out.extend(char_ngrams(name, NGRAM_MAX).into_iter().map(|g| format!("ng:{g}")));
        out.extend(char_ngrams(&normalize(name), NGRAM_MAX).into_iter().map(|g| format!("nng:{g}")));
    }
    out.into_iter().collect()
}

/// Every name word as-is and lowercased.
pub fn bow_features(name: &str) -> Vec<String> {
    let mut out = BTreeSet::new();
    for w in name.split_whitespace() {
        out.insert(format!("bow:{w}"));
        out.insert(format!("bow:{}", w.to_lowercase()));
    }
    out.into_iter().collect()
}
