//! Character-level name encoders: a lookup table followed either by plain
//! concatenation (FF) or by a bank of narrow convolutions with max pooling
//! (CNN). The character table is trainable.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Error, Result};
use crate::tensor::{
    lookup_backward, lookup_forward, ConvBank, ConvCache, LookupCache, Matrix, Parameter,
};

pub const CPAD: usize = 0;
pub const START: usize = 1;
pub const END: usize = 2;
pub const UNK: usize = 3;
const RESERVED: usize = 4;

/// Character → index; indices below four are reserved.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CharVocab {
    chars: Vec<char>,
    index: BTreeMap<char, usize>,
}

impl CharVocab {
    pub fn build<'a, I: IntoIterator<Item = &'a str>>(names: I) -> Self {
        let set: alloc::collections::BTreeSet<char> = names.into_iter().flat_map(|n| n.chars()).collect();
        CharVocab::from_chars(set.into_iter().collect())
    }

    pub fn from_chars(chars: Vec<char>) -> Self {
        let index = chars.iter().enumerate().map(|(i, &c)| (c, i + RESERVED)).collect();
        CharVocab { chars, index }
    }

    pub fn chars(&self) -> &[char] {
        &self.chars
    }

    /// Table rows needed, including the reserved symbols.
    pub fn size(&self) -> usize {
        self.chars.len() + RESERVED
    }

    /// `START name END CPAD…`, exactly `len` ids; long names are cut so that
    /// `END` survives.
    pub fn encode(&self, name: &str, len: usize) -> Result<Vec<usize>> {
        if len < 2 {
            return Err(Error::Config(alloc::format!("name length {len} cannot hold START/END")));
        }
        let mut ids = Vec::with_capacity(len);
        ids.push(START);
        ids.extend(name.chars().take(len - 2).map(|c| self.index.get(&c).copied().unwrap_or(UNK)));
        ids.push(END);
        ids.resize(len, CPAD);
        Ok(ids)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CharFf {
    pub table: Parameter,
    len: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CharCnn {
    pub table: Parameter,
    pub banks: Vec<ConvBank>,
    len: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CharEncoder {
    Ff(CharFf),
    Cnn(CharCnn),
}

#[derive(Debug)]
pub struct CharCache {
    lookup: LookupCache,
    chars: Matrix,
    convs: Vec<ConvCache>,
}

impl CharEncoder {
    pub fn ff<R: Rng + ?Sized>(vocab: usize, dim: usize, len: usize, rng: &mut R) -> Self {
        CharEncoder::Ff(CharFf { table: Parameter::uniform(vocab, dim, 0.5, rng), len })
    }

    pub fn cnn<R: Rng + ?Sized>(
        vocab: usize,
        dim: usize,
        len: usize,
        widths: &[usize],
        per_width: usize,
        rng: &mut R,
    ) -> Result<Self> {
        if let Some(&w) = widths.iter().find(|&&w| w == 0 || w > len) {
            return Err(Error::Config(alloc::format!(
                "character filter width {w} exceeds name length {len}"
            )));
        }
        let table = Parameter::uniform(vocab, dim, 0.5, rng);
        let banks = widths.iter().map(|&w| ConvBank::new(w, per_width, dim, rng)).collect();
        Ok(CharEncoder::Cnn(CharCnn { table, banks, len }))
    }

    pub fn name_len(&self) -> usize {
        match self {
            CharEncoder::Ff(f) => f.len,
            CharEncoder::Cnn(c) => c.len,
        }
    }

    pub fn output_dim(&self) -> usize {
        match self {
            CharEncoder::Ff(f) => f.len * f.table.shape().1,
            CharEncoder::Cnn(c) => c.banks.iter().map(|b| b.count()).sum(),
        }
    }

    pub fn forward(&self, ids: &[usize]) -> Result<(Vec<f64>, CharCache)> {
        match self {
            CharEncoder::Ff(f) => {
                let (chars, lookup) = lookup_forward(&f.table, ids)?;
                Ok((chars.as_slice().to_vec(), CharCache { lookup, chars, convs: Vec::new() }))
            }
            CharEncoder::Cnn(c) => {
                let (chars, lookup) = lookup_forward(&c.table, ids)?;
                let mut out = Vec::with_capacity(self.output_dim());
                let mut convs = Vec::with_capacity(c.banks.len());
                for bank in &c.banks {
                    let (pooled, cache) = bank.forward(&chars)?;
                    out.extend(pooled);
                    convs.push(cache);
                }
                Ok((out, CharCache { lookup, chars, convs }))
            }
        }
    }

    pub fn backward(&mut self, cache: CharCache, upstream: &[f64]) {
        match self {
            CharEncoder::Ff(f) => {
                let g = Matrix::from_vec(cache.chars.rows(), cache.chars.cols(), upstream.to_vec())
                    .expect("upstream matches forward output");
                lookup_backward(&mut f.table, cache.lookup, &g);
            }
            CharEncoder::Cnn(c) => {
                let mut dx = Matrix::zeros(cache.chars.rows(), cache.chars.cols());
                let mut offset = 0;
                for (bank, conv) in c.banks.iter_mut().zip(cache.convs) {
                    let n = bank.count();
                    bank.backward(&cache.chars, conv, &upstream[offset..offset + n], &mut dx);
                    offset += n;
                }
                lookup_backward(&mut c.table, cache.lookup, &dx);
            }
        }
    }

    pub fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut Parameter)) {
        match self {
            CharEncoder::Ff(ff) => f(&crate::tensor::param_name(prefix, "table"), &mut ff.table),
            CharEncoder::Cnn(c) => {
                f(&crate::tensor::param_name(prefix, "table"), &mut c.table);
                for bank in &mut c.banks {
                    let p = crate::tensor::param_name(prefix, &alloc::format!("conv{}", bank.width()));
                    bank.visit_mut(&p, f);
                }
            }
        }
    }

    pub fn visit(&self, prefix: &str, f: &mut dyn FnMut(&str, &Parameter)) {
        match self {
            CharEncoder::Ff(ff) => f(&crate::tensor::param_name(prefix, "table"), &ff.table),
            CharEncoder::Cnn(c) => {
                f(&crate::tensor::param_name(prefix, "table"), &c.table);
                for bank in &c.banks {
                    let p = crate::tensor::param_name(prefix, &alloc::format!("conv{}", bank.width()));
                    bank.visit(&p, f);
                }
            }
        }
    }
}

/// Convenience for a `String` name.
pub fn encode_name(vocab: &CharVocab, name: &[String], len: usize) -> Result<Vec<usize>> {
    vocab.encode(&name.join(" "), len)
}
