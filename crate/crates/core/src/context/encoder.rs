use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;

use super::{WordVocab, PAD_ID};
use crate::error::{Error, Result};
use crate::repr::EmbeddingTable;
use crate::tensor::{
    dense_backward, dense_forward, lookup_backward, lookup_forward, param_name, ConvBank, ConvCache, DenseCache,
    LookupCache, Matrix, Parameter,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EncoderKind {
    Ff,
    Cnn,
}

impl EncoderKind {
    pub fn name(self) -> &'static str {
        match self {
            EncoderKind::Ff => "ff",
            EncoderKind::Cnn => "cnn",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ff" => Ok(EncoderKind::Ff),
            "cnn" => Ok(EncoderKind::Cnn),
            _ => Err(Error::Config(format!("unknown context encoder `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncoderConfig {
    pub kind: EncoderKind,
    /// Context width `s`, including the SLOT token.
    pub width: usize,
    pub word_dim: usize,
    pub hidden: usize,
    pub filter_widths: Vec<usize>,
    pub filters_per_width: usize,
    /// Separate filter banks for the left and right halves.
    pub unshared_halves: bool,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        EncoderConfig {
            kind: EncoderKind::Cnn,
            width: 10,
            word_dim: 100,
            hidden: 600,
            filter_widths: alloc::vec![1, 2, 3, 4],
            filters_per_width: 300,
            unshared_halves: false,
        }
    }
}

impl EncoderConfig {
    pub fn validate(&self) -> Result<()> {
        if self.width < 2 || !self.width.is_multiple_of(2) {
            return Err(Error::Config(format!("context width must be even and >= 2, got {}", self.width)));
        }
        if self.word_dim == 0 || self.hidden == 0 {
            return Err(Error::Config(String::from("word dimension and hidden size must be positive")));
        }
        if self.kind == EncoderKind::Cnn
            && (self.filter_widths.is_empty() || self.filters_per_width == 0 || self.filter_widths.contains(&0))
        {
            return Err(Error::Config(String::from("CNN encoder needs positive filter widths and counts")));
        }
        Ok(())
    }

    /// Length of the vector fed to `W_h`.
    pub fn feature_dim(&self) -> usize {
        match self.kind {
            EncoderKind::Ff => self.width * self.word_dim,
            EncoderKind::Cnn => 2 * self.filters_per_width * self.filter_widths.len(),
        }
    }

    /// Length each half is PAD-extended to before convolution.
    fn half_len(&self) -> usize {
        let max_w = self.filter_widths.iter().copied().max().unwrap_or(1);
        (self.width / 2).max(max_w)
    }
}

/// `c = tanh(W_h φ)`, with `φ` the flattened word vectors (FF) or the
/// max-pooled convolutions of both halves (CNN).
#[derive(Debug, Clone, PartialEq)]
pub struct ContextEncoder {
    pub words: Parameter,
    pub w_h: Parameter,
    /// Banks for the left half, or both halves when shared.
    pub left: Vec<ConvBank>,
    /// Banks for the right half; empty when shared.
    pub right: Vec<ConvBank>,
    config: EncoderConfig,
}

#[derive(Debug)]
struct HalfCache {
    lookup: LookupCache,
    x: Matrix,
    convs: Vec<ConvCache>,
}

#[derive(Debug)]
enum FeatureCache {
    Ff { lookup: LookupCache, rows: usize },
    Cnn([HalfCache; 2]),
}

#[derive(Debug)]
pub struct EncoderCache {
    features: FeatureCache,
    dense: DenseCache,
    out: Vec<f64>,
}

impl ContextEncoder {
    pub fn new<R: Rng + ?Sized>(config: EncoderConfig, vocab_size: usize, rng: &mut R) -> Result<Self> {
        config.validate()?;
        let d = config.word_dim;
        let mut words = Parameter::uniform(vocab_size, d, 0.5, rng);
        words.value.row_mut(PAD_ID).fill(0.0);
        let w_h = Parameter::glorot(config.hidden, config.feature_dim(), rng);
        let bank = |rng: &mut R| -> Vec<ConvBank> {
            match config.kind {
                EncoderKind::Ff => Vec::new(),
                EncoderKind::Cnn => {
                    config.filter_widths.iter().map(|&w| ConvBank::new(w, config.filters_per_width, d, rng)).collect()
                }
            }
        };
        let left = bank(rng);
        let right = if config.unshared_halves { bank(rng) } else { Vec::new() };
        Ok(ContextEncoder { words, w_h, left, right, config })
    }

    /// Overwrites rows of the word table with pretrained vectors where known.
    pub fn init_words(&mut self, vocab: &WordVocab, table: &EmbeddingTable) -> Result<usize> {
        if table.dim() != self.config.word_dim {
            return Err(Error::Shape {
                op: "init_words",
                left: self.words.shape(),
                right: (table.len(), table.dim()),
            });
        }
        let mut hits = 0;
        for (i, tok) in vocab.tokens().iter().enumerate().skip(PAD_ID + 1) {
            if let Some(v) = table.get(tok) {
                self.words.value.row_mut(i).copy_from_slice(v);
                hits += 1;
            }
        }
        Ok(hits)
    }

    pub fn config(&self) -> &EncoderConfig {
        &self.config
    }

    pub fn output_dim(&self) -> usize {
        self.config.hidden
    }

    fn right_banks(&self) -> &[ConvBank] {
        if self.right.is_empty() { &self.left } else { &self.right }
    }

    fn half_ids(&self, ids: &[usize]) -> [Vec<usize>; 2] {
        let half = self.config.width / 2;
        let len = self.config.half_len();
        let mut left = alloc::vec![PAD_ID; len - half];
        left.extend_from_slice(&ids[..half]);
        let mut right = ids[half..].to_vec();
        right.resize(len, PAD_ID);
        [left, right]
    }

    pub fn forward(&self, ids: &[usize]) -> Result<(Vec<f64>, EncoderCache)> {
        if ids.len() != self.config.width {
            return Err(Error::Shape { op: "context encoder", left: (ids.len(), 1), right: (self.config.width, 1) });
        }
        let (phi, features) = match self.config.kind {
            EncoderKind::Ff => {
                let (x, lookup) = lookup_forward(&self.words, ids)?;
                (x.into_vec(), FeatureCache::Ff { lookup, rows: ids.len() })
            }
            EncoderKind::Cnn => {
                let [l, r] = self.half_ids(ids);
                let mut phi = Vec::with_capacity(self.config.feature_dim());
                let mut half = |ids: &[usize], banks: &[ConvBank]| -> Result<HalfCache> {
                    let (x, lookup) = lookup_forward(&self.words, ids)?;
                    let mut convs = Vec::with_capacity(banks.len());
                    for bank in banks {
                        let (pooled, cache) = bank.forward(&x)?;
                        phi.extend(pooled);
                        convs.push(cache);
                    }
                    Ok(HalfCache { lookup, x, convs })
                };
                let left = half(&l, &self.left)?;
                let right = half(&r, self.right_banks())?;
                (phi, FeatureCache::Cnn([left, right]))
            }
        };
        let (pre, dense) = dense_forward(&self.w_h, None, &phi)?;
        let out: Vec<f64> = pre.iter().map(|&z| libm::tanh(z)).collect();
        Ok((out.clone(), EncoderCache { features, dense, out }))
    }

    /// Accumulates parameter gradients given `dL/dc`.
    pub fn backward(&mut self, cache: EncoderCache, upstream: &[f64]) {
        let dpre: Vec<f64> = cache.out.iter().zip(upstream).map(|(c, g)| g * (1.0 - c * c)).collect();
        let dphi = dense_backward(&mut self.w_h, None, cache.dense, &dpre);
        match cache.features {
            FeatureCache::Ff { lookup, rows } => {
                let g = Matrix::from_vec(rows, self.config.word_dim, dphi).expect("feature length matches");
                lookup_backward(&mut self.words, lookup, &g);
            }
            FeatureCache::Cnn([left, right]) => {
                let block = self.config.filters_per_width;
                let per_half = block * self.config.filter_widths.len();
                let shared = self.right.is_empty();
                for (side, half) in [left, right].into_iter().enumerate() {
                    let mut dx = Matrix::zeros(half.x.rows(), half.x.cols());
                    let banks = if side == 1 && !shared { &mut self.right } else { &mut self.left };
                    for (k, (bank, conv)) in banks.iter_mut().zip(half.convs).enumerate() {
                        let start = side * per_half + k * block;
                        bank.backward(&half.x, conv, &dphi[start..start + block], &mut dx);
                    }
                    lookup_backward(&mut self.words, half.lookup, &dx);
                }
            }
        }
    }

    pub fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut Parameter)) {
        f(&param_name(prefix, "words"), &mut self.words);
        f(&param_name(prefix, "w_h"), &mut self.w_h);
        let (left_tag, right_tag) = if self.right.is_empty() { ("", "") } else { ("left.", "right.") };
        for bank in &mut self.left {
            let name = param_name(prefix, &format!("{left_tag}conv{}", bank.width()));
            bank.visit_mut(&name, f);
        }
        for bank in &mut self.right {
            let name = param_name(prefix, &format!("{right_tag}conv{}", bank.width()));
            bank.visit_mut(&name, f);
        }
    }

    pub fn visit(&self, prefix: &str, f: &mut dyn FnMut(&str, &Parameter)) {
        f(&param_name(prefix, "words"), &self.words);
        f(&param_name(prefix, "w_h"), &self.w_h);
        let (left_tag, right_tag) = if self.right.is_empty() { ("", "") } else { ("left.", "right.") };
        for bank in &self.left {
            bank.visit(&param_name(prefix, &format!("{left_tag}conv{}", bank.width())), f);
        }
        for bank in &self.right {
            bank.visit(&param_name(prefix, &format!("{right_tag}conv{}", bank.width())), f);
        }
    }
}
