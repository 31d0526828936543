//! The global model: a one-hidden-layer perceptron over an entity
//! representation, scoring every type independently.

use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;

use crate::corpus::EntityRecord;
use crate::error::{Error, Result};
use crate::eval::LabelMatrix;
use crate::repr::{encode_name, frozen_parts, CharCache, CharEncoder, CharVocab, Levels, Sources, SparseFeatureVector};
use crate::scores::TypeScoreMatrix;
use crate::tensor::{
    bce, bce_logit_grad, dense_backward, dense_forward, rectifier, rectifier_backward, sigmoid_vec,
    DenseCache, Matrix, Parameter, Parameters,
};
use crate::train::{fit, minibatches, tuned_micro_f1, Schedule, TrainLog};

/// What the first layer consumes for one entity.
#[derive(Debug, Clone, PartialEq)]
pub enum GmInput {
    /// Frozen vectors around an optional character id sequence, concatenated
    /// in that order.
    Dense { before: Vec<f64>, chars: Option<Vec<usize>>, after: Vec<f64> },
    /// Active feature ids of a sparse indicator vector.
    Sparse(SparseFeatureVector),
}

impl GmInput {
    /// Assembles the input of `record` for the configured levels.
    pub fn from_record(
        record: &EntityRecord,
        levels: &Levels,
        sources: &Sources<'_>,
        chars: Option<(&CharVocab, usize)>,
    ) -> Result<Self> {
        let parts = frozen_parts(record, levels, sources)?;
        let ids = match (levels.char_level(), chars) {
            (Some(_), Some((vocab, len))) => Some(encode_name(vocab, &record.name, len)?),
            (Some(_), None) => return Err(Error::Config(String::from("character level needs a vocabulary"))),
            (None, _) => None,
        };
        Ok(GmInput::Dense { before: parts.before, chars: ids, after: parts.after })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GmExample {
    pub input: GmInput,
    /// Sorted gold type indices.
    pub gold: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GlobalModel {
    pub w_in: Parameter,
    pub b_in: Parameter,
    pub w_out: Parameter,
    pub b_out: Parameter,
    pub chars: Option<CharEncoder>,
    sparse: bool,
}

#[derive(Debug)]
enum InputCache {
    Dense { dense: DenseCache, chars: Option<(CharCache, usize)> },
    Sparse(Vec<usize>),
}

#[derive(Debug)]
pub struct GmCache {
    input: InputCache,
    pre: Vec<f64>,
    out: DenseCache,
}

impl GlobalModel {
    /// Dense input: `frozen_dim` frozen values plus the character encoder output.
    pub fn dense<R: Rng + ?Sized>(
        frozen_dim: usize,
        chars: Option<CharEncoder>,
        hidden: usize,
        num_types: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let d = frozen_dim + chars.as_ref().map_or(0, CharEncoder::output_dim);
        Self::build(d, chars, hidden, num_types, false, rng)
    }

    /// Sparse indicator input over a dictionary of `features` entries.
    pub fn sparse<R: Rng + ?Sized>(features: usize, hidden: usize, num_types: usize, rng: &mut R) -> Result<Self> {
        Self::build(features, None, hidden, num_types, true, rng)
    }

    fn build<R: Rng + ?Sized>(
        d: usize,
        chars: Option<CharEncoder>,
        hidden: usize,
        num_types: usize,
        sparse: bool,
        rng: &mut R,
    ) -> Result<Self> {
        if d == 0 || hidden == 0 || num_types == 0 {
            return Err(Error::Config(alloc::format!(
                "global model needs positive sizes (input {d}, hidden {hidden}, types {num_types})"
            )));
        }
        Ok(GlobalModel {
            w_in: Parameter::glorot(hidden, d, rng),
            b_in: Parameter::zeros(hidden, 1),
            w_out: Parameter::glorot(num_types, hidden, rng),
            b_out: Parameter::zeros(num_types, 1),
            chars,
            sparse,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.w_in.shape().1
    }

    pub fn hidden(&self) -> usize {
        self.w_in.shape().0
    }

    pub fn num_types(&self) -> usize {
        self.w_out.shape().0
    }

    pub fn is_sparse(&self) -> bool {
        self.sparse
    }

    /// `σ(W_out relu(W_in e + b_in) + b_out)`.
    pub fn forward(&self, input: &GmInput) -> Result<(Vec<f64>, GmCache)> {
        let (pre, input_cache) = match input {
            GmInput::Dense { before, chars, after } => {
                if self.sparse {
                    return Err(Error::Config(String::from("sparse model given a dense input")));
                }
                let mut x = before.clone();
                let char_cache = match (&self.chars, chars) {
                    (Some(enc), Some(ids)) => {
                        let offset = x.len();
                        let (v, cache) = enc.forward(ids)?;
                        x.extend(v);
                        Some((cache, offset))
                    }
                    (None, None) => None,
                    _ => return Err(Error::Config(String::from("character input and encoder must come together"))),
                };
                x.extend_from_slice(after);
                let (pre, dense) = dense_forward(&self.w_in, Some(&self.b_in), &x)?;
                (pre, InputCache::Dense { dense, chars: char_cache })
            }
            GmInput::Sparse(features) => {
                if !self.sparse {
                    return Err(Error::Config(String::from("dense model given a sparse input")));
                }
                let d = self.input_dim();
                let mut pre = self.b_in.value.as_slice().to_vec();
                for &id in features.ids() {
                    if id >= d {
                        return Err(Error::Index { id, len: d });
                    }
                    for (r, z) in pre.iter_mut().enumerate() {
                        *z += self.w_in.value.get(r, id);
                    }
                }
                (pre, InputCache::Sparse(features.ids().to_vec()))
            }
        };
        let hidden = rectifier(&pre);
        let (logits, out) = dense_forward(&self.w_out, Some(&self.b_out), &hidden)?;
        Ok((sigmoid_vec(&logits), GmCache { input: input_cache, pre, out }))
    }

    /// Accumulates the gradient of `gm_loss(probs, gold)`.
    pub fn backward(&mut self, cache: GmCache, probs: &[f64], gold: &[usize]) {
        let dlogits: Vec<f64> = probs
            .iter()
            .enumerate()
            .map(|(t, &p)| bce_logit_grad(if gold.contains(&t) { 1.0 } else { 0.0 }, p))
            .collect();
        let dh = dense_backward(&mut self.w_out, Some(&mut self.b_out), cache.out, &dlogits);
        let dpre = rectifier_backward(&cache.pre, &dh);
        match cache.input {
            InputCache::Dense { dense, chars } => {
                let dx = dense_backward(&mut self.w_in, Some(&mut self.b_in), dense, &dpre);
                if let (Some((char_cache, offset)), Some(enc)) = (chars, self.chars.as_mut()) {
                    let n = enc.output_dim();
                    enc.backward(char_cache, &dx[offset..offset + n]);
                }
            }
            InputCache::Sparse(ids) => {
                let cols = self.input_dim();
                let grad = self.w_in.grad.as_mut_slice();
                for &id in &ids {
                    for (r, &g) in dpre.iter().enumerate() {
                        grad[r * cols + id] += g;
                    }
                }
                for (b, &g) in self.b_in.grad.as_mut_slice().iter_mut().zip(&dpre) {
                    *b += g;
                }
            }
        }
    }

    /// Probability rows for a batch of inputs.
    pub fn scores(&self, inputs: &[&GmInput]) -> Result<Matrix> {
        let mut data = Vec::with_capacity(inputs.len() * self.num_types());
        for input in inputs {
            data.extend(self.forward(input)?.0);
        }
        Matrix::from_vec(inputs.len(), self.num_types(), data)
    }
}

impl Parameters for GlobalModel {
    fn visit_mut(&mut self, f: &mut dyn FnMut(&str, &mut Parameter)) {
        f("w_in", &mut self.w_in);
        f("b_in", &mut self.b_in);
        f("w_out", &mut self.w_out);
        f("b_out", &mut self.b_out);
        if let Some(enc) = self.chars.as_mut() {
            enc.visit_mut("chars", f);
        }
    }

    fn visit(&self, f: &mut dyn FnMut(&str, &Parameter)) {
        f("w_in", &self.w_in);
        f("b_in", &self.b_in);
        f("w_out", &self.w_out);
        f("b_out", &self.b_out);
        if let Some(enc) = self.chars.as_ref() {
            enc.visit("chars", f);
        }
    }
}

/// `Σ_t BCE(y_t, p_t)` with `y_t = [t ∈ gold]`.
pub fn gm_loss(probs: &[f64], gold: &[usize]) -> f64 {
    probs.iter().enumerate().map(|(t, &p)| bce(if gold.contains(&t) { 1.0 } else { 0.0 }, p)).sum()
}

/// AdaGrad minibatch training; returns the epoch snapshot with the best
/// threshold-tuned dev micro F1.
pub fn gm_train<R: Rng + ?Sized>(
    model: GlobalModel,
    train: &[GmExample],
    dev: &[GmExample],
    schedule: &Schedule,
    rng: &mut R,
) -> Result<(GlobalModel, TrainLog)> {
    if train.is_empty() {
        return Err(Error::Empty("global model training set"));
    }
    if dev.is_empty() {
        return Err(Error::Empty("global model dev set"));
    }
    let num_types = model.num_types();
    let dev_inputs: Vec<&GmInput> = dev.iter().map(|e| &e.input).collect();
    let dev_gold = LabelMatrix::from_sets(num_types, &dev.iter().map(|e| e.gold.as_slice()).collect::<Vec<_>>())?;

    let mut model = model;
    model.zero_grad();
    fit(
        model,
        schedule,
        |m, _| {
            let mut total = 0.0;
            for batch in minibatches(train.len(), schedule.batch_size, rng) {
                for &i in &batch {
                    let ex = &train[i];
                    let (p, cache) = m.forward(&ex.input)?;
                    total += gm_loss(&p, &ex.gold);
                    m.backward(cache, &p, &ex.gold);
                }
                schedule.optimizer.step(m, batch.len())?;
            }
            Ok(total / train.len() as f64)
        },
        |m| tuned_micro_f1(&m.scores(&dev_inputs)?, &dev_gold),
    )
}

/// One probability row per requested entity.
pub fn gm_predict(
    model: &GlobalModel,
    entities: Vec<String>,
    inputs: &[&GmInput],
    types: Vec<String>,
) -> Result<TypeScoreMatrix> {
    if entities.len() != inputs.len() {
        return Err(Error::Shape { op: "gm_predict", left: (entities.len(), 0), right: (inputs.len(), 0) });
    }
    TypeScoreMatrix::new(entities, types, model.scores(inputs)?)
}

/// Most frequent train type gets 1.0 for every entity, everything else 0.
/// Ties go to the lower type index.
pub fn mft_baseline<'a>(
    train: impl IntoIterator<Item = &'a EntityRecord>,
    entities: Vec<String>,
    types: Vec<String>,
) -> Result<TypeScoreMatrix> {
    let mut counts = alloc::vec![0usize; types.len()];
    for r in train {
        for &t in &r.gold_types {
            *counts.get_mut(t).ok_or(Error::Index { id: t, len: types.len() })? += 1;
        }
    }
    let top = counts
        .iter()
        .enumerate()
        .fold(None, |best: Option<(usize, usize)>, (t, &c)| match best {
            Some((_, bc)) if bc >= c => best,
            _ => Some((t, c)),
        })
        .ok_or(Error::Empty("type inventory"))?
        .0;
    let mut scores = Matrix::zeros(entities.len(), types.len());
    for e in 0..entities.len() {
        scores.set(e, top, 1.0);
    }
    TypeScoreMatrix::new(entities, types, scores)
}
