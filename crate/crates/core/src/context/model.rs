use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use super::{Aggregation, ContextEncoder, EncoderCache, MimlMode};
use crate::error::{Error, Result};
use crate::tensor::{
    axpy, bce, bce_grad, bce_logit_grad, dense_backward, dense_forward, dot, sigmoid, sigmoid_vec, DenseCache,
    Matrix, Parameter, Parameters,
};

/// Per-type logistic output: `P(t|c) = σ(w_t·c + b_t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Head {
    pub w: Parameter,
    pub b: Parameter,
}

impl Head {
    pub fn new<R: Rng + ?Sized>(num_types: usize, hidden: usize, rng: &mut R) -> Self {
        Head { w: Parameter::glorot(num_types, hidden, rng), b: Parameter::zeros(num_types, 1) }
    }

    pub fn num_types(&self) -> usize {
        self.w.shape().0
    }

    pub fn probs(&self, c: &[f64]) -> Result<(Vec<f64>, DenseCache)> {
        let (logits, cache) = dense_forward(&self.w, Some(&self.b), c)?;
        Ok((sigmoid_vec(&logits), cache))
    }

    /// `σ(w_t·a + b_t)` for a single type.
    fn prob_of(&self, t: usize, a: &[f64]) -> f64 {
        sigmoid(dot(self.w.value.row(t), a) + self.b.value.get(t, 0))
    }
}

/// Bilinear selective attention: `α_{i,t} ∝ exp(c_iᵀ M t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Attention {
    pub m: Parameter,
    pub types: Parameter,
}

impl Attention {
    pub fn new<R: Rng + ?Sized>(num_types: usize, hidden: usize, type_dim: usize, rng: &mut R) -> Self {
        Attention { m: Parameter::glorot(hidden, type_dim, rng), types: Parameter::uniform(num_types, type_dim, 0.5, rng) }
    }

    /// `M t` for type `t`.
    fn query(&self, t: usize) -> Vec<f64> {
        self.m.value.matvec(self.types.value.row(t)).expect("type embedding matches M")
    }
}

/// Softmax of `c_i·u` over the rows of `contexts`, with max subtraction.
pub fn attention_weights(contexts: &Matrix, u: &[f64]) -> Vec<f64> {
    let scores: Vec<f64> = (0..contexts.rows()).map(|i| dot(contexts.row(i), u)).collect();
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| libm::exp(s - max)).collect();
    let z: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / z).collect()
}

/// Per-type maximum over the rows of a `q × |T|` probability matrix.
pub fn miml_max(probs: &Matrix) -> Vec<f64> {
    argmax_rows(probs).into_iter().enumerate().map(|(t, i)| probs.get(i, t)).collect()
}

/// Per-type mean over the rows of a `q × |T|` probability matrix.
pub fn miml_avg(probs: &Matrix) -> Vec<f64> {
    let q = probs.rows() as f64;
    let mut sum = vec![0.0; probs.cols()];
    for i in 0..probs.rows() {
        axpy(1.0, probs.row(i), &mut sum);
    }
    sum.into_iter().map(|s| s / q).collect()
}

/// Row holding each column's maximum (first occurrence).
fn argmax_rows(probs: &Matrix) -> Vec<usize> {
    (0..probs.cols())
        .map(|t| {
            let mut best = 0;
            for i in 1..probs.rows() {
                if probs.get(i, t) > probs.get(best, t) {
                    best = i;
                }
            }
            best
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContextModel {
    pub encoder: ContextEncoder,
    pub head: Head,
    /// Present only in attention mode.
    pub attention: Option<Attention>,
    mode: MimlMode,
}

struct Encoded {
    c: Matrix,
    caches: Vec<EncoderCache>,
}

impl ContextModel {
    pub fn new<R: Rng + ?Sized>(
        encoder: ContextEncoder,
        num_types: usize,
        mode: MimlMode,
        type_dim: usize,
        rng: &mut R,
    ) -> Result<Self> {
        if num_types == 0 {
            return Err(Error::Empty("type inventory"));
        }
        let h = encoder.output_dim();
        let head = Head::new(num_types, h, rng);
        let attention = match mode {
            MimlMode::Att if type_dim == 0 => {
                return Err(Error::Config(alloc::string::String::from("attention needs a positive type dimension")))
            }
            MimlMode::Att => Some(Attention::new(num_types, h, type_dim, rng)),
            _ => None,
        };
        Ok(ContextModel { encoder, head, attention, mode })
    }

    /// Replaces the random type embeddings (attention mode only).
    pub fn init_type_embeddings(&mut self, embeddings: &Matrix) -> Result<()> {
        let att = self.attention.as_mut().ok_or(Error::Config(alloc::string::String::from(
            "type embeddings only apply to attention mode",
        )))?;
        if embeddings.shape() != att.types.shape() {
            return Err(Error::Shape { op: "type embeddings", left: att.types.shape(), right: embeddings.shape() });
        }
        att.types.value = embeddings.clone();
        Ok(())
    }

    pub fn mode(&self) -> MimlMode {
        self.mode
    }

    pub fn num_types(&self) -> usize {
        self.head.num_types()
    }

    fn encode(&self, contexts: &[&[usize]]) -> Result<Encoded> {
        if contexts.is_empty() {
            return Err(Error::Empty("bag without contexts"));
        }
        let h = self.encoder.output_dim();
        let mut data = Vec::with_capacity(contexts.len() * h);
        let mut caches = Vec::with_capacity(contexts.len());
        for ids in contexts {
            let (c, cache) = self.encoder.forward(ids)?;
            data.extend(c);
            caches.push(cache);
        }
        Ok(Encoded { c: Matrix::from_vec(contexts.len(), h, data)?, caches })
    }

    /// Per-context probabilities, `q × |T|`.
    pub fn context_probs(&self, contexts: &[&[usize]]) -> Result<Matrix> {
        let enc = self.encode(contexts)?;
        self.probs_of(&enc.c).map(|(p, _)| p)
    }

    fn probs_of(&self, c: &Matrix) -> Result<(Matrix, Vec<DenseCache>)> {
        let t = self.num_types();
        let mut data = Vec::with_capacity(c.rows() * t);
        let mut caches = Vec::with_capacity(c.rows());
        for i in 0..c.rows() {
            let (p, cache) = self.head.probs(c.row(i))?;
            data.extend(p);
            caches.push(cache);
        }
        Ok((Matrix::from_vec(c.rows(), t, data)?, caches))
    }

    fn attend(&self, c: &Matrix) -> Result<Vec<(Vec<f64>, Vec<f64>, Vec<f64>)>> {
        let att = self.attention.as_ref().ok_or(Error::Config(alloc::string::String::from(
            "attention aggregation needs attention parameters",
        )))?;
        Ok((0..self.num_types())
            .map(|t| {
                let u = att.query(t);
                let alpha = attention_weights(c, &u);
                let mut a = vec![0.0; c.cols()];
                for (i, &w) in alpha.iter().enumerate() {
                    axpy(w, c.row(i), &mut a);
                }
                (u, alpha, a)
            })
            .collect())
    }

    /// Attention weights `α_{·,t}` for every type, `|T|` rows of length q.
    pub fn attention(&self, contexts: &[&[usize]]) -> Result<Vec<Vec<f64>>> {
        let enc = self.encode(contexts)?;
        Ok(self.attend(&enc.c)?.into_iter().map(|(_, alpha, _)| alpha).collect())
    }

    /// Entity-level probabilities under the given aggregation.
    pub fn predict_with(&self, contexts: &[&[usize]], agg: Aggregation) -> Result<Vec<f64>> {
        let enc = self.encode(contexts)?;
        match agg {
            Aggregation::Max => Ok(miml_max(&self.probs_of(&enc.c)?.0)),
            Aggregation::Avg | Aggregation::PerContext => Ok(miml_avg(&self.probs_of(&enc.c)?.0)),
            Aggregation::Att => Ok(self
                .attend(&enc.c)?
                .iter()
                .enumerate()
                .map(|(t, (_, _, a))| self.head.prob_of(t, a))
                .collect()),
        }
    }

    /// Entity-level probabilities under this model's prediction aggregation.
    pub fn predict(&self, contexts: &[&[usize]]) -> Result<Vec<f64>> {
        self.predict_with(contexts, self.mode.predict_aggregation())
    }

    /// Loss of one training unit (a context for DS, a bag otherwise).
    pub fn loss(&self, contexts: &[&[usize]], gold: &[usize], agg: Aggregation) -> Result<f64> {
        if agg == Aggregation::PerContext {
            let probs = self.context_probs(contexts)?;
            return Ok((0..probs.rows()).map(|i| bag_loss(probs.row(i), gold)).sum());
        }
        Ok(bag_loss(&self.predict_with(contexts, agg)?, gold))
    }

    /// Loss of one training unit plus gradient accumulation.
    pub fn loss_and_backward(&mut self, contexts: &[&[usize]], gold: &[usize], agg: Aggregation) -> Result<f64> {
        let enc = self.encode(contexts)?;
        let q = enc.c.rows();
        let h = enc.c.cols();
        let num_types = self.num_types();
        let label = |t: usize| if gold.contains(&t) { 1.0 } else { 0.0 };
        let mut dc = Matrix::zeros(q, h);

        let loss = match agg {
            Aggregation::PerContext | Aggregation::Max | Aggregation::Avg => {
                let (probs, head_caches) = self.probs_of(&enc.c)?;
                let mut dlogits = Matrix::zeros(q, num_types);
                let loss = match agg {
                    Aggregation::PerContext => {
                        let mut total = 0.0;
                        for i in 0..q {
                            total += bag_loss(probs.row(i), gold);
                            for t in 0..num_types {
                                dlogits.set(i, t, bce_logit_grad(label(t), probs.get(i, t)));
                            }
                        }
                        total
                    }
                    Aggregation::Max => {
                        let arg = argmax_rows(&probs);
                        let mut total = 0.0;
                        for (t, &i) in arg.iter().enumerate() {
                            let p = probs.get(i, t);
                            total += bce(label(t), p);
                            dlogits.set(i, t, bce_logit_grad(label(t), p));
                        }
                        total
                    }
                    _ => {
                        let avg = miml_avg(&probs);
                        for (t, &p) in avg.iter().enumerate() {
                            let g = bce_grad(label(t), p) / q as f64;
                            for i in 0..q {
                                let pi = probs.get(i, t);
                                dlogits.set(i, t, g * pi * (1.0 - pi));
                            }
                        }
                        bag_loss(&avg, gold)
                    }
                };
                for (i, cache) in head_caches.into_iter().enumerate() {
                    if dlogits.row(i).iter().any(|&g| g != 0.0) {
                        let g = dense_backward(&mut self.head.w, Some(&mut self.head.b), cache, dlogits.row(i));
                        dc.row_mut(i).copy_from_slice(&g);
                    }
                }
                loss
            }
            Aggregation::Att => {
                let attended = self.attend(&enc.c)?;
                let mut total = 0.0;
                let att = self.attention.as_mut().expect("attend checked attention");
                for (t, (u, alpha, a)) in attended.into_iter().enumerate() {
                    let p = sigmoid(dot(self.head.w.value.row(t), &a) + self.head.b.value.get(t, 0));
                    total += bce(label(t), p);
                    let dlogit = bce_logit_grad(label(t), p);
                    if dlogit == 0.0 {
                        continue;
                    }
                    axpy(dlogit, &a, self.head.w.grad.row_mut(t));
                    self.head.b.grad.as_mut_slice()[t] += dlogit;
                    let mut da = self.head.w.value.row(t).to_vec();
                    da.iter_mut().for_each(|x| *x *= dlogit);
                    // through a_t = Σ α_i c_i
                    let dalpha: Vec<f64> = (0..q).map(|i| dot(enc.c.row(i), &da)).collect();
                    let mean: f64 = alpha.iter().zip(&dalpha).map(|(a, d)| a * d).sum();
                    let mut du = vec![0.0; h];
                    for i in 0..q {
                        axpy(alpha[i], &da, dc.row_mut(i));
                        let ds = alpha[i] * (dalpha[i] - mean);
                        axpy(ds, &u, dc.row_mut(i));
                        axpy(ds, enc.c.row(i), &mut du);
                    }
                    // through u_t = M t_t
                    let type_vec = att.types.value.row(t).to_vec();
                    let cols = att.m.value.cols();
                    let mg = att.m.grad.as_mut_slice();
                    for (r, &g) in du.iter().enumerate() {
                        axpy(g, &type_vec, &mut mg[r * cols..(r + 1) * cols]);
                    }
                    let dt = att.m.value.t_matvec(&du)?;
                    axpy(1.0, &dt, att.types.grad.row_mut(t));
                }
                total
            }
        };

        for (i, cache) in enc.caches.into_iter().enumerate() {
            if dc.row(i).iter().any(|&g| g != 0.0) {
                self.encoder.backward(cache, dc.row(i));
            }
        }
        Ok(loss)
    }
}

/// `Σ_t BCE(y_t, p_t)`.
fn bag_loss(probs: &[f64], gold: &[usize]) -> f64 {
    probs.iter().enumerate().map(|(t, &p)| bce(if gold.contains(&t) { 1.0 } else { 0.0 }, p)).sum()
}

impl Parameters for ContextModel {
    fn visit_mut(&mut self, f: &mut dyn FnMut(&str, &mut Parameter)) {
        self.encoder.visit_mut("encoder", f);
        f("head.w", &mut self.head.w);
        f("head.b", &mut self.head.b);
        if let Some(att) = self.attention.as_mut() {
            f("attention.m", &mut att.m);
            f("attention.types", &mut att.types);
        }
    }

    fn visit(&self, f: &mut dyn FnMut(&str, &Parameter)) {
        self.encoder.visit("encoder", f);
        f("head.w", &self.head.w);
        f("head.b", &self.head.b);
        if let Some(att) = self.attention.as_ref() {
            f("attention.m", &att.m);
            f("attention.types", &att.types);
        }
    }
}
