use alloc::vec::Vec;

use super::{axpy, Matrix, Parameter};
use crate::error::{Error, Result};

/// Probabilities are clamped to `[PROB_EPS, 1 - PROB_EPS]` before any log.
pub const PROB_EPS: f64 = 1e-7;

const SIGMOID_CLAMP: f64 = 30.0;

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    let x = x.clamp(-SIGMOID_CLAMP, SIGMOID_CLAMP);
    if x >= 0.0 {
        1.0 / (1.0 + libm::exp(-x))
    } else {
        let e = libm::exp(x);
        e / (1.0 + e)
    }
}

pub fn sigmoid_vec(xs: &[f64]) -> Vec<f64> {
    xs.iter().map(|&x| sigmoid(x)).collect()
}

pub fn rectifier(xs: &[f64]) -> Vec<f64> {
    xs.iter().map(|&x| if x > 0.0 { x } else { 0.0 }).collect()
}

/// Passes the upstream gradient where the input was strictly positive.
pub fn rectifier_backward(input: &[f64], upstream: &[f64]) -> Vec<f64> {
    input.iter().zip(upstream).map(|(&x, &g)| if x > 0.0 { g } else { 0.0 }).collect()
}

/// Binary cross entropy `-(y log p + (1 - y) log(1 - p))` with `p` clamped.
#[inline]
pub fn bce(y: f64, p: f64) -> f64 {
    let p = p.clamp(PROB_EPS, 1.0 - PROB_EPS);
    -(y * libm::log(p) + (1.0 - y) * libm::log(1.0 - p))
}

/// `d bce / d p`; zero where the clamp is active.
#[inline]
pub fn bce_grad(y: f64, p: f64) -> f64 {
    if !(PROB_EPS..=1.0 - PROB_EPS).contains(&p) {
        return 0.0;
    }
    -y / p + (1.0 - y) / (1.0 - p)
}

/// `d bce(y, sigmoid(z)) / d z` given `p = sigmoid(z)`.
#[inline]
pub fn bce_logit_grad(y: f64, p: f64) -> f64 {
    if !(PROB_EPS..=1.0 - PROB_EPS).contains(&p) {
        return 0.0;
    }
    p - y
}

#[derive(Debug)]
pub struct DenseCache {
    input: Vec<f64>,
}

impl DenseCache {
    pub fn input(&self) -> &[f64] {
        &self.input
    }
}

/// `y = W x (+ b)`.
pub fn dense_forward(
    w: &Parameter,
    bias: Option<&Parameter>,
    x: &[f64],
) -> Result<(Vec<f64>, DenseCache)> {
    let mut y = w.value.matvec(x)?;
    if let Some(b) = bias {
        if b.value.len() != y.len() {
            return Err(Error::Shape { op: "dense bias", left: w.shape(), right: b.shape() });
        }
        axpy(1.0, b.value.as_slice(), &mut y);
    }
    Ok((y, DenseCache { input: x.to_vec() }))
}

/// Accumulates `dW += g xᵀ`, `db += g` and returns `Wᵀ g`.
pub fn dense_backward(
    w: &mut Parameter,
    bias: Option<&mut Parameter>,
    cache: DenseCache,
    g: &[f64],
) -> Vec<f64> {
    let cols = w.value.cols();
    let grad = w.grad.as_mut_slice();
    for (r, &gr) in g.iter().enumerate() {
        if gr != 0.0 {
            axpy(gr, &cache.input, &mut grad[r * cols..(r + 1) * cols]);
        }
    }
    if let Some(b) = bias {
        axpy(1.0, g, b.grad.as_mut_slice());
    }
    w.value.t_matvec(g).expect("gradient length matches forward output")
}

#[derive(Debug)]
pub struct LookupCache {
    ids: Vec<usize>,
}

/// Gathers `table[ids[i]]` into row `i` of the output.
pub fn lookup_forward(table: &Parameter, ids: &[usize]) -> Result<(Matrix, LookupCache)> {
    let (rows, cols) = table.shape();
    let mut out = Vec::with_capacity(ids.len() * cols);
    for &id in ids {
        if id >= rows {
            return Err(Error::Index { id, len: rows });
        }
        out.extend_from_slice(table.value.row(id));
    }
    let m = Matrix::from_vec(ids.len(), cols, out)?;
    Ok((m, LookupCache { ids: ids.to_vec() }))
}

/// Scatters row gradients back into the touched table rows.
pub fn lookup_backward(table: &mut Parameter, cache: LookupCache, g: &Matrix) {
    let cols = table.value.cols();
    let grad = table.grad.as_mut_slice();
    for (i, &id) in cache.ids.iter().enumerate() {
        axpy(1.0, g.row(i), &mut grad[id * cols..(id + 1) * cols]);
    }
}
