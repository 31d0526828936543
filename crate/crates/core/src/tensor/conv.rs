//! Narrow 1-d convolution over token/character sequences followed by a
//! rectifier and max pooling over positions.
//!
//! Sequences are stored one row per position (`s x d`), so the window for
//! position `i` and width `w` is the contiguous slice of rows `i..i + w`.
//! A filter of width `w` is a `w x d` block flattened into one row.

use alloc::vec::Vec;

use rand::Rng;

use super::param::join;
use super::{axpy, dot, Matrix, Parameter};
use crate::error::{Error, Result};

/// Feature map `m[i] = max(0, <x[i..i+w], filter>_F + bias)`, length `s - w + 1`.
pub fn conv1d_narrow(input: &Matrix, filter: &Matrix, bias: f64) -> Result<Vec<f64>> {
    let (s, d) = input.shape();
    let (w, fd) = filter.shape();
    if fd != d {
        return Err(Error::Shape { op: "conv1d_narrow", left: input.shape(), right: filter.shape() });
    }
    if w == 0 || w > s {
        return Err(Error::Config(alloc::format!(
            "filter width {w} does not fit a sequence of length {s}"
        )));
    }
    let x = input.as_slice();
    let h = filter.as_slice();
    Ok((0..=s - w)
        .map(|i| {
            let pre = dot(&x[i * d..(i + w) * d], h) + bias;
            if pre > 0.0 { pre } else { 0.0 }
        })
        .collect())
}

/// Maximum and its first index.
pub fn maxpool(map: &[f64]) -> Result<(f64, usize)> {
    let mut it = map.iter().enumerate();
    let (_, &first) = it.next().ok_or(Error::Empty("max pooling over an empty feature map"))?;
    let mut best = (first, 0);
    for (i, &v) in it {
        if v > best.0 {
            best = (v, i);
        }
    }
    Ok(best)
}

pub fn maxpool_backward(len: usize, argmax: usize, upstream: f64) -> Vec<f64> {
    let mut g = alloc::vec![0.0; len];
    g[argmax] = upstream;
    g
}

/// `n` filters of one width with biases; produces one pooled feature per filter.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvBank {
    width: usize,
    pub filters: Parameter,
    pub bias: Parameter,
}

#[derive(Debug)]
pub struct ConvCache {
    argmax: Vec<usize>,
    active: Vec<bool>,
}

impl ConvBank {
    pub fn new<R: Rng + ?Sized>(width: usize, count: usize, dim: usize, rng: &mut R) -> Self {
        // fan-in of one filter is the window; fan-out the feature count
        let a = super::glorot_bound(width * dim, count);
        ConvBank {
            width,
            filters: Parameter::uniform(count, width * dim, a, rng),
            bias: Parameter::zeros(count, 1),
        }
    }

    pub fn from_parts(width: usize, filters: Parameter, bias: Parameter) -> Result<Self> {
        if !filters.shape().1.is_multiple_of(width.max(1)) || bias.shape() != (filters.shape().0, 1) {
            return Err(Error::Shape { op: "ConvBank", left: filters.shape(), right: bias.shape() });
        }
        Ok(ConvBank { width, filters, bias })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn count(&self) -> usize {
        self.filters.shape().0
    }

    pub fn forward(&self, input: &Matrix) -> Result<(Vec<f64>, ConvCache)> {
        let (s, d) = input.shape();
        let w = self.width;
        if self.filters.shape().1 != w * d {
            return Err(Error::Shape {
                op: "ConvBank::forward",
                left: input.shape(),
                right: self.filters.shape(),
            });
        }
        if w == 0 || w > s {
            return Err(Error::Config(alloc::format!(
                "filter width {w} does not fit a sequence of length {s}"
            )));
        }
        let x = input.as_slice();
        let n = self.count();
        let mut pooled = Vec::with_capacity(n);
        let mut argmax = Vec::with_capacity(n);
        let mut active = Vec::with_capacity(n);
        for f in 0..n {
            let h = self.filters.value.row(f);
            let b = self.bias.value.as_slice()[f];
            let mut best = f64::NEG_INFINITY;
            let mut best_i = 0;
            let mut best_pre = 0.0;
            for i in 0..=s - w {
                let pre = dot(&x[i * d..(i + w) * d], h) + b;
                let m = if pre > 0.0 { pre } else { 0.0 };
                if m > best {
                    best = m;
                    best_i = i;
                    best_pre = pre;
                }
            }
            pooled.push(best);
            argmax.push(best_i);
            active.push(best_pre > 0.0);
        }
        Ok((pooled, ConvCache { argmax, active }))
    }

    /// Routes each pooled gradient to its argmax window; `dx` has the input's shape.
    pub fn backward(&mut self, input: &Matrix, cache: ConvCache, upstream: &[f64], dx: &mut Matrix) {
        let d = input.cols();
        let w = self.width;
        let x = input.as_slice();
        let dxs = dx.as_mut_slice();
        let span = w * d;
        for (f, &g) in upstream.iter().enumerate() {
            if g == 0.0 || !cache.active[f] {
                continue;
            }
            let i = cache.argmax[f];
            let window = i * d..(i + w) * d;
            axpy(g, &x[window.clone()], &mut self.filters.grad.as_mut_slice()[f * span..(f + 1) * span]);
            self.bias.grad.as_mut_slice()[f] += g;
            axpy(g, self.filters.value.row(f), &mut dxs[window]);
        }
    }

    pub fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut Parameter)) {
        f(&join(prefix, "filters"), &mut self.filters);
        f(&join(prefix, "bias"), &mut self.bias);
    }

    pub fn visit(&self, prefix: &str, f: &mut dyn FnMut(&str, &Parameter)) {
        f(&join(prefix, "filters"), &self.filters);
        f(&join(prefix, "bias"), &self.bias);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gradcheck::{central_difference, max_relative_error};
    use crate::rng::stream;
    use alloc::vec;

    fn random(rows: usize, cols: usize, seed: u64) -> Matrix {
        let mut rng = stream(seed, "conv-test");
        Matrix::from_vec(rows, cols, (0..rows * cols).map(|_| rng.random_range(-1.0..1.0)).collect())
            .unwrap()
    }

    /// Independent double loop over the `d x s` orientation.
    fn naive(e: &Matrix, h: &Matrix, b: f64) -> Vec<f64> {
        let (s, d) = e.shape();
        let w = h.rows();
        (0..s - w + 1)
            .map(|i| {
                let mut acc = b;
                for col in 0..w {
                    for row in 0..d {
                        acc += e.get(i + col, row) * h.get(col, row);
                    }
                }
                acc.max(0.0)
            })
            .collect()
    }

    #[test]
    fn output_length_is_s_minus_w_plus_one() {
        let e = random(10, 4, 1);
        let h = random(3, 4, 2);
        assert_eq!(conv1d_narrow(&e, &h, 0.0).unwrap().len(), 8);
        for s in 1..12 {
            for w in 1..=s {
                let m = conv1d_narrow(&random(s, 2, 3), &random(w, 2, 4), 0.1).unwrap();
                assert_eq!(m.len(), s - w + 1);
            }
        }
        assert!(matches!(conv1d_narrow(&random(2, 2, 3), &random(3, 2, 4), 0.0), Err(Error::Config(_))));
    }

    #[test]
    fn zero_filter_gives_zero_map() {
        let m = conv1d_narrow(&random(6, 3, 5), &Matrix::zeros(2, 3), 0.0).unwrap();
        assert!(m.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn matches_naive_oracle() {
        let e = random(6, 4, 11);
        let h = random(2, 4, 12);
        let fast = conv1d_narrow(&e, &h, 0.05).unwrap();
        let slow = naive(&e, &h, 0.05);
        for (a, b) in fast.iter().zip(&slow) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn maxpool_ties_and_empty() {
        assert_eq!(maxpool(&[0.1, 0.9, 0.3]).unwrap(), (0.9, 1));
        assert_eq!(maxpool(&[0.5, 0.5]).unwrap(), (0.5, 0));
        assert!(maxpool(&[]).is_err());
        assert_eq!(maxpool_backward(3, 1, 2.0), vec![0.0, 2.0, 0.0]);
    }

    #[test]
    fn maxpool_gradient_matches_finite_differences() {
        let map = [0.3, -0.2, 0.8, 0.1];
        let numeric = central_difference(|v| maxpool(v).unwrap().0, &map, 1e-5);
        let (_, i) = maxpool(&map).unwrap();
        assert!(max_relative_error(&maxpool_backward(4, i, 1.0), &numeric) < 1e-6);
    }

    #[test]
    fn bank_gradients_match_finite_differences() {
        let mut rng = stream(21, "bank");
        let mut bank = ConvBank::new(2, 3, 4, &mut rng);
        bank.bias.value.as_mut_slice().copy_from_slice(&[0.3, 0.2, 0.4]);
        let x = random(5, 4, 22);
        let up = [0.7, -1.3, 0.4];
        let (_, cache) = bank.forward(&x).unwrap();
        let mut dx = Matrix::zeros(5, 4);
        bank.backward(&x, cache, &up, &mut dx);

        let objective = |b: &ConvBank, x: &Matrix| -> f64 {
            b.forward(x).unwrap().0.iter().zip(&up).map(|(p, u)| p * u).sum()
        };
        let num_x = central_difference(
            |v| objective(&bank, &Matrix::from_vec(5, 4, v.to_vec()).unwrap()),
            x.as_slice(),
            1e-5,
        );
        assert!(max_relative_error(dx.as_slice(), &num_x) < 1e-6);
        let mut probe = bank.clone();
        let num_f = central_difference(
            |v| {
                probe.filters.value.as_mut_slice().copy_from_slice(v);
                objective(&probe, &x)
            },
            bank.filters.value.as_slice(),
            1e-5,
        );
        assert!(max_relative_error(bank.filters.grad.as_slice(), &num_f) < 1e-6);
    }

    #[test]
    fn bank_equals_single_filter_op() {
        let mut rng = stream(31, "bank-op");
        let bank = ConvBank::new(3, 2, 2, &mut rng);
        let x = random(7, 2, 32);
        let (pooled, _) = bank.forward(&x).unwrap();
        for f in 0..2 {
            let h = Matrix::from_vec(3, 2, bank.filters.value.row(f).to_vec()).unwrap();
            let m = conv1d_narrow(&x, &h, 0.0).unwrap();
            assert_eq!(pooled[f], maxpool(&m).unwrap().0);
        }
    }
}
