use alloc::format;
use alloc::string::String;

use rand::Rng;

use super::Matrix;
use crate::error::{Error, Result};

/// A trainable matrix with its gradient buffer and AdaGrad accumulator.
#[derive(Debug, Clone, PartialEq)]
pub struct Parameter {
    pub value: Matrix,
    pub grad: Matrix,
    accum: Matrix,
}

pub fn glorot_bound(fan_in: usize, fan_out: usize) -> f64 {
    libm::sqrt(6.0 / (fan_in + fan_out).max(1) as f64)
}

impl Parameter {
    pub fn new(value: Matrix) -> Self {
        let (r, c) = value.shape();
        Parameter { value, grad: Matrix::zeros(r, c), accum: Matrix::zeros(r, c) }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Parameter::new(Matrix::zeros(rows, cols))
    }

    /// Uniform in `[-a, a]`, `a = sqrt(6 / (fan_in + fan_out))`, where a
    /// `rows x cols` weight maps `cols` inputs to `rows` outputs.
    pub fn glorot<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Self {
        let a = glorot_bound(cols, rows);
        Parameter::uniform(rows, cols, a, rng)
    }

    pub fn uniform<R: Rng + ?Sized>(rows: usize, cols: usize, a: f64, rng: &mut R) -> Self {
        let mut m = Matrix::zeros(rows, cols);
        for v in m.as_mut_slice() {
            *v = if a > 0.0 { rng.random_range(-a..=a) } else { 0.0 };
        }
        Parameter::new(m)
    }

    pub fn shape(&self) -> (usize, usize) {
        self.value.shape()
    }

    /// Sum of squared gradients seen so far.
    pub fn accum(&self) -> &Matrix {
        &self.accum
    }

    /// Overwrite the accumulator, used when restoring a checkpoint.
    pub fn set_accum(&mut self, accum: Matrix) -> Result<()> {
        if accum.shape() != self.shape() {
            return Err(Error::Shape { op: "set_accum", left: self.shape(), right: accum.shape() });
        }
        self.accum = accum;
        Ok(())
    }

    pub fn zero_grad(&mut self) {
        self.grad.fill(0.0);
    }

    pub fn scale_grad(&mut self, factor: f64) {
        self.grad.as_mut_slice().iter_mut().for_each(|g| *g *= factor);
    }

    /// `accum += g²; value -= lr · g / (sqrt(accum) + eps)`, then clears the
    /// gradient.
    pub fn adagrad_step(&mut self, lr: f64, eps: f64) -> Result<()> {
        if !(lr > 0.0) || !lr.is_finite() {
            return Err(Error::Config(format!("learning rate must be positive, got {lr}")));
        }
        let value = self.value.as_mut_slice();
        let grad = self.grad.as_mut_slice();
        let accum = self.accum.as_mut_slice();
        for ((v, g), a) in value.iter_mut().zip(grad.iter_mut()).zip(accum.iter_mut()) {
            if *g != 0.0 {
                *a += *g * *g;
                *v -= lr * *g / (libm::sqrt(*a) + eps);
                *g = 0.0;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaGrad {
    pub learning_rate: f64,
    pub epsilon: f64,
}

impl Default for AdaGrad {
    fn default() -> Self {
        AdaGrad { learning_rate: 0.01, epsilon: 1e-8 }
    }
}

impl AdaGrad {
    /// Averages the accumulated gradient over `batch` examples and applies
    /// one step to every parameter of `model`.
    pub fn step<M: Parameters + ?Sized>(&self, model: &mut M, batch: usize) -> Result<()> {
        let scale = 1.0 / batch.max(1) as f64;
        let mut status = Ok(());
        model.visit_mut(&mut |_, p| {
            if status.is_ok() {
                p.scale_grad(scale);
                status = p.adagrad_step(self.learning_rate, self.epsilon);
            }
        });
        status
    }
}

/// Named traversal over every trainable parameter of a model. Names are
/// stable and used as checkpoint keys.
pub trait Parameters {
    fn visit_mut(&mut self, f: &mut dyn FnMut(&str, &mut Parameter));
    fn visit(&self, f: &mut dyn FnMut(&str, &Parameter));

    fn zero_grad(&mut self) {
        self.visit_mut(&mut |_, p| p.zero_grad());
    }

    fn parameter_count(&self) -> usize {
        let mut n = 0;
        self.visit(&mut |_, p| n += p.value.len());
        n
    }
}

pub fn join(prefix: &str, name: &str) -> String {
    if prefix.is_empty() {
        String::from(name)
    } else {
        format!("{prefix}.{name}")
    }
}
