//! Central finite differences, the oracle for every hand-written backward pass.

use alloc::string::String;
use alloc::vec::Vec;

use crate::tensor::{Parameter, Parameters};

/// `(f(x + h e_i) - f(x - h e_i)) / 2h` for every coordinate.
pub fn central_difference<F>(mut f: F, x: &[f64], h: f64) -> Vec<f64>
where
    F: FnMut(&[f64]) -> f64,
{
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            let orig = probe[i];
            probe[i] = orig + h;
            let up = f(&probe);
            probe[i] = orig - h;
            let down = f(&probe);
            probe[i] = orig;
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Relative error below this magnitude is measured against the floor instead.
pub const REL_FLOOR: f64 = 1e-6;

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_FLOOR)
}

pub fn max_relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    assert_eq!(analytic.len(), numeric.len(), "gradient lengths differ");
    analytic
        .iter()
        .zip(numeric)
        .map(|(&a, &n)| relative_error(a, n))
        .fold(0.0, f64::max)
}

pub fn grad_check<F>(f: F, x: &[f64], analytic: &[f64], h: f64) -> f64
where
    F: FnMut(&[f64]) -> f64,
{
    max_relative_error(analytic, &central_difference(f, x, h))
}

/// Worst discrepancy for one parameter of a model.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamCheck {
    pub name: String,
    pub max_rel_error: f64,
    pub max_abs_grad: f64,
}

/// Compares the gradients currently stored in `model` against central
/// differences of `loss`, perturbing every parameter entry in turn.
///
/// The caller must have run one forward/backward pass producing the
/// stored gradients of exactly `loss`.
pub fn check_model<M, F>(model: &mut M, mut loss: F, h: f64) -> Vec<ParamCheck>
where
    M: Parameters,
    F: FnMut(&M) -> f64,
{
    let mut analytic: Vec<(String, Vec<f64>)> = Vec::new();
    model.visit(&mut |name, p| analytic.push((String::from(name), p.grad.as_slice().to_vec())));

    let mut out = Vec::with_capacity(analytic.len());
    for (index, (name, grads)) in analytic.iter().enumerate() {
        let mut worst = 0.0f64;
        for k in 0..grads.len() {
            nudge(model, index, k, h);
            let up = loss(model);
            nudge(model, index, k, -2.0 * h);
            let down = loss(model);
            nudge(model, index, k, h);
            let numeric = (up - down) / (2.0 * h);
            worst = worst.max(relative_error(grads[k], numeric));
        }
        out.push(ParamCheck {
            name: name.clone(),
            max_rel_error: worst,
            max_abs_grad: grads.iter().fold(0.0, |m, g| m.max(g.abs())),
        });
    }
    out
}

fn nudge<M: Parameters>(model: &mut M, index: usize, k: usize, delta: f64) {
    let mut i = 0;
    model.visit_mut(&mut |_, p: &mut Parameter| {
        if i == index {
            p.value.as_mut_slice()[k] += delta;
        }
        i += 1;
    });
}
