//! Epoch loop shared by the global and context models: minibatch order,
//! dev-based model selection and early stopping.

use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::eval::{micro_f1, tune_thresholds, LabelMatrix};
use crate::tensor::{AdaGrad, Matrix};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Schedule {
    pub epochs: usize,
    /// Stop after this many epochs without a dev improvement; 0 disables.
    pub patience: usize,
    pub batch_size: usize,
    pub optimizer: AdaGrad,
}

impl Default for Schedule {
    fn default() -> Self {
        Schedule { epochs: 100, patience: 10, batch_size: 100, optimizer: AdaGrad::default() }
    }
}

impl Schedule {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::Config(alloc::string::String::from("epochs and batch size must be positive")));
        }
        if !(self.optimizer.learning_rate > 0.0) {
            return Err(Error::Config(alloc::string::String::from("learning rate must be positive")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean per-unit training loss.
    pub loss: f64,
    pub dev_micro_f1: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainLog {
    pub epochs: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub best_dev_micro_f1: f64,
}

/// Dev micro F1 after tuning per-type thresholds on the same dev scores.
pub fn tuned_micro_f1(scores: &Matrix, gold: &LabelMatrix) -> Result<f64> {
    let tuned = tune_thresholds(scores, gold)?;
    let assigned = LabelMatrix::assign(scores, &tuned.thresholds)?;
    micro_f1(&assigned, gold)
}

/// Shuffled minibatches of `0..n`.
pub fn minibatches<R: Rng + ?Sized>(n: usize, batch: usize, rng: &mut R) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    order.chunks(batch.max(1)).map(|c| c.to_vec()).collect()
}

/// Runs up to `schedule.epochs` epochs and returns the model snapshot with
/// the best dev score (earliest on ties).
///
/// `epoch` trains one pass and returns the mean loss; `dev` scores the
/// current model.
pub fn fit<M, E, D>(model: M, schedule: &Schedule, mut epoch: E, mut dev: D) -> Result<(M, TrainLog)>
where
    M: Clone,
    E: FnMut(&mut M, usize) -> Result<f64>,
    D: FnMut(&M) -> Result<f64>,
{
    schedule.validate()?;
    let mut current = model;
    let mut best = current.clone();
    let mut log = TrainLog { best_dev_micro_f1: f64::NEG_INFINITY, ..Default::default() };
    let mut stale = 0;
    for e in 1..=schedule.epochs {
        let loss = epoch(&mut current, e)?;
        if !loss.is_finite() {
            return Err(Error::Invalid(alloc::format!("training loss diverged at epoch {e}")));
        }
        let score = dev(&current)?;
        log.epochs.push(EpochRecord { epoch: e, loss, dev_micro_f1: score });
        if score > log.best_dev_micro_f1 {
            log.best_dev_micro_f1 = score;
            log.best_epoch = e;
            best = current.clone();
            stale = 0;
        } else {
            stale += 1;
            if schedule.patience > 0 && stale >= schedule.patience {
                break;
            }
        }
    }
    Ok((best, log))
}
