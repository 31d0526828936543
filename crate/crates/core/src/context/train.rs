use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;

use super::{Aggregation, ContextModel, EncodedBag};
use crate::error::{Error, Result};
use crate::eval::LabelMatrix;
use crate::scores::TypeScoreMatrix;
use crate::tensor::{Matrix, Parameters};
use crate::train::{fit, minibatches, tuned_micro_f1, Schedule, TrainLog};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CmTrainConfig {
    /// `batch_size` counts contexts under distant supervision.
    pub schedule: Schedule,
    /// Bags per minibatch in the multi-instance modes.
    pub bags_per_batch: usize,
    /// Larger training bags are subsampled to this many contexts each epoch.
    pub bag_cap: usize,
}

impl Default for CmTrainConfig {
    fn default() -> Self {
        CmTrainConfig { schedule: Schedule::default(), bags_per_batch: 10, bag_cap: 100 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EpochStats {
    pub mean_loss: f64,
    /// Terms of the loss: contexts for DS, bags otherwise.
    pub loss_units: usize,
    pub updates: usize,
}

fn capped<'a, R: Rng + ?Sized>(bag: &'a EncodedBag, cap: usize, rng: &mut R) -> Vec<&'a [usize]> {
    if cap == 0 || bag.contexts.len() <= cap {
        return bag.contexts.iter().map(Vec::as_slice).collect();
    }
    let mut picks = rand::seq::index::sample(rng, bag.contexts.len(), cap).into_vec();
    picks.sort_unstable();
    picks.into_iter().map(|i| bag.contexts[i].as_slice()).collect()
}

/// One pass over the training bags under the model's training aggregation.
pub fn cm_train_epoch<R: Rng + ?Sized>(
    model: &mut ContextModel,
    bags: &[EncodedBag],
    cfg: &CmTrainConfig,
    rng: &mut R,
) -> Result<EpochStats> {
    let agg = model.mode().train_aggregation();
    let opt = cfg.schedule.optimizer;
    let mut stats = EpochStats::default();
    let mut total = 0.0;
    if agg == Aggregation::PerContext {
        let units: Vec<(usize, usize)> =
            bags.iter().enumerate().flat_map(|(b, bag)| (0..bag.contexts.len()).map(move |c| (b, c))).collect();
        for batch in minibatches(units.len(), cfg.schedule.batch_size, rng) {
            for &k in &batch {
                let (b, c) = units[k];
                let ctx = [bags[b].contexts[c].as_slice()];
                total += model.loss_and_backward(&ctx, &bags[b].gold, agg)?;
            }
            opt.step(model, batch.len())?;
            stats.loss_units += batch.len();
            stats.updates += 1;
        }
    } else {
        for batch in minibatches(bags.len(), cfg.bags_per_batch, rng) {
            for &b in &batch {
                let contexts = capped(&bags[b], cfg.bag_cap, rng);
                total += model.loss_and_backward(&contexts, &bags[b].gold, agg)?;
            }
            opt.step(model, batch.len())?;
            stats.loss_units += batch.len();
            stats.updates += 1;
        }
    }
    stats.mean_loss = total / stats.loss_units.max(1) as f64;
    Ok(stats)
}

/// Prediction-aggregated probabilities, one row per bag.
pub fn cm_scores(model: &ContextModel, bags: &[EncodedBag]) -> Result<Matrix> {
    let t = model.num_types();
    let mut data = Vec::with_capacity(bags.len() * t);
    for bag in bags {
        let refs: Vec<&[usize]> = bag.contexts.iter().map(Vec::as_slice).collect();
        data.extend(model.predict(&refs)?);
    }
    Matrix::from_vec(bags.len(), t, data)
}

pub fn cm_predict(model: &ContextModel, bags: &[EncodedBag], types: Vec<String>) -> Result<TypeScoreMatrix> {
    let entities = bags.iter().map(|b| b.entity.clone()).collect();
    TypeScoreMatrix::new(entities, types, cm_scores(model, bags)?)
}

/// Trains with AdaGrad and keeps the epoch with the best threshold-tuned
/// dev micro F1 of the prediction aggregation.
pub fn cm_train<R: Rng + ?Sized>(
    model: ContextModel,
    train: &[EncodedBag],
    dev: &[EncodedBag],
    cfg: &CmTrainConfig,
    rng: &mut R,
) -> Result<(ContextModel, TrainLog)> {
    if train.iter().all(|b| b.contexts.is_empty()) {
        return Err(Error::Empty("context model training set"));
    }
    if dev.is_empty() {
        return Err(Error::Empty("context model dev set"));
    }
    let dev_gold = LabelMatrix::from_sets(model.num_types(), &dev.iter().map(|b| b.gold.as_slice()).collect::<Vec<_>>())?;
    let mut model = model;
    model.zero_grad();
    fit(
        model,
        &cfg.schedule,
        |m, _| Ok(cm_train_epoch(m, train, cfg, rng)?.mean_loss),
        |m| tuned_micro_f1(&cm_scores(m, dev)?, &dev_gold),
    )
}
