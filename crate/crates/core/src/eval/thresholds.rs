use alloc::vec::Vec;

use super::metrics::f1_from_counts;
use super::{check_shapes, LabelMatrix};
use crate::error::{Error, Result};
use crate::tensor::Matrix;

/// One decision threshold per type; a type is assigned when its score is
/// strictly greater than the threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdVector(Vec<f64>);

impl ThresholdVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::Invalid(alloc::format!("threshold {v} outside [0, 1]")));
        }
        Ok(ThresholdVector(values))
    }

    pub fn uniform(num_types: usize, value: f64) -> Result<Self> {
        Self::new(alloc::vec![value; num_types])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn get(&self, t: usize) -> f64 {
        self.0[t]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TunedThresholds {
    pub thresholds: ThresholdVector,
    /// Types without a single positive dev entity; pinned to 1.0.
    pub no_positive_types: Vec<usize>,
}

/// Candidate cut points for one column: 0, midpoints between consecutive
/// distinct scores, and 1, ascending.
pub(crate) fn candidates(column: &[f64]) -> Vec<f64> {
    let mut sorted: Vec<f64> = column.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    let mut out = Vec::with_capacity(sorted.len() + 1);
    out.push(0.0);
    out.extend(sorted.windows(2).map(|w| 0.5 * (w[0] + w[1])));
    out.push(1.0);
    out.sort_by(f64::total_cmp);
    out.dedup();
    out
}

fn tune_column(column: &[f64], labels: &[bool]) -> f64 {
    let mut pairs: Vec<(f64, bool)> = column.iter().copied().zip(labels.iter().copied()).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total_pos = labels.iter().filter(|&&b| b).count();
    // positives among the entries at index >= i
    let mut pos_suffix = alloc::vec![0usize; pairs.len() + 1];
    for i in (0..pairs.len()).rev() {
        pos_suffix[i] = pos_suffix[i + 1] + pairs[i].1 as usize;
    }
    let mut best = (f64::NEG_INFINITY, 1.0);
    for c in candidates(column) {
        let first = pairs.partition_point(|p| p.0 <= c);
        let assigned = pairs.len() - first;
        let tp = pos_suffix[first];
        let f1 = f1_from_counts(tp, assigned - tp, total_pos - tp);
        if f1 > best.0 {
            best = (f1, c);
        }
    }
    best.1
}

/// Per-type threshold maximizing that type's F1 on the dev entities.
pub fn tune_thresholds(scores: &Matrix, gold: &LabelMatrix) -> Result<TunedThresholds> {
    check_shapes(scores.shape(), gold)?;
    let mut values = Vec::with_capacity(gold.cols());
    let mut no_positive_types = Vec::new();
    for t in 0..gold.cols() {
        let labels: Vec<bool> = (0..gold.rows()).map(|e| gold.get(e, t)).collect();
        if !labels.contains(&true) {
            no_positive_types.push(t);
            values.push(1.0);
            continue;
        }
        values.push(tune_column(&scores.column_values(t), &labels));
    }
    Ok(TunedThresholds { thresholds: ThresholdVector::new(values)?, no_positive_types })
}
