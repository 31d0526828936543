//! Example-based and label-based multi-label metrics, per-type threshold
//! tuning, and head/tail partitions.

mod metrics;
mod partition;
mod report;
mod thresholds;

pub use metrics::{
    bep, entity_macro_f1, f1_from_counts, label_p_at_k, map, micro_f1, p_at_1, strict_accuracy,
    type_macro_f1,
};
pub use partition::{partition_entities, partition_types, Partition, PartitionThresholds};
pub use report::{evaluate_all, evaluate_types, MetricSet, MetricsReport, SliceReport};
pub use thresholds::{tune_thresholds, ThresholdVector, TunedThresholds};

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::tensor::Matrix;

/// Entities × types membership; used for gold labels and thresholded
/// assignments alike.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMatrix {
    rows: usize,
    cols: usize,
    bits: Vec<bool>,
}

pub type GoldMatrix = LabelMatrix;

impl LabelMatrix {
    pub fn empty(rows: usize, cols: usize) -> Self {
        LabelMatrix { rows, cols, bits: vec![false; rows * cols] }
    }

    pub fn from_sets<S: AsRef<[usize]>>(num_types: usize, sets: &[S]) -> Result<Self> {
        let mut m = LabelMatrix::empty(sets.len(), num_types);
        for (i, s) in sets.iter().enumerate() {
            for &t in s.as_ref() {
                if t >= num_types {
                    return Err(Error::Index { id: t, len: num_types });
                }
                m.set(i, t, true);
            }
        }
        Ok(m)
    }

    /// Assign `t` to `e` iff `score > threshold[t]`.
    pub fn assign(scores: &Matrix, thresholds: &ThresholdVector) -> Result<Self> {
        if thresholds.len() != scores.cols() {
            return Err(Error::Shape { op: "assign", left: scores.shape(), right: (thresholds.len(), 1) });
        }
        let mut m = LabelMatrix::empty(scores.rows(), scores.cols());
        for e in 0..scores.rows() {
            for (t, &th) in thresholds.as_slice().iter().enumerate() {
                m.set(e, t, scores.get(e, t) > th);
            }
        }
        Ok(m)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> bool {
        self.bits[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: bool) {
        self.bits[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[bool] {
        &self.bits[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_count(&self, r: usize) -> usize {
        self.row(r).iter().filter(|&&b| b).count()
    }

    pub fn column_count(&self, c: usize) -> usize {
        (0..self.rows).filter(|&r| self.get(r, c)).count()
    }

    /// Sub-matrix with the given rows, in order.
    pub fn select_rows(&self, rows: &[usize]) -> LabelMatrix {
        let mut bits = Vec::with_capacity(rows.len() * self.cols);
        for &r in rows {
            bits.extend_from_slice(self.row(r));
        }
        LabelMatrix { rows: rows.len(), cols: self.cols, bits }
    }
}

pub(crate) fn check_shapes(scores: (usize, usize), gold: &LabelMatrix) -> Result<()> {
    if scores != (gold.rows(), gold.cols()) {
        return Err(Error::Shape { op: "metric", left: scores, right: (gold.rows(), gold.cols()) });
    }
    Ok(())
}

pub(crate) fn select_matrix_rows(m: &Matrix, rows: &[usize]) -> Matrix {
    let mut data = Vec::with_capacity(rows.len() * m.cols());
    for &r in rows {
        data.extend_from_slice(m.row(r));
    }
    Matrix::from_vec(rows.len(), m.cols(), data).expect("row selection keeps width")
}
