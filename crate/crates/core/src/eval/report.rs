use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use super::metrics::{self, label_p_at_k_over, map_over, type_macro_f1_over};
use super::{check_shapes, select_matrix_rows, LabelMatrix, ThresholdVector};
use crate::error::Result;
use crate::tensor::Matrix;

/// The full metric suite for one slice of entities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricSet {
    pub p_at_1: f64,
    pub bep: f64,
    pub accuracy: f64,
    pub micro_f1: f64,
    pub entity_macro_f1: f64,
    pub map: f64,
    pub p_at_k: f64,
    pub type_macro_f1: f64,
}

impl MetricSet {
    /// Stable (key, value) listing.
    pub fn entries(&self) -> [(&'static str, f64); 8] {
        [
            ("p_at_1", self.p_at_1),
            ("bep", self.bep),
            ("accuracy", self.accuracy),
            ("micro_f1", self.micro_f1),
            ("entity_macro_f1", self.entity_macro_f1),
            ("map", self.map),
            ("p_at_k", self.p_at_k),
            ("type_macro_f1", self.type_macro_f1),
        ]
    }
}

/// Every metric over the given scores, thresholds applied with `>`.
pub fn evaluate_all(scores: &Matrix, gold: &LabelMatrix, thresholds: &ThresholdVector, k: usize) -> Result<MetricSet> {
    check_shapes(scores.shape(), gold)?;
    let assigned = LabelMatrix::assign(scores, thresholds)?;
    Ok(MetricSet {
        p_at_1: metrics::p_at_1(scores, gold)?,
        bep: metrics::bep(scores, gold)?,
        accuracy: metrics::strict_accuracy(&assigned, gold)?,
        micro_f1: metrics::micro_f1(&assigned, gold)?,
        entity_macro_f1: metrics::entity_macro_f1(&assigned, gold)?,
        map: metrics::map(scores, gold)?,
        p_at_k: metrics::label_p_at_k(scores, gold, k)?,
        type_macro_f1: metrics::type_macro_f1(&assigned, gold)?,
    })
}

/// Label-based metrics restricted to a subset of types (all entities).
pub fn evaluate_types(
    scores: &Matrix,
    gold: &LabelMatrix,
    thresholds: &ThresholdVector,
    k: usize,
    types: &[usize],
) -> Result<BTreeMap<&'static str, f64>> {
    let assigned = LabelMatrix::assign(scores, thresholds)?;
    let mut out = BTreeMap::new();
    out.insert("map", map_over(scores, gold, types)?);
    out.insert("p_at_k", label_p_at_k_over(scores, gold, k, types)?);
    out.insert("type_macro_f1", type_macro_f1_over(&assigned, gold, types)?);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SliceReport {
    pub name: String,
    pub size: usize,
    pub metrics: BTreeMap<&'static str, f64>,
}

/// Metrics for named entity slices and named type slices.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MetricsReport {
    pub k: usize,
    pub entity_slices: Vec<SliceReport>,
    pub type_slices: Vec<SliceReport>,
    /// Types pinned to a 1.0 threshold because dev had no positives.
    pub warnings: Vec<String>,
}

impl MetricsReport {
    pub fn new(k: usize) -> Self {
        MetricsReport { k, ..Default::default() }
    }

    /// Adds an entity slice; empty slices are recorded with size 0 and no metrics.
    pub fn add_entity_slice(
        &mut self,
        name: &str,
        rows: &[usize],
        scores: &Matrix,
        gold: &LabelMatrix,
        thresholds: &ThresholdVector,
    ) -> Result<()> {
        let mut metrics = BTreeMap::new();
        if !rows.is_empty() {
            let s = select_matrix_rows(scores, rows);
            let g = gold.select_rows(rows);
            metrics.extend(evaluate_all(&s, &g, thresholds, self.k)?.entries());
        }
        self.entity_slices.push(SliceReport { name: String::from(name), size: rows.len(), metrics });
        Ok(())
    }

    pub fn add_type_slice(
        &mut self,
        name: &str,
        types: &[usize],
        scores: &Matrix,
        gold: &LabelMatrix,
        thresholds: &ThresholdVector,
    ) -> Result<()> {
        let metrics = evaluate_types(scores, gold, thresholds, self.k, types)?;
        self.type_slices.push(SliceReport { name: String::from(name), size: types.len(), metrics });
        Ok(())
    }

    pub fn entity_slice(&self, name: &str) -> Option<&SliceReport> {
        self.entity_slices.iter().find(|s| s.name == name)
    }

    pub fn type_slice(&self, name: &str) -> Option<&SliceReport> {
        self.type_slices.iter().find(|s| s.name == name)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn perfect_scores_give_all_ones() {
        let scores = Matrix::from_rows(&[&[1.0, 0.0, 1.0], &[0.0, 1.0, 0.0]]).unwrap();
        let gold = LabelMatrix::from_sets(3, &[vec![0, 2], vec![1]]).unwrap();
        let th = ThresholdVector::uniform(3, 0.5).unwrap();
        let m = evaluate_all(&scores, &gold, &th, 1).unwrap();
        for (k, v) in m.entries() {
            assert_eq!(v, 1.0, "{k}");
        }
        let mut r = MetricsReport::new(1);
        r.add_entity_slice("all", &[0, 1], &scores, &gold, &th).unwrap();
        r.add_entity_slice("tail", &[], &scores, &gold, &th).unwrap();
        assert_eq!(r.entity_slice("all").unwrap().metrics["micro_f1"], 1.0);
        assert!(r.entity_slice("tail").unwrap().metrics.is_empty());
    }
}
