use alloc::vec::Vec;

use super::{check_shapes, LabelMatrix};
use crate::error::{Error, Result};
use crate::tensor::Matrix;

/// `2PR / (P + R)` written on counts; zero without true positives.
pub fn f1_from_counts(tp: usize, fp: usize, fn_: usize) -> f64 {
    if tp == 0 {
        0.0
    } else {
        2.0 * tp as f64 / (2 * tp + fp + fn_) as f64
    }
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 { 0.0 } else { sum / n as f64 }
}

/// Type indices sorted by descending score, ties to the lower index.
fn ranked_types(row: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..row.len()).collect();
    idx.sort_by(|&a, &b| row[b].total_cmp(&row[a]).then(a.cmp(&b)));
    idx
}

/// Entity indices sorted by descending score for type `t`, ties to the lower index.
fn ranked_entities(scores: &Matrix, t: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.rows()).collect();
    idx.sort_by(|&a, &b| scores.get(b, t).total_cmp(&scores.get(a, t)).then(a.cmp(&b)));
    idx
}

fn require_entities(gold: &LabelMatrix) -> Result<()> {
    if gold.rows() == 0 {
        return Err(Error::Empty("no entities to evaluate"));
    }
    Ok(())
}

/// Share of entities whose top-scored type is a gold type.
pub fn p_at_1(scores: &Matrix, gold: &LabelMatrix) -> Result<f64> {
    check_shapes(scores.shape(), gold)?;
    require_entities(gold)?;
    Ok(mean((0..gold.rows()).map(|e| {
        let top = ranked_types(scores.row(e))[0];
        if gold.get(e, top) { 1.0 } else { 0.0 }
    })))
}

/// Breakeven point: per entity, precision at rank `|gold|` (where precision
/// and recall coincide), averaged over entities.
pub fn bep(scores: &Matrix, gold: &LabelMatrix) -> Result<f64> {
    check_shapes(scores.shape(), gold)?;
    require_entities(gold)?;
    Ok(mean((0..gold.rows()).map(|e| {
        let r = gold.row_count(e);
        if r == 0 {
            return 0.0;
        }
        let hits = ranked_types(scores.row(e)).into_iter().take(r).filter(|&t| gold.get(e, t)).count();
        hits as f64 / r as f64
    })))
}

/// Entity counts as correct iff its assigned set equals its gold set.
pub fn strict_accuracy(assigned: &LabelMatrix, gold: &LabelMatrix) -> Result<f64> {
    check_shapes((assigned.rows(), assigned.cols()), gold)?;
    require_entities(gold)?;
    Ok(mean((0..gold.rows()).map(|e| if assigned.row(e) == gold.row(e) { 1.0 } else { 0.0 })))
}

fn counts(assigned: &LabelMatrix, gold: &LabelMatrix, cells: impl Iterator<Item = (usize, usize)>) -> (usize, usize, usize) {
    let (mut tp, mut fp, mut fn_) = (0, 0, 0);
    for (e, t) in cells {
        match (assigned.get(e, t), gold.get(e, t)) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => {}
        }
    }
    (tp, fp, fn_)
}

/// F1 over all pooled (entity, type) decisions.
pub fn micro_f1(assigned: &LabelMatrix, gold: &LabelMatrix) -> Result<f64> {
    check_shapes((assigned.rows(), assigned.cols()), gold)?;
    let cells = (0..gold.rows()).flat_map(|e| (0..gold.cols()).map(move |t| (e, t)));
    let (tp, fp, fn_) = counts(assigned, gold, cells);
    Ok(f1_from_counts(tp, fp, fn_))
}

/// Per-entity F1 averaged over entities; an entity with nothing assigned scores 0.
pub fn entity_macro_f1(assigned: &LabelMatrix, gold: &LabelMatrix) -> Result<f64> {
    check_shapes((assigned.rows(), assigned.cols()), gold)?;
    require_entities(gold)?;
    Ok(mean((0..gold.rows()).map(|e| {
        let (tp, fp, fn_) = counts(assigned, gold, (0..gold.cols()).map(|t| (e, t)));
        f1_from_counts(tp, fp, fn_)
    })))
}

/// Per-type F1 averaged over types that are gold for or assigned to at
/// least one entity, restricted to `types` when given.
pub fn type_macro_f1(assigned: &LabelMatrix, gold: &LabelMatrix) -> Result<f64> {
    type_macro_f1_over(assigned, gold, &(0..gold.cols()).collect::<Vec<_>>())
}

pub(crate) fn type_macro_f1_over(assigned: &LabelMatrix, gold: &LabelMatrix, types: &[usize]) -> Result<f64> {
    check_shapes((assigned.rows(), assigned.cols()), gold)?;
    Ok(mean(types.iter().filter_map(|&t| {
        let (tp, fp, fn_) = counts(assigned, gold, (0..gold.rows()).map(|e| (e, t)));
        (tp + fp + fn_ > 0).then(|| f1_from_counts(tp, fp, fn_))
    })))
}

/// Mean over types with at least one gold entity of the average precision
/// of the entity ranking.
pub fn map(scores: &Matrix, gold: &LabelMatrix) -> Result<f64> {
    map_over(scores, gold, &(0..gold.cols()).collect::<Vec<_>>())
}

pub(crate) fn map_over(scores: &Matrix, gold: &LabelMatrix, types: &[usize]) -> Result<f64> {
    check_shapes(scores.shape(), gold)?;
    Ok(mean(types.iter().filter(|&&t| gold.column_count(t) > 0).map(|&t| {
        let mut hits = 0usize;
        let mut sum = 0.0;
        for (rank, e) in ranked_entities(scores, t).into_iter().enumerate() {
            if gold.get(e, t) {
                hits += 1;
                sum += hits as f64 / (rank + 1) as f64;
            }
        }
        sum / hits as f64
    })))
}

/// Mean over types with at least one gold entity of precision among the
/// `k` top-ranked entities (always divided by `k`).
pub fn label_p_at_k(scores: &Matrix, gold: &LabelMatrix, k: usize) -> Result<f64> {
    label_p_at_k_over(scores, gold, k, &(0..gold.cols()).collect::<Vec<_>>())
}

pub(crate) fn label_p_at_k_over(scores: &Matrix, gold: &LabelMatrix, k: usize, types: &[usize]) -> Result<f64> {
    check_shapes(scores.shape(), gold)?;
    if k == 0 {
        return Err(Error::Config(alloc::string::String::from("P@k needs k >= 1")));
    }
    Ok(mean(types.iter().filter(|&&t| gold.column_count(t) > 0).map(|&t| {
        let hits = ranked_entities(scores, t).into_iter().take(k).filter(|&e| gold.get(e, t)).count();
        hits as f64 / k as f64
    })))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn scores(rows: &[&[f64]]) -> Matrix {
        Matrix::from_rows(rows).unwrap()
    }

    fn labels(n_types: usize, sets: &[&[usize]]) -> LabelMatrix {
        LabelMatrix::from_sets(n_types, sets).unwrap()
    }

    #[test]
    fn p_at_1_cases() {
        let gold = labels(3, &[&[0], &[2]]);
        assert_eq!(p_at_1(&scores(&[&[0.9, 0.1, 0.0], &[0.1, 0.2, 0.8]]), &gold).unwrap(), 1.0);
        // ties go to the lowest index
        assert_eq!(p_at_1(&scores(&[&[0.5, 0.5, 0.5], &[0.5, 0.5, 0.5]]), &gold).unwrap(), 0.5);
        assert_eq!(p_at_1(&scores(&[&[0.0, 0.3, 0.1]]), &labels(3, &[&[1]])).unwrap(), 1.0);
    }

    #[test]
    fn bep_cases() {
        assert_eq!(bep(&scores(&[&[0.9, 0.8, 0.1]]), &labels(3, &[&[0, 1]])).unwrap(), 1.0);
        assert_eq!(bep(&scores(&[&[0.2, 0.9]]), &labels(2, &[&[0]])).unwrap(), 0.0);
    }

    #[test]
    fn strict_accuracy_extra_type() {
        let gold = labels(3, &[&[0], &[1, 2]]);
        assert_eq!(strict_accuracy(&gold, &gold).unwrap(), 1.0);
        let assigned = labels(3, &[&[0, 1], &[1, 2]]);
        assert_eq!(strict_accuracy(&assigned, &gold).unwrap(), 0.5);
    }

    #[test]
    fn micro_f1_analytic() {
        let gold = labels(2, &[&[0], &[1]]);
        assert_eq!(micro_f1(&gold, &gold).unwrap(), 1.0);
        // TP=1 FP=1 FN=1
        let assigned = labels(2, &[&[0, 1], &[]]);
        assert_eq!(micro_f1(&assigned, &gold).unwrap(), 0.5);
    }

    #[test]
    fn macro_cases() {
        let gold = labels(2, &[&[0], &[1]]);
        let assigned = labels(2, &[&[0], &[0]]);
        assert_eq!(entity_macro_f1(&gold, &gold).unwrap(), 1.0);
        assert_eq!(entity_macro_f1(&assigned, &gold).unwrap(), 0.5);
        assert_eq!(type_macro_f1(&gold, &gold).unwrap(), 1.0);
        // type 0: TP1 FP1 -> 2/3 ; type 1: FN1 -> 0
        assert!((type_macro_f1(&assigned, &gold).unwrap() - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn map_cases() {
        let gold = labels(1, &[&[0], &[0], &[]]);
        assert_eq!(map(&scores(&[&[0.9], &[0.8], &[0.1]]), &gold).unwrap(), 1.0);
        let single = labels(1, &[&[], &[0]]);
        assert_eq!(map(&scores(&[&[0.9], &[0.1]]), &single).unwrap(), 0.5);
    }

    #[test]
    fn p_at_k_bounds() {
        let gold = labels(1, &[&[0], &[]]);
        assert_eq!(label_p_at_k(&scores(&[&[0.9], &[0.1]]), &gold, 1).unwrap(), 1.0);
        let p = label_p_at_k(&scores(&[&[0.9], &[0.1]]), &gold, 5).unwrap();
        assert!(p <= 1.0 / 5.0);
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let gold = labels(2, &[&[0]]);
        assert!(p_at_1(&scores(&[&[0.1, 0.2, 0.3]]), &gold).is_err());
        let _ = vec![0];
    }
}
