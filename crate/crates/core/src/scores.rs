use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::tensor::Matrix;

/// Entities × types probabilities in `[0, 1]`; the exchange format between
/// models, the joint combiner and evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct TypeScoreMatrix {
    entities: Vec<String>,
    types: Vec<String>,
    scores: Matrix,
}

impl TypeScoreMatrix {
    pub fn new(entities: Vec<String>, types: Vec<String>, scores: Matrix) -> Result<Self> {
        if scores.shape() != (entities.len(), types.len()) {
            return Err(Error::Shape {
                op: "TypeScoreMatrix",
                left: (entities.len(), types.len()),
                right: scores.shape(),
            });
        }
        if let Some(v) = scores.as_slice().iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::Invalid(alloc::format!("score {v} outside [0, 1]")));
        }
        Ok(TypeScoreMatrix { entities, types, scores })
    }

    pub fn from_rows(entities: Vec<String>, types: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self> {
        let cols = types.len();
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(Error::Shape { op: "TypeScoreMatrix::from_rows", left: (1, cols), right: (1, r.len()) });
            }
            data.extend(r);
        }
        let m = Matrix::from_vec(entities.len(), cols, data)?;
        TypeScoreMatrix::new(entities, types, m)
    }

    pub fn entities(&self) -> &[String] {
        &self.entities
    }

    pub fn types(&self) -> &[String] {
        &self.types
    }

    pub fn scores(&self) -> &Matrix {
        &self.scores
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.scores.row(i)
    }

    pub fn get(&self, entity: usize, t: usize) -> f64 {
        self.scores.get(entity, t)
    }

    pub fn num_entities(&self) -> usize {
        self.entities.len()
    }

    pub fn num_types(&self) -> usize {
        self.types.len()
    }

    /// Rows for `ids`, in that order.
    pub fn select(&self, ids: &[String]) -> Result<TypeScoreMatrix> {
        let mut data = Vec::with_capacity(ids.len() * self.types.len());
        for id in ids {
            let i = self
                .entities
                .iter()
                .position(|e| e == id)
                .ok_or_else(|| Error::UnknownEntity(id.clone()))?;
            data.extend_from_slice(self.row(i));
        }
        TypeScoreMatrix::new(ids.to_vec(), self.types.clone(), Matrix::from_vec(ids.len(), self.types.len(), data)?)
    }
}
