use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::tensor::Matrix;

/// Immutable token → vector map (words, entities or types).
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    tokens: Vec<String>,
    index: BTreeMap<String, usize>,
    vectors: Matrix,
}

impl EmbeddingTable {
    pub fn new(dim: usize, rows: Vec<(String, Vec<f64>)>) -> Result<Self> {
        let mut tokens = Vec::with_capacity(rows.len());
        let mut index = BTreeMap::new();
        let mut data = Vec::with_capacity(rows.len() * dim);
        for (token, v) in rows {
            if v.len() != dim {
                return Err(Error::Shape { op: "EmbeddingTable::new", left: (1, dim), right: (1, v.len()) });
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::Invalid(format!("non-finite value in vector of `{token}`")));
            }
            if index.insert(token.clone(), tokens.len()).is_some() {
                return Err(Error::Invalid(format!("duplicate embedding token `{token}`")));
            }
            tokens.push(token);
            data.extend(v);
        }
        let vectors = Matrix::from_vec(tokens.len(), dim, data)?;
        Ok(EmbeddingTable { tokens, index, vectors })
    }

    pub fn dim(&self) -> usize {
        self.vectors.cols()
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn get(&self, token: &str) -> Option<&[f64]> {
        self.index.get(token).map(|&i| self.vectors.row(i))
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.tokens.iter().enumerate().map(|(i, t)| (t.as_str(), self.vectors.row(i)))
    }

    pub fn matrix(&self) -> &Matrix {
        &self.vectors
    }
}
