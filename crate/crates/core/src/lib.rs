//! Numerical core for corpus-level fine-grained entity typing.
//!
//! Everything here is allocation-only (`alloc`, no `std`): the tensor kernel
//! with hand-written backward passes, corpus transforms, entity
//! representations, the global and context models, score combination,
//! metrics and the synthetic world generator. File formats and the command
//! line live in the companion `figment` crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod context;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod global;
pub mod gradcheck;
pub mod joint;
pub mod repr;
pub mod rng;
pub mod scores;
pub mod synth;
pub mod tensor;
pub mod train;

pub use error::{Error, Result};
pub use scores::TypeScoreMatrix;
pub use tensor::{Matrix, Parameter};
