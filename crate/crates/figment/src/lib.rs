pub mod checkpoint;
pub mod commands;
pub mod config;
pub mod error;
pub mod formats;
pub mod pipeline;

pub use checkpoint::Checkpoint;
pub use config::RunConfig;
pub use error::{Error, Result};
