use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<String>,
    pub dev: Vec<String>,
    pub test: Vec<String>,
}

/// Random train/dev/test partition of entity ids (no stratification).
pub fn split_entities<R: Rng + ?Sized>(ids: &[String], ratios: [f64; 3], rng: &mut R) -> Result<Split> {
    if ratios.iter().any(|r| !(0.0..=1.0).contains(r)) || (ratios.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::Config(alloc::format!("split ratios {ratios:?} must be in [0,1] and sum to 1")));
    }
    let mut shuffled: Vec<String> = ids.to_vec();
    shuffled.sort();
    shuffled.shuffle(rng);
    let n = shuffled.len() as f64;
    let n_train = libm::round(n * ratios[0]) as usize;
    let n_dev = (libm::round(n * ratios[1]) as usize).min(shuffled.len() - n_train);
    let test = shuffled.split_off(n_train + n_dev);
    let dev = shuffled.split_off(n_train);
    Ok(Split { train: shuffled, dev, test })
}
