//! Seed derivation. Every stage draws from its own ChaCha stream keyed by
//! `(root seed, stage name)`, so adding a stage never perturbs another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StageRng = ChaCha8Rng;

/// FNV-1a over the stage label.
fn label_hash(label: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

pub fn stream(root: u64, stage: &str) -> StageRng {
    let mut seed = [0u8; 32];
    seed[..8].copy_from_slice(&root.to_le_bytes());
    seed[8..16].copy_from_slice(&label_hash(stage).to_le_bytes());
    seed[16..24].copy_from_slice(&(root ^ 0x9e37_79b9_7f4a_7c15).to_le_bytes());
    ChaCha8Rng::from_seed(seed)
}
