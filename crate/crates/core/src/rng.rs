//! Reproducible random streams.
//!
//! Every (seed, ant, iteration) triple gets its own ChaCha stream, so the
//! draws an ant makes do not depend on how work is scheduled over threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SolverRng = ChaCha8Rng;

/// Separates streams of different consumers sharing one seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub(crate) enum Purpose {
    Construct = 1,
    Partial = 2,
    Generate = 3,
    Baseline = 4,
}

pub(crate) fn stream(seed: u64, purpose: Purpose, ant: u64, iteration: u64) -> SolverRng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&(purpose as u64).to_le_bytes());
    key[16..24].copy_from_slice(&ant.to_le_bytes());
    key[24..].copy_from_slice(&iteration.to_le_bytes());
    ChaCha8Rng::from_seed(key)
}
