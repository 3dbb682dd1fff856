//! Roulette-wheel selection.

use rand::Rng;

use crate::error::{Error, Result};

/// Picks an index with probability proportional to its weight, using a
/// single uniform draw. Falls back to a uniform pick when every weight is
/// zero.
pub fn roulette<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> Result<usize> {
    if weights.is_empty() {
        return Err(Error::config("cannot select from an empty candidate set"));
    }
    Ok(spin(weights, &mut Vec::new(), rng))
}

const CHUNK: usize = 8;

/// Roulette selection over a non-empty slice. Sums are taken per chunk of
/// eight weights with independent partial sums, so long candidate lists do
/// not serialise on a single accumulator; `chunk_sums` is scratch space.
#[inline]
pub(crate) fn spin<R: Rng + ?Sized>(weights: &[f64], chunk_sums: &mut Vec<f64>, rng: &mut R) -> usize {
    debug_assert!(!weights.is_empty());
    chunk_sums.clear();
    let mut chunks = weights.chunks_exact(CHUNK);
    for c in &mut chunks {
        chunk_sums.push(((c[0] + c[1]) + (c[2] + c[3])) + ((c[4] + c[5]) + (c[6] + c[7])));
    }
    let rest = chunks.remainder();
    if !rest.is_empty() {
        chunk_sums.push(rest.iter().sum());
    }
    let mut acc = [0.0; 4];
    let mut quads = chunk_sums.chunks_exact(4);
    for q in &mut quads {
        for (a, v) in acc.iter_mut().zip(q) {
            *a += v;
        }
    }
    let total = (acc[0] + acc[1]) + (acc[2] + acc[3]) + quads.remainder().iter().sum::<f64>();

    if !(total > 0.0 && total.is_finite()) {
        return rng.random_range(0..weights.len());
    }
    let mut target = rng.random::<f64>() * total;
    let mut last_positive = 0;
    for (b, &s) in chunk_sums.iter().enumerate() {
        let base = b * CHUNK;
        if target < s {
            let end = (base + CHUNK).min(weights.len());
            for (i, &w) in weights[base..end].iter().enumerate() {
                if w > 0.0 {
                    if target < w {
                        return base + i;
                    }
                    target -= w;
                    last_positive = base + i;
                }
            }
            // chunk total and sequential subtraction rounded differently
            return last_positive;
        }
        target -= s;
        if s > 0.0 {
            if let Some(i) = weights[base..(base + CHUNK).min(weights.len())].iter().rposition(|&w| w > 0.0) {
                last_positive = base + i;
            }
        }
    }
    last_positive
}
