//! Deterministic random streams.
//!
//! Every stochastic draw is made from a stream keyed by the run seed plus a
//! tuple of indices, so any subset of replicates (or arms) reproduces exactly
//! regardless of the order or thread in which it runs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stream for `(seed, keys...)`.
pub fn stream(seed: u64, keys: &[u64]) -> ChaCha8Rng {
    let mut h = splitmix64(seed);
    for &k in keys {
        h = splitmix64(h ^ k);
    }
    ChaCha8Rng::seed_from_u64(h)
}

/// Number of successes in `n` Bernoulli(`p`) trials.
pub fn binomial_count<R: Rng>(rng: &mut R, n: u32, p: f64) -> u32 {
    (0..n).filter(|_| rng.random::<f64>() < p).count() as u32
}
