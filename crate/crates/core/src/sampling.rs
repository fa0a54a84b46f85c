//! Reproducible random sampling.
//!
//! The seed comes from the `SUSY_CDR_SEED` environment variable when it is
//! set to an unsigned integer, otherwise [`DEFAULT_SEED`].

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const SEED_ENV: &str = "SUSY_CDR_SEED";
pub const DEFAULT_SEED: u64 = 20_231_107;

pub fn seed() -> u64 {
    std::env::var(SEED_ENV).ok().and_then(|s| s.trim().parse().ok()).unwrap_or(DEFAULT_SEED)
}

pub fn rng() -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed())
}

pub fn rng_from(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
