//! Seed derivation for every RNG stream in the toolkit.
//!
//! All stochastic operations draw from [`ChaCha8Rng`] streams whose seeds are
//! derived from a single base seed via FNV-1a over `(base, tag, index)`.
//! The derivation is pure byte arithmetic, so a run is reproducible across
//! platforms and process invocations.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// Derive a sub-seed for the stream identified by `tag` and `index`.
pub fn derive(base: u64, tag: &str, index: u64) -> u64 {
    let mut h = FNV_OFFSET;
    for b in base
        .to_le_bytes()
        .iter()
        .chain(tag.as_bytes())
        .chain(index.to_le_bytes().iter())
    {
        h ^= u64::from(*b);
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

/// The toolkit's RNG: ChaCha with 8 rounds, seeded from a `u64`.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
