//! Seeded random streams.
//!
//! Every stochastic routine takes an explicit `u64` seed and builds a
//! ChaCha8 stream from it, so outputs are reproducible bit for bit.
//! Independent sub-streams are derived with [`split_seed`]:
//!
//! ```text
//! h = splitmix64(master)
//! for byte in label: h = splitmix64(h ^ byte)
//! seed = splitmix64(h ^ splitmix64(index))
//! ```

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub fn seeded(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of the `index`-th stream labelled `label` under `master`.
pub fn split_seed(master: u64, label: &str, index: u64) -> u64 {
    let mut h = splitmix64(master);
    for b in label.bytes() {
        h = splitmix64(h ^ u64::from(b));
    }
    splitmix64(h ^ splitmix64(index))
}
