//! Counter-based seed derivation.
//!
//! Every run gets its own seed `derive(master, index)`, so runs can be
//! replayed individually and executed in any order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Random source handed to systems, samplers and policies for one run.
pub type RunRng = ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// One splitmix64 output step.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of the `index`-th run under `master`.
pub fn derive(master: u64, index: u64) -> u64 {
    splitmix64(master ^ splitmix64(index.wrapping_mul(GOLDEN)))
}

/// Independent sub-stream of `master`, e.g. one per procedure stage.
pub fn substream(master: u64, tag: &str) -> u64 {
    tag.bytes()
        .fold(splitmix64(master), |acc, b| splitmix64(acc ^ u64::from(b)))
}

pub fn rng(seed: u64) -> RunRng {
    ChaCha8Rng::seed_from_u64(seed)
}
