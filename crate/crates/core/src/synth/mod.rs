//! Seeded synthetic corpora in the on-disk formats of [`crate::data`].
//!
//! Every entity draws from its own ChaCha8 generator whose seed is derived
//! from the parent seed and a stream tag with SplitMix64, so results do not
//! depend on generation order or thread count.

mod cohort;
mod stream;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

pub use cohort::{gen_cohort, gen_cohort_streaming, CohortConfig, GroundTruth, ParticipantTruth};
pub use stream::{gen_stream, LabeledStream, StreamConfig};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid synthetic configuration: {0}")]
    BadConfig(String),
    #[error(transparent)]
    Data(#[from] crate::data::DataError),
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of child stream `tag` under `parent`.
pub fn child_seed(parent: u64, tag: u64) -> u64 {
    splitmix64(parent ^ splitmix64(tag))
}

pub(crate) fn rng_for(parent: u64, tag: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(child_seed(parent, tag))
}

/// Stored feature precision; keeps files compact and exact on reload.
pub(crate) fn round4(x: f64) -> f64 {
    (x * 1e4).round() / 1e4
}
