//! Seedable, portable random streams.
//!
//! All randomness in the crate flows through ChaCha12 streams derived from a
//! single `u64` seed. ChaCha's 64-bit stream id gives independent substreams
//! under one seed, which we use to make structural choices reproducible at a
//! fine grain: per-task draws use one substream per task, so generating a
//! longer dataset with the same seed leaves the draws of earlier tasks
//! untouched, and parallel loops can hand each unit its own stream without
//! any cross-thread coordination.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// Stream id reserved for draws that are global to a dataset (e.g. the
/// annotator skill pool). Task substreams start right after it.
pub const GLOBAL_STREAM: u64 = 0;

/// Returns the generator for substream `stream` under `seed`, positioned at
/// the stream start.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Returns the dedicated substream for task `task` (task substream ids are
/// offset by one past [`GLOBAL_STREAM`]).
pub fn task_rng(seed: u64, task: usize) -> ChaCha12Rng {
    stream_rng(seed, task as u64 + 1)
}

/// Derives an independent `u64` seed for a sub-experiment, mixing a caller
/// `seed` with a purpose `tag` and a unit `index` through splitmix64-style
/// avalanching. Used to give every repetition/resample of an experiment its
/// own top-level seed while staying reproducible.
pub fn derive_seed(seed: u64, tag: u64, index: u64) -> u64 {
    let mut z = seed
        ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ index.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
