//! Counter-based seed splitting.
//!
//! Every random stream in a run is addressed by a path of integers below the
//! root seed, e.g. `[STREAM_STAGE, t, j]` for the j-th digit at stage t. The
//! child seed is a SplitMix64 mix of the parent seed and the path element, so
//! streams are independent of evaluation order and of thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream used to draw the shared sample.
pub const STREAM_SAMPLE: u64 = 0;
/// Stream used by the weak learner at each boosting stage.
pub const STREAM_STAGE: u64 = 1;
/// Stream used to generate sweep instances.
pub const STREAM_INSTANCE: u64 = 2;
/// Stream used for sweep runs.
pub const STREAM_RUN: u64 = 3;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Child seed for one path element.
pub fn derive_seed(parent: u64, index: u64) -> u64 {
    splitmix64(splitmix64(parent) ^ index.wrapping_mul(GOLDEN))
}

/// Child seed for a whole path.
pub fn derive_path(root: u64, path: &[u64]) -> u64 {
    path.iter().fold(root, |seed, &i| derive_seed(seed, i))
}

pub fn rng_from(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
