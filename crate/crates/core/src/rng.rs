//! Counter-keyed random streams.
//!
//! Every sampled object (batch row, direction, restart, sub-batch) gets its
//! own ChaCha stream addressed by `(seed, stream index)`. Streams are
//! independent of how many objects are generated and of the order in which
//! worker threads touch them, which is what makes parallel generation
//! reproducible bit-for-bit.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// RNG for stream `stream` of the generator family keyed by `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Derives a sub-seed for a named stage so that nested components (e.g. the
/// power-iteration start matrix inside an experiment) do not share streams
/// with their parent.
pub fn derive_seed(seed: u64, stage: u64) -> u64 {
    // splitmix64 step over (seed ^ stage-tag)
    let mut z = seed ^ stage.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
