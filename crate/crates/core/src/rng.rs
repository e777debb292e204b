//! Deterministic seed derivation and random streams.
//!
//! Every stochastic kernel in the library consumes an explicit `u64` seed and
//! derives sub-seeds for its internal streams with [`seed_derive`]. The
//! scheme is counter-based: a path gets `seed_derive(master, path_id)`, a
//! coordinate stream inside a path gets `seed_derive(path_seed, coord_id)`,
//! and so on. For a fixed parent seed the map `id -> seed_derive(seed, id)`
//! is injective (it composes a bijective mix with an XOR), so derived streams
//! never collide.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Derives a child seed from a parent seed and a stream id.
///
/// The mix is the SplitMix64 finalizer applied to
/// `seed XOR rotate_left(stream_id, 32)` plus the golden-ratio increment.
/// It is a fixed, platform-independent function.
pub fn seed_derive(seed: u64, stream_id: u64) -> u64 {
    let mut z = (seed ^ stream_id.rotate_left(32)).wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// The stream cipher backing all random draws.
pub type Stream = ChaCha8Rng;

/// Creates the random stream for a given derived seed.
pub fn stream(seed: u64) -> Stream {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Creates the stream for child `stream_id` of `seed`.
pub fn substream(seed: u64, stream_id: u64) -> Stream {
    stream(seed_derive(seed, stream_id))
}

/// One standard normal draw.
#[inline]
pub fn normal(rng: &mut Stream) -> f64 {
    rng.sample(StandardNormal)
}

/// One uniform draw on `[lo, hi)`.
#[inline]
pub fn uniform(rng: &mut Stream, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}
