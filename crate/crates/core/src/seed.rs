//! Seed derivation and per-site random streams.
//!
//! Every random quantity is addressed by `(seed, stream)`: a ChaCha8 key is
//! derived from the seed and the stream id selects an independent ChaCha
//! stream, so draws do not depend on iteration order or thread layout.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::graph::SiteIndex;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Child seed for `(tag, index)` under `master`. Used for replica seeds and
/// for the sub-experiments of a run.
pub fn derive_seed(master: u64, tag: u64, index: u64) -> u64 {
    let a = mix64(master.wrapping_add(GOLDEN));
    let b = mix64(a ^ tag.wrapping_mul(GOLDEN).rotate_left(17));
    mix64(b ^ index.wrapping_add(1).wrapping_mul(0xD6E8_FEB8_6659_FD93))
}

/// Stream id of a site: the top bit separates edges from vertices.
#[inline]
pub fn site_stream(site: SiteIndex) -> u64 {
    match site {
        SiteIndex::Vertex(i) => i as u64,
        SiteIndex::Edge(i) => (1 << 63) | i as u64,
    }
}

/// Generator for one addressed stream.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Generator dedicated to one site under `seed`.
pub fn site_rng(seed: u64, site: SiteIndex) -> ChaCha8Rng {
    stream_rng(seed, site_stream(site))
}

/// Seed for runs that did not specify one; recorded in run manifests.
pub fn entropy_seed() -> u64 {
    rand::random()
}
