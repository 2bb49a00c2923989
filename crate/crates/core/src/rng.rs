//! Named, reproducible random substreams.
//!
//! A substream is a ChaCha8 generator keyed by the 64-bit seed with its
//! stream id set to a stable hash of a label. ChaCha output is specified
//! bit-for-bit, so the same `(seed, label)` gives the same numbers on every
//! platform and regardless of which thread draws them.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// 64-bit FNV-1a. Fixed here so stream ids never depend on std's hasher.
fn fnv1a(bytes: &[u8]) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    bytes
        .iter()
        .fold(OFFSET, |h, &b| (h ^ u64::from(b)).wrapping_mul(PRIME))
}

/// Generator for the substream `label` of `seed`.
pub fn substream(seed: u64, label: &str) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(fnv1a(label.as_bytes()));
    rng
}
