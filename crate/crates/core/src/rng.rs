//! Deterministic RNG streams.
//!
//! Every random quantity is drawn from a ChaCha8 stream keyed by the root
//! seed, a purpose key and a replica index, so results do not depend on how
//! replicas are scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use rand_chacha::ChaCha8Rng as StreamRng;

/// Purpose keys. Distinct keys give independent streams for the same replica.
pub mod key {
    pub const CHAIN: u64 = 1;
    pub const RING_TIMES: u64 = 2;
    pub const DIRICHLET: u64 = 3;
    pub const FOREST: u64 = 4;
    pub const FIXPOINT: u64 = 5;
    pub const PERMUTATION: u64 = 6;
    pub const BOOTSTRAP: u64 = 7;
    pub const REFERENCE: u64 = 8;
    pub const SPLIT: u64 = 9;
}

/// Key for lane `lane` of purpose `key`; lanes separate independent
/// batches that share a seed.
pub fn lane(key: u64, lane: u64) -> u64 {
    key ^ (lane << 16)
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Stream for `(seed, key, replica)`.
pub fn stream(seed: u64, key: u64, replica: u64) -> ChaCha8Rng {
    let mut bytes = [0u8; 32];
    let words = [
        splitmix(seed),
        splitmix(seed ^ splitmix(key)),
        splitmix(key.rotate_left(17) ^ 0x5A5A_5A5A),
        splitmix(seed.wrapping_add(key.wrapping_mul(0xD6E8_FEB8_6659_FD93))),
    ];
    for (chunk, w) in bytes.chunks_exact_mut(8).zip(words) {
        chunk.copy_from_slice(&w.to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(bytes);
    rng.set_stream(replica);
    rng
}
