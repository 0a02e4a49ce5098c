//! Named, independent random streams derived from one master seed.
//!
//! Every consumer asks for its stream by name. The derived seed depends only
//! on `(master, name)`, so adding a new stream never shifts the draws of an
//! existing one.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// FNV-1a over the bytes of `name`.
pub fn stable_hash(name: &str) -> u64 {
    name.bytes()
        .fold(FNV_OFFSET, |h, b| (h ^ u64::from(b)).wrapping_mul(FNV_PRIME))
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn derive_seed(master: u64, name: &str) -> u64 {
    splitmix64(master ^ splitmix64(stable_hash(name)))
}

pub fn stream(master: u64, name: &str) -> StreamRng {
    StreamRng::seed_from_u64(derive_seed(master, name))
}
