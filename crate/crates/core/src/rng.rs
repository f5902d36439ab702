//! Seed derivation. Every randomized step draws from a generator seeded by
//! mixing the run's master seed with a stream tag and a task index, so the
//! per-task seeds are fixed before any parallel work starts.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Stream tags keep seeds of different pipeline stages apart.
pub mod stream {
    pub const TREE: u64 = 0x7472_6565;
    pub const FOLD: u64 = 0x666f_6c64;
    pub const CV_SHUFFLE: u64 = 0x6376_7368;
    pub const PERMUTATION: u64 = 0x7065_726d;
    pub const SHAPLEY: u64 = 0x7368_6170;
    pub const BACKGROUND: u64 = 0x6267_6e64;
    pub const KMEANS: u64 = 0x6b6d_6e73;
    pub const SPEARMAN: u64 = 0x7370_726d;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_seed(master: u64, stream: u64, index: u64) -> u64 {
    splitmix64(splitmix64(master ^ splitmix64(stream)).wrapping_add(index))
}

pub fn rng_for(master: u64, stream: u64, index: u64) -> Rng {
    Rng::seed_from_u64(derive_seed(master, stream, index))
}
