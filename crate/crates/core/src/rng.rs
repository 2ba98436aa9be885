//! One seedable, splittable random source.
//!
//! Every random draw in the crate comes from a [`ChaCha20Rng`] seeded through
//! [`Seed::rng`]. Independent tasks obtain their own stream with
//! [`Seed::split`], which mixes the parent seed and a stream tag through
//! SplitMix64. The pair is identified by [`RNG_ALGORITHM`] in every output.

use rand::SeedableRng;
pub use rand_chacha::ChaCha20Rng;

/// Identifier recorded next to every seed that leaves the process.
pub const RNG_ALGORITHM: &str = "chacha20-splitmix64-v1";

pub type Rng = ChaCha20Rng;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Seed(pub u64);

impl Seed {
    pub fn rng(self) -> Rng {
        ChaCha20Rng::seed_from_u64(self.0)
    }

    /// Child seed for stream `tag`. `split(a).split(b)` and `split(b).split(a)`
    /// are different streams.
    pub fn split(self, tag: u64) -> Seed {
        Seed(splitmix64(self.0 ^ splitmix64(tag ^ 0x6a09_e667_f3bc_c909)))
    }
}

impl From<u64> for Seed {
    fn from(value: u64) -> Self {
        Seed(value)
    }
}

pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
