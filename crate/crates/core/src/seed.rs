//! Counter-based seed derivation.
//!
//! Every random stream in an experiment is keyed by `(master, domain, index...)`
//! so that any single sample can be regenerated in isolation, independent of
//! thread scheduling.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from a master seed and a path of counters.
pub fn derive(master: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(master), |acc, &p| splitmix64(acc ^ splitmix64(p.wrapping_add(GOLDEN))))
}

/// Stream tags used by the experiment runner and key generation.
pub mod stream {
    pub const LATENT: u64 = 1;
    pub const NULL_LATENT: u64 = 2;
    pub const KEY_INDEX: u64 = 3;
    pub const CHANNEL: u64 = 4;
    pub const POOL: u64 = 5;
    pub const NOISE_KEY: u64 = 6;
    pub const ATTACK: u64 = 7;
    pub const INVERSION: u64 = 8;
}
