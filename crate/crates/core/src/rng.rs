//! Seed derivation for independent random streams.
//!
//! Every random draw in the crate comes from a ChaCha stream whose seed is a
//! pure function of the top-level seed and a path of labels (test kind, unit
//! id, trial index, ...). Streams therefore never depend on thread count or
//! scheduling order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// FNV-1a; stable across platforms and releases, unlike `DefaultHasher`.
fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}

/// One component of a stream path.
#[derive(Debug, Clone, Copy)]
pub enum Label<'a> {
    Str(&'a str),
    Int(u64),
}

impl<'a> From<&'a str> for Label<'a> {
    fn from(s: &'a str) -> Self {
        Label::Str(s)
    }
}

impl From<u64> for Label<'_> {
    fn from(v: u64) -> Self {
        Label::Int(v)
    }
}

impl From<usize> for Label<'_> {
    fn from(v: usize) -> Self {
        Label::Int(v as u64)
    }
}

/// Derive a child seed from `seed` and a label path.
pub fn derive_seed(seed: u64, path: &[Label<'_>]) -> u64 {
    let mut state = splitmix64(seed);
    for label in path {
        let mixed = match label {
            Label::Str(s) => fnv1a(s.as_bytes()),
            Label::Int(v) => splitmix64(*v ^ 0xA5A5_A5A5_A5A5_A5A5),
        };
        state = splitmix64(state ^ mixed);
    }
    state
}

pub fn stream(seed: u64, path: &[Label<'_>]) -> StreamRng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, path))
}
