//! Seeded random streams.
//!
//! Every consumer of randomness gets its own ChaCha stream keyed by a master
//! seed plus a stream id, so independent pieces of an experiment can be
//! regenerated in isolation and in any order.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// The generator used throughout the crate.
pub type SimRng = ChaCha8Rng;

/// Domain tags keep streams derived from the same master seed disjoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    Traffic = 1,
    Clustering = 2,
    Scenario = 3,
}

/// A generator seeded directly from `seed`.
pub fn from_seed(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}

/// Independent stream `stream` of the generator keyed by `seed`.
pub fn stream(seed: u64, stream: u64) -> SimRng {
    let mut rng = SimRng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Derives a child seed for `(domain, a, b)`.
pub fn derive_seed(master: u64, domain: Domain, a: u64, b: u64) -> u64 {
    let mut rng = stream(master ^ ((domain as u64) << 56), (a << 32) ^ b);
    rng.next_u64()
}
