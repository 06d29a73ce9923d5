//! Counter-based random streams.
//!
//! Every random draw in the crate comes from a ChaCha stream keyed by
//! `(master seed, domain)` with the stream id selecting an independent
//! sub-sequence. A particle's noise therefore depends only on its index,
//! never on which worker thread simulated it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Logical purpose of a stream. Different domains never share a key.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    InitialLaw = 1,
    JumpNoise = 2,
    Subsample = 3,
    Pairs = 4,
    Instances = 5,
}

/// Build the generator for `(seed, domain, stream)`.
pub fn stream(seed: u64, domain: Domain, stream: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&(domain as u64).to_le_bytes());
    // fixed tag so the key never collides with a plain `seed_from_u64`
    key[16..24].copy_from_slice(&0x6c65_7679_6b72_0001u64.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(stream);
    rng
}
