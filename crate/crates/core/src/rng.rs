//! Counter-based random streams.
//!
//! Every random draw is a pure function of `(seed, domain, index, draw)`:
//! the ChaCha12 key is built from the 64-bit seed and a domain tag, the
//! ChaCha stream id is the trial (or resample) index, and the block counter
//! advances with each draw. Any subset of trials can therefore be generated
//! in any order, on any number of threads, with identical results.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;

/// Independent sub-streams used by different stages of a trial.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    Preparation = 1,
    Measurement = 2,
    Decoding = 3,
    Bootstrap = 4,
}

/// A reproducible generator for one `(seed, domain, index)` triple.
#[derive(Clone, Debug)]
pub struct CounterRng(ChaCha12Rng);

impl CounterRng {
    pub fn new(seed: u64, domain: Domain, index: u64) -> Self {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&seed.to_le_bytes());
        key[8..16].copy_from_slice(&(domain as u64).to_le_bytes());
        key[16..24].copy_from_slice(b"discert\0");
        let mut inner = ChaCha12Rng::from_seed(key);
        inner.set_stream(index);
        Self(inner)
    }

    /// Number of 32-bit words consumed so far.
    pub fn draws(&self) -> u128 {
        self.0.get_word_pos()
    }
}

impl RngCore for CounterRng {
    fn next_u32(&mut self) -> u32 {
        self.0.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.0.fill_bytes(dst)
    }
}

/// Derives a child seed, e.g. for the points of a parameter sweep.
pub fn derive_seed(seed: u64, label: u64) -> u64 {
    let mut rng = CounterRng::new(seed, Domain::Bootstrap, label ^ 0x9E37_79B9_7F4A_7C15);
    rng.next_u64()
}
