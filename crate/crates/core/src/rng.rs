//! Keyed random streams.
//!
//! Every random decision is drawn from a ChaCha stream whose 256-bit key is
//! the concatenation of the master seed, the trial index and a purpose word.
//! Streams for different keys are independent, so trials can run in any
//! order or in parallel and still reproduce bit for bit.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// What a stream is used for within one trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Purpose {
    /// Drawing the initial flip pattern.
    Initiation,
    /// Random choices made during ISA step `l` (1-based).
    Step(u64),
    /// Anything outside the ISA proper, such as audit sampling.
    Aux(u64),
}

impl Purpose {
    fn words(self) -> (u64, u64) {
        match self {
            Purpose::Initiation => (0, 0),
            Purpose::Step(l) => (1, l),
            Purpose::Aux(k) => (2, k),
        }
    }
}

pub fn stream(master_seed: u64, trial: u64, purpose: Purpose) -> StreamRng {
    let (tag, idx) = purpose.words();
    let mut key = [0u8; 32];
    for (chunk, word) in key.chunks_exact_mut(8).zip([master_seed, trial, tag, idx]) {
        chunk.copy_from_slice(&word.to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}
