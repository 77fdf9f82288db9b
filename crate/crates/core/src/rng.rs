//! Counter-based random streams.
//!
//! Every random draw in a simulation comes from a ChaCha8 stream addressed by
//! `(seed, purpose, step, index)`. The first three fields form the cipher key and
//! the entity index selects the 64-bit stream, so two distinct addresses never
//! share keystream. Because a stream is recomputed from its address rather than
//! carried forward, results do not depend on how work is scheduled across
//! threads, and the only state a checkpoint needs is the seed and the step.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// What a substream is used for. Part of the stream address.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Purpose {
    InitResources = 1,
    InitAgents = 2,
    InitWeights = 3,
    Action = 4,
    Consume = 5,
    Mutation = 6,
    Regrowth = 7,
    LabSampling = 8,
    LabTrial = 9,
}

/// Root of all random streams of one simulation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RngStream {
    seed: u64,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Independent generator for `(purpose, step, index)`.
    pub fn substream(&self, purpose: Purpose, step: u64, index: u64) -> ChaCha8Rng {
        let mut key = [0u8; 32];
        key[0..8].copy_from_slice(&self.seed.to_le_bytes());
        key[8..16].copy_from_slice(&(purpose as u64).to_le_bytes());
        key[16..24].copy_from_slice(&step.to_le_bytes());
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(index);
        rng
    }

    /// Derive a child root, e.g. one per lab trial.
    pub fn derive(&self, purpose: Purpose, step: u64, index: u64) -> RngStream {
        use rand::RngCore;
        RngStream::new(self.substream(purpose, step, index).next_u64())
    }
}
