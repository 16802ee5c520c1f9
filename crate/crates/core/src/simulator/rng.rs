//! Counter-based per-pulse random streams.
//!
//! Every pulse draws from its own ChaCha stream derived from the user seed
//! and the pulse index, so batches are reproducible bit-for-bit regardless
//! of how generation is partitioned across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent random-stream families within one batch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum StreamKind {
    Modulation = 1,
    ChannelNoise = 2,
    DetectionVacuum = 3,
    Bootstrap = 4,
}

const INDEX_BITS: u32 = 56;

/// Per-pulse stream factory for one `(seed, kind)` family.
#[derive(Debug, Clone)]
pub(crate) struct PulseStreams {
    base: ChaCha8Rng,
    kind: u64,
}

impl PulseStreams {
    pub fn new(seed: u64, kind: StreamKind) -> Self {
        Self {
            base: ChaCha8Rng::seed_from_u64(seed),
            kind: kind as u64,
        }
    }

    /// RNG for pulse `index`, independent of every other pulse's stream.
    pub fn pulse(&self, index: u64) -> ChaCha8Rng {
        debug_assert!(index < 1 << INDEX_BITS);
        let mut rng = self.base.clone();
        rng.set_stream((self.kind << INDEX_BITS) | index);
        rng
    }
}
