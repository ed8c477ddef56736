//! Derivation of independent random streams from one master seed.
//!
//! A stream seed is `mix(mix(master ^ tag) ^ mix(rep << 32 | index))`, where
//! `mix` is the SplitMix64 finalizer, `tag` is a fixed 64-bit constant per
//! [`Stream`], `rep` is the repetition number and `index` is the active-loop
//! iteration (0 for streams used once per run). Each seed initializes a
//! [`ChaCha8Rng`].
//!
//! None of the inputs depend on the sampling strategy, so every strategy in a
//! repetition sees the same data, initialization and initial subset.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Stream {
    /// Synthetic dataset generation.
    Data,
    /// Partition into unlabeled pool, labeled set and test set.
    Split,
    /// Contrastive model initialization.
    Init,
    /// Minibatch shuffling during contrastive training.
    Shuffle,
    /// View augmentation during contrastive training.
    Augment,
    /// Candidate subsampling and random selection.
    Sampling,
    /// Proxy initialization and minibatch order.
    Proxy,
}

impl Stream {
    fn tag(self) -> u64 {
        match self {
            Stream::Data => 0x6461_7461_0000_0001,
            Stream::Split => 0x7370_6c69_7400_0002,
            Stream::Init => 0x696e_6974_0000_0003,
            Stream::Shuffle => 0x7368_7566_666c_0004,
            Stream::Augment => 0x6175_676d_0000_0005,
            Stream::Sampling => 0x7361_6d70_0000_0006,
            Stream::Proxy => 0x7072_6f78_7900_0007,
        }
    }
}

/// SplitMix64 output function.
pub fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Master seed plus repetition index.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SeedSchedule {
    pub master: u64,
    pub repetition: u32,
}

impl SeedSchedule {
    pub fn new(master: u64, repetition: u32) -> Self {
        Self { master, repetition }
    }

    pub fn seed(&self, stream: Stream, index: u32) -> u64 {
        let slot = (u64::from(self.repetition) << 32) | u64::from(index);
        mix(mix(self.master ^ stream.tag()) ^ mix(slot))
    }

    pub fn rng(&self, stream: Stream, index: u32) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed(stream, index))
    }
}
