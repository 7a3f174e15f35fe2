//! Seeded, stream-separated random number generation.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A reproducible generator identified by `(seed, stream)`.
///
/// Distinct stream ids under one seed give non-overlapping ChaCha keystreams,
/// so each chain can own its own stream. The position in the stream can be
/// saved and restored exactly, which is what checkpoints rely on.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream: u64,
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self {
            seed,
            stream,
            inner,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Word offset within the keystream.
    pub fn position(&self) -> u128 {
        self.inner.get_word_pos()
    }

    /// Rebuilds a generator at a saved position.
    pub fn restore(seed: u64, stream: u64, position: u128) -> Self {
        let mut rng = Self::new(seed, stream);
        rng.inner.set_word_pos(position);
        rng
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}
