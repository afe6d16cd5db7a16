//! Deterministic random streams for replicated simulation.
//!
//! Every replication gets its own stream, fully specified by a
//! `(master_seed, index)` pair, so any worker on any machine can recreate
//! it without coordination. ChaCha8 supports 2^64 independent streams per
//! seed, which maps directly onto replication indices.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A counter-based random stream owned by exactly one worker at a time.
#[derive(Debug, Clone)]
pub struct RandomStream {
    inner: ChaCha8Rng,
    master_seed: u64,
    index: u64,
}

impl RandomStream {
    /// The seed this stream was derived from.
    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    /// The stream index this stream was derived with.
    pub fn index(&self) -> u64 {
        self.index
    }
}

impl RngCore for RandomStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.inner.fill_bytes(dest)
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), rand::Error> {
        self.inner.try_fill_bytes(dest)
    }
}

/// Derives the stream for one replication from the master seed.
///
/// Distinct indices yield statistically independent streams; calling twice
/// with the same arguments yields identical output sequences.
pub fn derive(master_seed: u64, index: u64) -> RandomStream {
    let mut inner = ChaCha8Rng::seed_from_u64(master_seed);
    inner.set_stream(index);
    RandomStream {
        inner,
        master_seed,
        index,
    }
}

/// One uniform variate in [0, 1) with 53 bits of precision.
///
/// All arm draws and reward draws in this crate consume exactly one call,
/// which keeps variate consumption fixed and runs replayable.
#[inline]
pub fn draw_unit(rng: &mut (impl RngCore + ?Sized)) -> f64 {
    const DENOM: f64 = (1u64 << 53) as f64;
    (rng.next_u64() >> 11) as f64 / DENOM
}
