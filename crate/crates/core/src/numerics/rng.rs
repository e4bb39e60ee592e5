use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// A replayable random stream.
///
/// Backed by ChaCha8, a counter-based generator: the key is derived from
/// `seed` and `stream_id` selects an independent 2^64-block stream. Two
/// streams with the same `(seed, stream_id)` produce identical sequences for
/// identical call sequences, regardless of which thread drives them.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream_id);
        Self {
            seed,
            stream_id,
            inner,
        }
    }

    /// Shorthand for `RngStream::new(seed, stream_id(tags))`.
    pub fn tagged(seed: u64, tags: &[u64]) -> Self {
        Self::new(seed, stream_id(tags))
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Number of 32-bit words consumed so far.
    pub fn word_pos(&self) -> u128 {
        self.inner.get_word_pos()
    }

    /// `n` i.i.d. standard-normal draws. Panics on `n == 0`.
    pub fn gauss(&mut self, n: usize) -> Vec<f64> {
        assert!(n > 0, "gauss: n must be at least 1");
        (0..n).map(|_| self.inner.sample(StandardNormal)).collect()
    }

    pub fn fill_gauss(&mut self, out: &mut [f64]) {
        for o in out {
            *o = self.inner.sample(StandardNormal);
        }
    }

    /// Uniform in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    /// Uniform integer in `0..n`.
    pub fn below(&mut self, n: usize) -> usize {
        self.inner.random_range(0..n)
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

/// Hash a path of tags (purpose, generation, member, ...) into a stream id.
///
/// SplitMix64 finalizer applied per tag; distinct paths map to distinct ids
/// with overwhelming probability and the mapping is stable across releases.
pub fn stream_id(tags: &[u64]) -> u64 {
    let mut h: u64 = 0x243f_6a88_85a3_08d3;
    for &t in tags {
        h = splitmix(h ^ splitmix(t.wrapping_add(0x9e37_79b9_7f4a_7c15)));
    }
    h
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
