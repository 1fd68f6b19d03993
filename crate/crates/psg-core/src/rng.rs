//! Deterministic pseudo-random numbers for fixture generation.
//!
//! A splitmix64 generator: the 64-bit finalizer is used both to step the
//! stream and to derive independent per-image sub-seeds, so generation is
//! bit-identical across platforms and thread schedules.

/// Splitmix64 stream.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    /// Independent sub-stream for item `index` of a run seeded with `seed`.
    ///
    /// Sub-seeds depend only on `(seed, index)`, so per-item generation can be
    /// scheduled on any thread without changing the output.
    pub fn for_substream(seed: u64, index: u64) -> Self {
        SplitMix64::new(mix64(seed ^ mix64(index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA))))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        mix64(self.state)
    }

    /// Uniform value in `[0, bound)`. `bound` must be nonzero.
    ///
    /// Rejection-free multiply-shift reduction; the tiny bias is irrelevant for
    /// fixtures and keeps the draw count fixed at one per call.
    pub fn next_below(&mut self, bound: u64) -> u64 {
        debug_assert!(bound > 0);
        ((u128::from(self.next_u64()) * u128::from(bound)) >> 64) as u64
    }

    pub fn next_index(&mut self, len: usize) -> usize {
        self.next_below(len as u64) as usize
    }

    /// Uniform `f64` in `[0, 1)` with 53 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn next_bool(&mut self, prob: f64) -> bool {
        self.next_f64() < prob
    }
}
