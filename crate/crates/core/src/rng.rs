//! Counter-based 64-bit random numbers.
//!
//! Output `i` (starting at 1) of a stream with key `k` is
//! `mix(k + i * 0x9E3779B97F4A7C15)` where `mix` is the SplitMix64
//! finalizer. A stream keyed by `k` therefore equals the classic SplitMix64
//! sequence seeded with `k`. Floats take the top 53 bits divided by 2^53.
//! Keys derived from several words chain `mix` over `key ^ word`.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CounterRng {
    key: u64,
    counter: u64,
}

impl CounterRng {
    pub fn new(seed: u64) -> Self {
        Self {
            key: seed,
            counter: 0,
        }
    }

    /// Independent stream for a tuple of words, e.g. (seed, node, iteration).
    pub fn keyed(seed: u64, words: &[u64]) -> Self {
        let key = words.iter().fold(mix64(seed.wrapping_add(GOLDEN)), |k, w| {
            mix64(k ^ w.wrapping_add(GOLDEN))
        });
        Self::new(key)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.counter = self.counter.wrapping_add(1);
        mix64(self.key.wrapping_add(self.counter.wrapping_mul(GOLDEN)))
    }

    /// Uniform in [0, 1).
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in [lo, hi]; returns `lo` for an empty range.
    pub fn uniform_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Uniform integer in [0, n).
    pub fn below(&mut self, n: usize) -> usize {
        assert!(n > 0, "empty range");
        ((self.uniform() * n as f64) as usize).min(n - 1)
    }
}
