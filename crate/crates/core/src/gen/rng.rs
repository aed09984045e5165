//! Splittable counter-based random streams. A stream is keyed by a seed
//! plus a list of tags (pair index, edge index, epoch, ...), so draws are
//! reproducible bit-exactly regardless of generation order and across
//! platforms (fixed-width integer arithmetic only).

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[inline]
fn hash2(a: u64, b: u64) -> u64 {
    mix(a ^ b.wrapping_mul(GOLDEN).wrapping_add(0x2545_F491_4F6C_DD1D))
}

/// A keyed deterministic stream of pseudo-random numbers.
#[derive(Debug, Clone)]
pub struct Stream {
    state: u64,
}

impl Stream {
    pub fn new(seed: u64, tags: &[u64]) -> Self {
        let mut state = mix(seed ^ GOLDEN);
        for &t in tags {
            state = hash2(state, t);
        }
        Stream { state }
    }

    /// Derives a child stream without disturbing this one.
    pub fn child(&self, tag: u64) -> Stream {
        Stream {
            state: hash2(self.state, tag ^ 0xA5A5_A5A5_A5A5_A5A5),
        }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN);
        mix(self.state)
    }

    /// Uniform in `[0, 1)` with 53 bits of precision.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / 9_007_199_254_740_992.0)
    }

    /// Uniform in `[lo, hi)`.
    #[inline]
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Uniform integer in `{0, ..., n-1}`.
    #[inline]
    pub fn uniform_int(&mut self, n: u64) -> u64 {
        debug_assert!(n > 0);
        (self.next_f64() * n as f64) as u64 % n
    }

    /// Samples an index from unnormalized non-negative weights.
    pub fn categorical(&mut self, weights: &[f64]) -> usize {
        let total: f64 = weights.iter().sum();
        let mut u = self.next_f64() * total;
        for (i, w) in weights.iter().enumerate() {
            u -= w;
            if u <= 0.0 {
                return i;
            }
        }
        weights.len() - 1
    }

    /// Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, xs: &mut [T]) {
        for i in (1..xs.len()).rev() {
            let j = self.uniform_int(i as u64 + 1) as usize;
            xs.swap(i, j);
        }
    }
}

/// Stream tag namespaces, kept in one place so key collisions cannot
/// happen by accident.
pub mod tags {
    pub const PAIR: u64 = 1;
    pub const NODE: u64 = 2;
    pub const PRIZE: u64 = 3;
    pub const DEMAND: u64 = 4;
    pub const GAMMA: u64 = 5;
    pub const TIME_WINDOW: u64 = 6;
    pub const CALIBRATE: u64 = 7;
    pub const TRAIN: u64 = 8;
    pub const VALIDATION: u64 = 9;
    pub const PREFERENCE: u64 = 10;
    pub const INIT: u64 = 11;
    pub const EVAL: u64 = 12;
}
