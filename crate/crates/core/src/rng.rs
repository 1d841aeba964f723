//! Counter-based random streams.
//!
//! Every stream is addressed by a path of integers (master seed, replicate,
//! feature, group, observation, ...). The path is hashed to a 64-bit key and
//! the i-th output of the stream is a bijective mix of `key + i·γ` (the
//! SplitMix64 construction), so any draw can be recomputed from its address
//! alone and results never depend on how work is scheduled across threads.

use rand::RngCore;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Hashes a stream address into a key.
pub fn derive_key(master: u64, path: &[u64]) -> u64 {
    path.iter().fold(mix64(master ^ 0x6A09_E667_F3BC_C909), |h, &p| {
        mix64(h ^ mix64(p.wrapping_add(GOLDEN)))
    })
}

/// Extends an already derived key by one more path component.
#[inline]
pub fn child_key(key: u64, component: u64) -> u64 {
    mix64(key ^ mix64(component.wrapping_add(GOLDEN)))
}

#[derive(Debug, Clone)]
pub struct CounterRng {
    key: u64,
    counter: u64,
}

impl CounterRng {
    pub fn from_key(key: u64) -> Self {
        CounterRng { key, counter: 0 }
    }

    pub fn new(master: u64, path: &[u64]) -> Self {
        Self::from_key(derive_key(master, path))
    }

    /// The i-th output of this stream, independent of the current position.
    #[inline]
    pub fn at(&self, i: u64) -> u64 {
        mix64(self.key.wrapping_add(i.wrapping_add(1).wrapping_mul(GOLDEN)))
    }

    #[inline]
    pub fn next_word(&mut self) -> u64 {
        let out = self.at(self.counter);
        self.counter = self.counter.wrapping_add(1);
        out
    }

    /// Uniform on [0, 1) with 53 random bits.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.next_word() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on (0, 1).
    #[inline]
    pub fn uniform_open(&mut self) -> f64 {
        ((self.next_word() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform index in `0..n` by multiply-shift.
    #[inline]
    pub fn index(&mut self, n: usize) -> usize {
        ((self.next_word() as u128 * n as u128) >> 64) as usize
    }

    /// Standard normal by the Marsaglia polar method; the second variate of the pair is dropped.
    pub fn standard_normal(&mut self) -> f64 {
        loop {
            let u = 2.0 * self.uniform() - 1.0;
            let v = 2.0 * self.uniform() - 1.0;
            let s = u * u + v * v;
            if s > 0.0 && s < 1.0 {
                return u * (-2.0 * s.ln() / s).sqrt();
            }
        }
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.index(i + 1);
            items.swap(i, j);
        }
    }
}

impl RngCore for CounterRng {
    fn next_u32(&mut self) -> u32 {
        (self.next_word() >> 32) as u32
    }

    fn next_u64(&mut self) -> u64 {
        self.next_word()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        for chunk in dst.chunks_mut(8) {
            let w = self.next_word().to_le_bytes();
            chunk.copy_from_slice(&w[..chunk.len()]);
        }
    }
}
