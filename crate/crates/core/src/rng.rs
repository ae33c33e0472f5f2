//! SplitMix64 pseudo-random generator.
//!
//! The sequence is fully specified so fixtures can be reproduced in other
//! languages: the state advances by the golden-ratio increment
//! `0x9E3779B97F4A7C15` and each output is the standard SplitMix64 finalizer
//! of the new state. Floats take the top 53 bits: `(x >> 11) * 2^-53`.

#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in `[0, 1)`.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Unit-norm vector with entries drawn uniformly from `[-1, 1)` and then
    /// normalized. Redraws in the (practically impossible) all-zero case.
    pub fn unit_vector(&mut self, len: usize) -> Vec<f64> {
        loop {
            let v: Vec<f64> = (0..len).map(|_| self.uniform(-1.0, 1.0)).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 0.0 {
                return v.into_iter().map(|x| x / norm).collect();
            }
        }
    }
}
