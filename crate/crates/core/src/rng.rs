//! Seeded Gaussian streams.
//!
//! Uniforms come from ChaCha8 (a counter-based stream cipher) seeded with a
//! 64-bit value; each `u64` is mapped to `((u >> 11) + 0.5)·2⁻⁵³ ∈ (0, 1)`.
//! Normal deviates use the Marsaglia polar method, emitting both deviates
//! of each accepted pair in order. Nothing here depends on a distribution
//! library, so streams are bit-stable for a given seed.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TWO_POW_M53: f64 = 1.0 / (1u64 << 53) as f64;

#[derive(Debug, Clone)]
pub struct GaussianStream {
    rng: ChaCha8Rng,
    spare: Option<f64>,
}

impl GaussianStream {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            spare: None,
        }
    }

    /// Uniform on the open interval (0, 1).
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        ((self.rng.next_u64() >> 11) as f64 + 0.5) * TWO_POW_M53
    }

    #[inline]
    pub fn standard_normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        loop {
            let u = 2.0 * self.uniform() - 1.0;
            let v = 2.0 * self.uniform() - 1.0;
            let s = u * u + v * v;
            if s < 1.0 && s > 0.0 {
                let f = (-2.0 * s.ln() / s).sqrt();
                self.spare = Some(v * f);
                return u * f;
            }
        }
    }

    /// A pair of independent N(0, dt) increments.
    #[inline]
    pub fn increment_pair(&mut self, sqrt_dt: f64) -> [f64; 2] {
        let a = self.standard_normal();
        let b = self.standard_normal();
        [a * sqrt_dt, b * sqrt_dt]
    }
}

/// `n` pairs of independent Brownian increments with variance `dt`.
///
/// Identical to the increments drawn internally by the stochastic steppers
/// for the same seed.
pub fn brownian_increments(seed: u64, n: usize, dt: f64) -> Vec<[f64; 2]> {
    let mut g = GaussianStream::new(seed);
    let s = dt.sqrt();
    (0..n).map(|_| g.increment_pair(s)).collect()
}

/// Seed of the `index`-th path in a batch.
pub fn path_seed(base: u64, index: u64) -> u64 {
    base.wrapping_add(index)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic() {
        assert_eq!(brownian_increments(7, 1000, 0.01), brownian_increments(7, 1000, 0.01));
        assert_ne!(brownian_increments(7, 10, 0.01), brownian_increments(8, 10, 0.01));
    }

    #[test]
    fn uniform_is_open_interval() {
        let mut g = GaussianStream::new(0);
        for _ in 0..100_000 {
            let u = g.uniform();
            assert!(u > 0.0 && u < 1.0);
        }
    }

    #[test]
    fn moments_and_independence() {
        let n = 1_000_000;
        let dt = 1e-3;
        let inc = brownian_increments(12345, n, dt);
        for c in 0..2 {
            let mean = inc.iter().map(|p| p[c]).sum::<f64>() / n as f64;
            let var = inc.iter().map(|p| (p[c] - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            assert!(mean.abs() < 1.3e-4, "mean {mean}");
            assert!(((var - dt) / dt).abs() < 0.01, "var {var}");
        }
        let m0 = inc.iter().map(|p| p[0]).sum::<f64>() / n as f64;
        let m1 = inc.iter().map(|p| p[1]).sum::<f64>() / n as f64;
        let cov = inc.iter().map(|p| (p[0] - m0) * (p[1] - m1)).sum::<f64>() / n as f64;
        assert!((cov / dt).abs() < 0.01);
    }
}
