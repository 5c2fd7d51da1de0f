//! Seeded, platform-independent random draws.
//!
//! The generator is ChaCha8 (`rand_chacha::ChaCha8Rng`) seeded through
//! `SeedableRng::seed_from_u64`. Uniform doubles take the top 53 bits of
//! `next_u64`: `u = (x >> 11) * 2^-53`, so `u ∈ [0, 1)`. Normal draws use
//! the cosine branch of Box-Muller on two consecutive uniforms:
//! `z = sqrt(-2 ln(1 - u1)) * cos(2π u2)`.

use std::f64::consts::TAU;

use nalgebra::DVector;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const RNG_NAME: &str = "chacha8/seed_from_u64";
pub const NORMAL_TRANSFORM: &str = "box-muller-cos";

pub struct PhaseRng {
    inner: ChaCha8Rng,
}

impl PhaseRng {
    pub fn new(seed: u64) -> Self {
        Self {
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn uniform01(&mut self) -> f64 {
        (self.inner.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform01()
    }

    pub fn normal(&mut self, mu: f64, sigma: f64) -> f64 {
        let u1 = 1.0 - self.uniform01();
        let u2 = self.uniform01();
        mu + sigma * (-2.0 * u1.ln()).sqrt() * (TAU * u2).cos()
    }

    pub fn uniform_phases(&mut self, n: usize) -> DVector<f64> {
        DVector::from_fn(n, |_, _| TAU * self.uniform01())
    }

    pub fn uniform_vec(&mut self, n: usize, lo: f64, hi: f64) -> DVector<f64> {
        DVector::from_fn(n, |_, _| self.uniform(lo, hi))
    }

    pub fn normal_vec(&mut self, n: usize, mu: f64, sigma: f64) -> DVector<f64> {
        DVector::from_fn(n, |_, _| self.normal(mu, sigma))
    }
}
