//! Seeded random streams.
//!
//! Every random draw in the crate comes from ChaCha8 seeded through
//! `SeedableRng::seed_from_u64`, so datasets, initial weights and batch orders
//! are reproducible across platforms. Gaussian variates use the Box–Muller
//! transform on that stream.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type SeededRng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Standard-normal sampler (Box–Muller, both variates of each pair are used).
#[derive(Debug, Clone)]
pub struct Gaussian {
    rng: SeededRng,
    spare: Option<f64>,
}

impl Gaussian {
    pub fn new(rng: SeededRng) -> Self {
        Self { rng, spare: None }
    }

    /// Uniform draw on `[0, 1)` from the underlying stream.
    pub fn uniform(&mut self) -> f64 {
        self.rng.gen::<f64>()
    }

    pub fn standard(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        // 1 - u lies in (0, 1], keeping ln finite.
        let u1 = 1.0 - self.rng.gen::<f64>();
        let u2 = self.rng.gen::<f64>();
        let radius = (-2.0 * u1.ln()).sqrt();
        let angle = std::f64::consts::TAU * u2;
        self.spare = Some(radius * angle.sin());
        radius * angle.cos()
    }
}
