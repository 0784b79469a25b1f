use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::problem::{GradientSource, Problem};

/// Relative Gaussian noise on the gradient: `g̃ᵢ = gᵢ (1 + σ ξᵢ)` with
/// `ξᵢ ~ N(0, 1)` drawn from a seeded stream.
///
/// A wrapper belongs to a single run; draws are consumed in query order.
#[derive(Debug, Clone)]
pub struct NoisyGradientWrapper {
    inner: Problem,
    sigma: f64,
    rng_seed: u64,
    draw_count: u64,
    rng: ChaCha8Rng,
}

impl NoisyGradientWrapper {
    pub fn new(inner: Problem, sigma: f64, rng_seed: u64) -> Self {
        assert!(sigma >= 0.0, "noise level must be nonnegative");
        Self {
            inner,
            sigma,
            rng_seed,
            draw_count: 0,
            rng: ChaCha8Rng::seed_from_u64(rng_seed),
        }
    }

    pub fn inner(&self) -> &Problem {
        &self.inner
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn seed(&self) -> u64 {
        self.rng_seed
    }

    /// Number of perturbed gradients handed out so far.
    pub fn draw_count(&self) -> u64 {
        self.draw_count
    }

    pub fn noisy_grad(&mut self, x: &[f64]) -> Vec<f64> {
        let mut g = self.inner.gradient(x);
        self.draw_count += 1;
        if self.sigma == 0.0 {
            return g;
        }
        for gi in g.iter_mut() {
            let xi: f64 = self.rng.sample(StandardNormal);
            *gi *= 1.0 + self.sigma * xi;
        }
        g
    }
}

impl GradientSource for NoisyGradientWrapper {
    fn problem(&self) -> &Problem {
        &self.inner
    }

    fn gradient(&mut self, x: &[f64]) -> Vec<f64> {
        self.noisy_grad(x)
    }

    fn is_exact(&self) -> bool {
        self.sigma == 0.0
    }
}
