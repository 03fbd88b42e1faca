use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{LatticeGrid, RealField};
use crate::error::{Error, Result};

/// Discretized delta-correlated white noise of strength `s`:
/// per-site, per-step variance `s / (dx dy dτ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub variance_per_site_step: f64,
    pub stream_seed: u64,
}

impl NoiseSpec {
    pub fn new(strength: f64, grid: &LatticeGrid, dt: f64, stream_seed: u64) -> Result<Self> {
        let variance = strength / (grid.cell_area() * dt);
        if !(variance.is_finite() && variance > 0.0) {
            return Err(Error::params(format!(
                "noise variance {variance} must be positive (strength {strength}, dt {dt})"
            )));
        }
        Ok(Self {
            variance_per_site_step: variance,
            stream_seed,
        })
    }

    pub fn stream(&self) -> NoiseStream {
        NoiseStream {
            rng: ChaCha8Rng::seed_from_u64(self.stream_seed),
            std_dev: self.variance_per_site_step.sqrt(),
        }
    }
}

/// A private random stream; one per trajectory or chain.
#[derive(Debug, Clone)]
pub struct NoiseStream {
    rng: ChaCha8Rng,
    std_dev: f64,
}

impl NoiseStream {
    pub fn from_seed(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            std_dev: 1.0,
        }
    }

    /// Fills `out` with i.i.d. `N(0, variance_per_site_step)` draws.
    pub fn fill(&mut self, out: &mut [f64]) {
        for v in out.iter_mut() {
            let z: f64 = self.rng.sample(StandardNormal);
            *v = self.std_dev * z;
        }
    }

    /// Fills `out` with unit normal draws, ignoring the spec variance.
    pub fn fill_standard(&mut self, out: &mut [f64]) {
        for v in out.iter_mut() {
            *v = self.rng.sample(StandardNormal);
        }
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    pub fn uniform(&mut self) -> f64 {
        self.rng.random()
    }

    pub fn sample_field(&mut self, grid: Arc<LatticeGrid>) -> RealField {
        let mut values = vec![0.0; grid.len()];
        self.fill(&mut values);
        RealField::from_values(grid, values).expect("length matches grid")
    }
}

/// One noise field from a fresh stream seeded by `spec.stream_seed`.
pub fn sample_noise_field(spec: &NoiseSpec, grid: Arc<LatticeGrid>) -> RealField {
    spec.stream().sample_field(grid)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of the private stream for trajectory `index` under `master`.
pub fn stream_seed(master: u64, index: u64) -> u64 {
    splitmix64(master ^ splitmix64(index.wrapping_add(0x5EED)))
}
