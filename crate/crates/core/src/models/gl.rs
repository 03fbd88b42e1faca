use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{LatticeGrid, RealField, SpectralOps};

fn default_noise_strength() -> f64 {
    2.0
}

fn default_true() -> bool {
    true
}

/// Coefficients of the reduced critical-quadrature equation
///
/// `∂X/∂τ = -γₓX - X³ - (γₓᵧ/2)∇²X - (1/2)∇⁴X + ξₓ`,
/// with `⟨ξₓξₓ⟩ = noise_strength · δ(τ-τ') δ²(r-r')`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GLParams {
    pub gamma_x: f64,
    #[serde(default)]
    pub gamma_xy: f64,
    #[serde(default = "default_noise_strength")]
    pub noise_strength: f64,
    /// Set to false for the linearized (Ornstein-Uhlenbeck) model.
    #[serde(default = "default_true")]
    pub cubic: bool,
}

impl GLParams {
    pub fn new(gamma_x: f64, gamma_xy: f64) -> Self {
        Self {
            gamma_x,
            gamma_xy,
            noise_strength: default_noise_strength(),
            cubic: true,
        }
    }

    pub fn linearized(gamma_x: f64, gamma_xy: f64) -> Self {
        Self {
            cubic: false,
            ..Self::new(gamma_x, gamma_xy)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma_x.is_finite() && self.gamma_xy.is_finite()) {
            return Err(Error::params("gamma_x and gamma_xy must be finite"));
        }
        if !(self.noise_strength.is_finite() && self.noise_strength > 0.0) {
            return Err(Error::params("noise_strength must be positive"));
        }
        Ok(())
    }

    /// Linear relaxation rate `λ(k) = γₓ - (γₓᵧ/2)k² + k⁴/2`.
    pub fn lambda(&self, k2: f64) -> f64 {
        self.gamma_x - 0.5 * self.gamma_xy * k2 + 0.5 * k2 * k2
    }

    /// Continuum minimizer of `λ`: `k² = max(γₓᵧ/2, 0)`.
    pub fn critical_k2(&self) -> f64 {
        (0.5 * self.gamma_xy).max(0.0)
    }

    /// Continuum threshold value of `γₓ`, `γₓᵧ²/8` for modulated
    /// instability, `0` otherwise.
    pub fn threshold_gamma_x(&self) -> f64 {
        if self.gamma_xy > 0.0 {
            self.gamma_xy * self.gamma_xy / 8.0
        } else {
            0.0
        }
    }

    /// Mode with the smallest `λ(k)` on `grid` and its value.
    pub fn min_lambda(&self, grid: &LatticeGrid) -> (usize, f64) {
        (0..grid.len()).map(|i| (i, self.lambda(grid.k2(i)))).fold(
            (0, f64::INFINITY),
            |best, cur| if cur.1 < best.1 { cur } else { best },
        )
    }

    /// True when every grid mode is linearly stable.
    pub fn linearly_stable_on(&self, grid: &LatticeGrid) -> bool {
        self.min_lambda(grid).1 > 0.0
    }
}

/// Deterministic drift of the GL equation.
pub fn gl_drift(x: &RealField, p: &GLParams, ops: &mut SpectralOps) -> Result<RealField> {
    x.check_finite("gl drift input")?;
    let k2 = ops.k2().to_vec();
    let mut buf = x.to_complex();
    ops.apply_multiplier(&mut buf, |i| -p.lambda(k2[i]));
    let values: Vec<f64> = buf
        .iter()
        .zip(x.values())
        .map(|(lin, &v)| if p.cubic { lin.re - v * v * v } else { lin.re })
        .collect();
    let out = RealField::from_values(x.grid().clone(), values)?;
    out.check_finite("gl drift")?;
    Ok(out)
}

/// Lattice potential functional
///
/// `V[X] = Σᵣ dx dy (2γₓX² + X⁴ - γₓᵧ|∇X|² + (∇²X)²)/4`
///
/// with spectral derivatives. The stationary density of the GL equation is
/// `∝ exp(-V)` for noise strength 2; `gl_drift = -(1/dx dy) ∂V/∂Xᵣ`.
pub fn potential_functional(x: &RealField, p: &GLParams, ops: &mut SpectralOps) -> Result<f64> {
    x.check_finite("potential input")?;
    let cell = x.grid().cell_area();
    let lap = ops.laplacian(x)?;
    let local: f64 = x
        .values()
        .iter()
        .zip(lap.values())
        .map(|(&v, &l)| {
            let quartic = if p.cubic { v.powi(4) } else { 0.0 };
            2.0 * p.gamma_x * v * v + quartic + l * l
        })
        .sum();
    let grad = ops.gradient_energy(x)?;
    Ok((cell * local - p.gamma_xy * grad) / 4.0)
}
