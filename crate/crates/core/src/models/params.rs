use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{Block2, GLParams};
use crate::error::{Error, Result};

/// Physical constants of the driven cavity.
///
/// Rates are in inverse time, `diffraction` is `D = v²/(2γ₁ω₁)` in
/// length². The optical frequencies are kept for provenance only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicalParams {
    /// Nonlinear coupling `χ`, `[re, im]`.
    pub chi: Complex64,
    pub gamma0: f64,
    pub gamma1: f64,
    #[serde(default)]
    pub delta0: f64,
    #[serde(default)]
    pub delta1: f64,
    /// Plane-wave pump amplitude `ℰ`, `[re, im]`.
    pub pump: Complex64,
    pub diffraction: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group_velocity: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_laser: Option<f64>,
}

impl PhysicalParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("gamma0", self.gamma0),
            ("gamma1", self.gamma1),
            ("diffraction", self.diffraction),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::params(format!("{name} = {v} must be positive")));
            }
        }
        for (name, v) in [("delta0", self.delta0), ("delta1", self.delta1)] {
            if !v.is_finite() {
                return Err(Error::params(format!("{name} must be finite")));
            }
        }
        if let (Some(w0), Some(w1)) = (self.omega0, self.omega1) {
            if (w0 - 2.0 * w1).abs() > 1e-9 * w0.abs().max(1.0) {
                return Err(Error::params(format!(
                    "omega0 = {w0} must equal 2 * omega1 = {}",
                    2.0 * w1
                )));
            }
        }
        Ok(())
    }

    /// Complex rates `γ̃ᵢ = γᵢ(1 + iΔᵢ)`.
    pub fn gamma0_tilde(&self) -> Complex64 {
        Complex64::new(self.gamma0, self.gamma0 * self.delta0)
    }

    pub fn gamma1_tilde(&self) -> Complex64 {
        Complex64::new(self.gamma1, self.gamma1 * self.delta1)
    }

    /// Inverse of the scaling chain for a real coupling: picks `χ` and `ℰ`
    /// so that `derive_scaled` returns the requested `g_c` and `μ̃`.
    pub fn with_scaled(
        gc: f64,
        mu_tilde: Complex64,
        delta1: f64,
        gamma0: f64,
        gamma1: f64,
        diffraction: f64,
    ) -> Result<Self> {
        if !(gc.is_finite() && gc > 0.0) {
            return Err(Error::params(format!("gc = {gc} must be positive")));
        }
        let chi = (gc * (8.0 * diffraction * gamma0 * gamma1).powf(2.0 / 3.0)).powf(0.75);
        let pump = mu_tilde * gamma0 * gamma1 / chi;
        let p = Self {
            chi: Complex64::new(chi, 0.0),
            gamma0,
            gamma1,
            delta0: 0.0,
            delta1,
            pump,
            diffraction,
            group_velocity: None,
            omega0: None,
            omega1: None,
            omega_laser: None,
        };
        p.validate()?;
        Ok(p)
    }

    /// Dimensionless constants and the time and length scales.
    pub fn derive_scaled(&self) -> Result<ScaledParams> {
        self.validate()?;
        let chi_abs = self.chi.norm();
        let gc = chi_abs.powf(4.0 / 3.0)
            / (8.0 * self.diffraction * self.gamma0 * self.gamma1).powf(2.0 / 3.0);
        let scaled = ScaledParams {
            gc,
            t0: 1.0 / (gc * self.gamma1),
            x0: (self.diffraction / gc.sqrt()).sqrt(),
            mu_tilde: self.chi * self.pump / (self.gamma1 * self.gamma0),
            delta1: self.delta1,
        };
        scaled.validate()?;
        Ok(scaled)
    }

    /// Diagonal linear rate of the signal field at `|k|²`:
    /// `-γ̃₁ - iγ₁D k²`.
    pub fn signal_rate(&self, k2: f64) -> Complex64 {
        -self.gamma1_tilde() - Complex64::i() * self.gamma1 * self.diffraction * k2
    }

    /// Diagonal linear rate of the pump field: `-γ̃₀ - i(γ₁/2)D k²`.
    pub fn pump_rate(&self, k2: f64) -> Complex64 {
        -self.gamma0_tilde() - Complex64::i() * 0.5 * self.gamma1 * self.diffraction * k2
    }

    /// Deterministic below-threshold pump field `ℰ/γ̃₀`.
    pub fn empty_signal_pump(&self) -> Complex64 {
        self.pump / self.gamma0_tilde()
    }
}

/// Dimensionless constants of the scaled signal equation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScaledParams {
    /// Effective nonlinear coefficient `g_c`.
    pub gc: f64,
    /// Time scale `t₀ = 1/(g_c γ₁)`.
    pub t0: f64,
    /// Length scale `x₀ = (D/√g_c)^{1/2}`.
    pub x0: f64,
    /// Dimensionless drive `μ̃ = μ + iθ`.
    pub mu_tilde: Complex64,
    pub delta1: f64,
}

/// Above this `g_c` the scaling derivation is not trustworthy.
pub const GC_WARN_THRESHOLD: f64 = 0.1;

impl ScaledParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.gc.is_finite() && self.gc > 0.0) {
            return Err(Error::params(format!("gc = {} must be positive", self.gc)));
        }
        if !(self.t0 > 0.0 && self.x0 > 0.0) {
            return Err(Error::params("t0 and x0 must be positive"));
        }
        Ok(())
    }

    pub fn mu(&self) -> f64 {
        self.mu_tilde.re
    }

    pub fn theta(&self) -> f64 {
        self.mu_tilde.im
    }

    /// Warnings for regimes where the scaling assumptions break down.
    pub fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        if self.gc > GC_WARN_THRESHOLD {
            w.push(format!(
                "gc = {} exceeds {GC_WARN_THRESHOLD}; the critical scaling assumes gc << 1",
                self.gc
            ));
        }
        w
    }

    pub fn quadrature(&self) -> QuadratureParams {
        let sg = self.gc.sqrt();
        QuadratureParams {
            gc: self.gc,
            gamma_x: (1.0 - self.mu()) / self.gc,
            gamma_xy: -(self.theta() + self.delta1) / sg,
            gamma_yx: (self.delta1 - self.theta()) / sg,
            gamma_y: 1.0 + self.mu(),
        }
    }

    /// Linear 2×2 block acting on `(α̂, α̂⁺)` at `|k|²`.
    pub fn linear_block(&self, k2: f64) -> Block2 {
        let i = Complex64::i();
        let inv_gc = 1.0 / self.gc;
        let diff = k2 / self.gc.sqrt();
        [
            [
                -(1.0 + i * self.delta1) * inv_gc - i * diff,
                self.mu_tilde * inv_gc,
            ],
            [
                self.mu_tilde.conj() * inv_gc,
                -(1.0 - i * self.delta1) * inv_gc + i * diff,
            ],
        ]
    }
}

/// Linear decay matrix of the quadrature equations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureParams {
    pub gc: f64,
    pub gamma_x: f64,
    pub gamma_xy: f64,
    pub gamma_yx: f64,
    pub gamma_y: f64,
}

impl QuadratureParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.gc.is_finite() && self.gc > 0.0) {
            return Err(Error::params(format!("gc = {} must be positive", self.gc)));
        }
        for (name, v) in [
            ("gamma_x", self.gamma_x),
            ("gamma_xy", self.gamma_xy),
            ("gamma_yx", self.gamma_yx),
            ("gamma_y", self.gamma_y),
        ] {
            if !v.is_finite() {
                return Err(Error::params(format!("{name} must be finite")));
            }
        }
        if self.gamma_y <= 0.0 {
            return Err(Error::params("gamma_y must be positive"));
        }
        Ok(())
    }

    /// Below-threshold quadrature parameters at the tuned point
    /// `θ = Δ₁ = 0`, with `γ_y = 1 + μ` and `μ = 1 - g_c γₓ`.
    pub fn tuned(gc: f64, gamma_x: f64) -> Self {
        Self {
            gc,
            gamma_x,
            gamma_xy: 0.0,
            gamma_yx: 0.0,
            gamma_y: 2.0 - gc * gamma_x,
        }
    }

    /// GL parameters after eliminating `Y` at `g_c → 0`. Exact for the
    /// tuned case `γ_yx = 0`, `γ_y = 2`; otherwise the leading
    /// approximation near threshold, where `γ_y = 1 + μ → 2`.
    pub fn gl(&self) -> GLParams {
        GLParams::new(self.gamma_x, self.gamma_xy)
    }

    /// Linear 2×2 block acting on `(X̂, Ŷ)` at `|k|²`, where `∇² → -k²`.
    pub fn linear_block(&self, k2: f64) -> Block2 {
        let c = |v: f64| Complex64::new(v, 0.0);
        [
            [c(-self.gamma_x), c(-(self.gamma_xy - k2))],
            [
                c(-(self.gamma_yx + k2) / self.gc),
                c(-self.gamma_y / self.gc),
            ],
        ]
    }
}
