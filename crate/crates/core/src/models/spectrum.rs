use super::QuadratureParams;
use crate::error::{Error, Result};

/// Squeezing spectrum of the `Y` quadrature at frequency `omega` with the
/// Gaussian-factorized critical correction `⟨X²⟩`:
///
/// `V(Ω) = 1 - [1 - g_c(⟨X²⟩ + γₓ)] / [(g_cΩ/2)² + (1 + g_c(⟨X²⟩ - γₓ)/2)²]`.
///
/// Vacuum noise is 1. Setting `x2 = 0` gives the linearized curve.
pub fn squeezing_value(omega: f64, x2: f64, gamma_x: f64, gc: f64) -> f64 {
    let numerator = 1.0 - gc * (x2 + gamma_x);
    let a = 0.5 * gc * omega;
    let b = 1.0 + 0.5 * gc * (x2 - gamma_x);
    1.0 - numerator / (a * a + b * b)
}

pub fn squeezing_spectrum(omega: &[f64], x2: f64, q: &QuadratureParams) -> Result<Vec<f64>> {
    if !(x2.is_finite() && x2 >= 0.0) {
        return Err(Error::params(format!("<X^2> = {x2} must be non-negative")));
    }
    Ok(omega
        .iter()
        .map(|&w| squeezing_value(w, x2, q.gamma_x, q.gc))
        .collect())
}

/// Local-oscillator phase `θ = k² + Δ₁ + 2g_c⟨XY⟩` that minimizes feedback
/// of critical fluctuations into the squeezed quadrature at mode `k`.
pub fn optimal_lo_phase(k: f64, delta1: f64, gc: f64, xy_moment: f64) -> f64 {
    k * k + delta1 + 2.0 * gc * xy_moment
}
