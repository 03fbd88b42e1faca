use serde::Serialize;

use super::MomentSet;
use crate::models::{optimal_lo_phase, squeezing_value};

/// Corrected and linearized squeezing spectra on a common frequency grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SqueezingCurves {
    pub gamma_x: f64,
    pub gc: f64,
    /// `⟨X²⟩` used for the corrected curve, with its standard error.
    pub x2: f64,
    pub x2_stderr: f64,
    /// Local-oscillator phase at `k = 0` implied by the measured `⟨XY⟩`.
    pub theta: f64,
    pub omega: Vec<f64>,
    pub corrected: Vec<f64>,
    pub linearized: Vec<f64>,
}

/// Wires a measured `⟨X²⟩` into the spectrum formula. The linearized curve
/// uses `⟨X²⟩ = 0`.
pub fn assemble_squeezing(
    gamma_x: f64,
    gc: f64,
    moments: &MomentSet,
    omega: &[f64],
    delta1: f64,
) -> SqueezingCurves {
    let x2 = moments.x2.mean.max(0.0);
    SqueezingCurves {
        gamma_x,
        gc,
        x2,
        x2_stderr: moments.x2.stderr,
        theta: optimal_lo_phase(0.0, delta1, gc, moments.xy.mean),
        omega: omega.to_vec(),
        corrected: omega
            .iter()
            .map(|&w| squeezing_value(w, x2, gamma_x, gc))
            .collect(),
        linearized: omega
            .iter()
            .map(|&w| squeezing_value(w, 0.0, gamma_x, gc))
            .collect(),
    }
}
