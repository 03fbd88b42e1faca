use serde::Serialize;

use super::{MomentSet, StructureFactor};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Phase {
    Disordered,
    UniformOrdered,
    ModulatedOrdered,
}

/// Statistics of one system size.
#[derive(Debug, Clone, Copy)]
pub struct PhaseInput<'a> {
    pub structure_factor: &'a StructureFactor,
    pub moments: &'a MomentSet,
}

/// Area-scaling exponents separating the phases. The peak of `S(k)` grows
/// like `area^e` with `e → 1` for long-range order and `e → 0` without it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhaseThresholds {
    pub ordered_exponent: f64,
    pub disordered_exponent: f64,
}

impl Default for PhaseThresholds {
    fn default() -> Self {
        Self {
            ordered_exponent: 0.7,
            disordered_exponent: 0.3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseLabel {
    pub phase: Phase,
    pub peak_k: (f64, f64),
    pub peak_k2: f64,
    /// Amplitude of the ordered component, `√(Σ_shell S(k) / area)`.
    pub order_parameter: f64,
    /// Share of `⟨X²⟩` carried by the peak shell.
    pub ordered_fraction: f64,
    pub scaling_exponent: f64,
    /// False when the exponent falls between the two thresholds.
    pub confident: bool,
}

/// Labels the phase from the growth of the structure-factor peak between a
/// smaller and a larger system.
pub fn classify_phase(
    small: PhaseInput<'_>,
    large: PhaseInput<'_>,
    thresholds: &PhaseThresholds,
) -> Result<PhaseLabel> {
    let (gs, gl) = (&small.structure_factor.grid, &large.structure_factor.grid);
    if gl.area() <= gs.area() {
        return Err(Error::params("the second system must have the larger area"));
    }
    let peak_small = small.structure_factor.mean[small.structure_factor.peak()];
    let peak = large.structure_factor.peak();
    let peak_large = large.structure_factor.mean[peak];
    if !(peak_small > 0.0 && peak_large > 0.0) {
        return Err(Error::params("structure factor has no positive peak"));
    }
    let exponent = (peak_large / peak_small).ln() / (gl.area() / gs.area()).ln();

    let peak_k = gl.wavevector(peak);
    let peak_k2 = gl.k2(peak);
    let kp = peak_k2.sqrt();
    let half = 0.5 * gl.dk();
    let shell: f64 = (0..gl.len())
        .filter(|&i| (gl.k2(i).sqrt() - kp).abs() <= half)
        .map(|i| large.structure_factor.mean[i])
        .sum();
    let order_sq = shell / gl.area();
    let x2 = large.moments.x2.mean;

    let ordered = exponent >= thresholds.ordered_exponent;
    let confident = ordered || exponent <= thresholds.disordered_exponent;
    let phase = if !ordered {
        Phase::Disordered
    } else if kp < half {
        Phase::UniformOrdered
    } else {
        Phase::ModulatedOrdered
    };
    Ok(PhaseLabel {
        phase,
        peak_k,
        peak_k2,
        order_parameter: order_sq.sqrt(),
        ordered_fraction: if x2 > 0.0 { order_sq / x2 } else { 0.0 },
        scaling_exponent: exponent,
        confident,
    })
}
