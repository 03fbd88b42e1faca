//! Parameter derivation chain and drift/noise definitions for each level of
//! the model hierarchy:
//!
//! full positive-P (signal + pump) → adiabatic signal field → quadratures
//! `(X, Y)` → reduced Ginzburg-Landau equation for `X`.
//!
//! Every drift is split into a part that is linear and diagonal in Fourier
//! space (returned as per-mode rates or 2×2 blocks) and a local remainder.
//! The integrator propagates the linear part exactly and uses the same
//! local terms, so the drift functions here and the steppers cannot drift
//! apart.

mod gl;
mod params;
pub(crate) mod positive_p;
pub(crate) mod quadrature;
mod spectrum;

pub use gl::{gl_drift, potential_functional, GLParams};
pub use params::{PhysicalParams, QuadratureParams, ScaledParams};
pub use positive_p::{
    adiabatic_signal_drift, full_positive_p_drift, quadratures, quadratures_complex,
    AdiabaticDrift, PositivePDrift, Quadratures,
};
pub use quadrature::{xy_drift, xy_drift_real};
pub use spectrum::{optimal_lo_phase, squeezing_spectrum, squeezing_value};

use num_complex::Complex64;

/// 2×2 complex matrix, row-major.
pub type Block2 = [[Complex64; 2]; 2];

use crate::lattice::SpectralOps;

/// Applies a per-mode 2×2 block to the pair `(a, b)` in Fourier space.
pub(crate) fn apply_block(
    ops: &mut SpectralOps,
    block: impl Fn(f64) -> Block2,
    a: &[Complex64],
    b: &[Complex64],
) -> (Vec<Complex64>, Vec<Complex64>) {
    let mut fa = a.to_vec();
    let mut fb = b.to_vec();
    ops.forward(&mut fa);
    ops.forward(&mut fb);
    for (i, (u, v)) in fa.iter_mut().zip(fb.iter_mut()).enumerate() {
        let m = block(ops.k2()[i]);
        let (x, y) = (*u, *v);
        *u = m[0][0] * x + m[0][1] * y;
        *v = m[1][0] * x + m[1][1] * y;
    }
    ops.inverse(&mut fa);
    ops.inverse(&mut fb);
    (fa, fb)
}

pub(crate) fn check_finite_complex(v: &[Complex64], context: &'static str) -> crate::Result<()> {
    match v
        .iter()
        .position(|z| !(z.re.is_finite() && z.im.is_finite()))
    {
        Some(site) => Err(crate::Error::NonFinite { site, context }),
        None => Ok(()),
    }
}
