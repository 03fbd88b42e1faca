use num_complex::Complex64;

use super::{apply_block, check_finite_complex, QuadratureParams};
use crate::error::{Error, Result};
use crate::lattice::{RealField, SpectralOps};

/// Local (non-spectral) part of the quadrature equations, per site:
/// `(-(X² + g_c Y²)X, -(X² + g_c Y²)Y)`.
///
/// The `Y` component already includes the `1/g_c` prefactor of the `Y`
/// equation.
#[inline]
pub(crate) fn xy_local(x: Complex64, y: Complex64, gc: f64) -> (Complex64, Complex64) {
    let s = x * x + gc * y * y;
    (-s * x, -s * y)
}

/// Drift of the coupled quadrature equations.
///
/// Returns `(dX/dτ, dY/dτ)` where the `Y` rate includes the explicit `1/g_c`
/// stiffness. Fields are complex because positive-P quadratures need not be
/// real on a single trajectory.
pub fn xy_drift(
    x: &[Complex64],
    y: &[Complex64],
    q: &QuadratureParams,
    ops: &mut SpectralOps,
) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    if x.len() != ops.grid().len() || y.len() != x.len() {
        return Err(Error::GridMismatch);
    }
    check_finite_complex(x, "xy drift X input")?;
    check_finite_complex(y, "xy drift Y input")?;
    let (mut dx, mut dy) = apply_block(ops, |k2| q.linear_block(k2), x, y);
    for i in 0..x.len() {
        let (nx, ny) = xy_local(x[i], y[i], q.gc);
        dx[i] += nx;
        dy[i] += ny;
    }
    check_finite_complex(&dx, "xy drift X")?;
    check_finite_complex(&dy, "xy drift Y")?;
    Ok((dx, dy))
}

/// [`xy_drift`] for real fields; the drift of real fields is real.
pub fn xy_drift_real(
    x: &RealField,
    y: &RealField,
    q: &QuadratureParams,
    ops: &mut SpectralOps,
) -> Result<(RealField, RealField)> {
    if x.grid() != y.grid() {
        return Err(Error::GridMismatch);
    }
    let (dx, dy) = xy_drift(&x.to_complex(), &y.to_complex(), q, ops)?;
    Ok((
        RealField::from_values(x.grid().clone(), dx.iter().map(|z| z.re).collect())?,
        RealField::from_values(x.grid().clone(), dy.iter().map(|z| z.re).collect())?,
    ))
}
