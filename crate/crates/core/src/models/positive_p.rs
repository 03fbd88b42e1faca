use num_complex::Complex64;

use super::{PhysicalParams, ScaledParams};
use crate::error::{Error, Result};
use crate::lattice::{ComplexFieldPair, RealField, SpectralOps};

/// Drift of the scaled signal pair together with the per-site amplitudes
/// multiplying the independent real noises `ξ` and `ξ⁺`.
#[derive(Debug, Clone)]
pub struct AdiabaticDrift {
    pub drift: ComplexFieldPair,
    pub noise_plus: Vec<Complex64>,
    pub noise_cross: Vec<Complex64>,
}

/// Local part of the adiabatic signal equation: pump-depletion saturation
/// `-4g_c α²α⁺` and its partner.
#[inline]
pub(crate) fn adiabatic_local(a: Complex64, a_plus: Complex64, gc: f64) -> (Complex64, Complex64) {
    let c = -4.0 * gc * a * a_plus;
    (c * a, c * a_plus)
}

/// Multiplicative noise amplitudes `√(μ̃ - 4g_c²α²)/√g_c` (principal branch)
/// and the conjugate-form partner.
#[inline]
pub(crate) fn adiabatic_noise(
    a: Complex64,
    a_plus: Complex64,
    s: &ScaledParams,
) -> (Complex64, Complex64) {
    let inv_sqrt_gc = 1.0 / s.gc.sqrt();
    let gc2 = 4.0 * s.gc * s.gc;
    (
        (s.mu_tilde - gc2 * a * a).sqrt() * inv_sqrt_gc,
        (s.mu_tilde.conj() - gc2 * a_plus * a_plus).sqrt() * inv_sqrt_gc,
    )
}

/// Drift of the scaled signal field `α` after adiabatic pump elimination,
///
/// `∂α/∂τ = (1/g_c)[-(1+iΔ₁)α + (μ̃ - 4g_c²α²)α⁺] + (i/√g_c)∇²α + noise`,
///
/// and the partner equation for `α⁺` obtained by conjugating the constants.
pub fn adiabatic_signal_drift(
    pair: &ComplexFieldPair,
    s: &ScaledParams,
    ops: &mut SpectralOps,
) -> Result<AdiabaticDrift> {
    if pair.grid().as_ref() != ops.grid().as_ref() {
        return Err(Error::GridMismatch);
    }
    pair.check_finite("adiabatic drift input")?;
    let (mut dp, mut dc) =
        super::apply_block(ops, |k2| s.linear_block(k2), &pair.plus, &pair.cross);
    let n = pair.plus.len();
    let mut noise_plus = Vec::with_capacity(n);
    let mut noise_cross = Vec::with_capacity(n);
    for i in 0..n {
        let (a, ap) = (pair.plus[i], pair.cross[i]);
        let (np, nc) = adiabatic_local(a, ap, s.gc);
        dp[i] += np;
        dc[i] += nc;
        let (bp, bc) = adiabatic_noise(a, ap, s);
        noise_plus.push(bp);
        noise_cross.push(bc);
    }
    Ok(AdiabaticDrift {
        drift: ComplexFieldPair::from_parts(pair.grid().clone(), dp, dc)?,
        noise_plus,
        noise_cross,
    })
}

/// Drifts of the full positive-P signal and pump pairs plus the signal
/// noise amplitudes `√(χA₀)` and `√(χ*A₀⁺)`. The pump is noiseless.
#[derive(Debug, Clone)]
pub struct PositivePDrift {
    pub signal: ComplexFieldPair,
    pub pump: ComplexFieldPair,
    pub noise_plus: Vec<Complex64>,
    pub noise_cross: Vec<Complex64>,
}

/// Local terms of the full model at one site:
/// `(signal, signal⁺, pump, pump⁺)` increments excluding the diagonal
/// linear rates.
#[inline]
pub(crate) fn full_pp_local(
    a1: Complex64,
    a1p: Complex64,
    a0: Complex64,
    a0p: Complex64,
    p: &PhysicalParams,
) -> [Complex64; 4] {
    let chi = p.chi;
    let chi_c = p.chi.conj();
    [
        chi * a1p * a0,
        chi_c * a1 * a0p,
        p.pump - 0.5 * chi_c * a1 * a1,
        p.pump.conj() - 0.5 * chi * a1p * a1p,
    ]
}

#[inline]
pub(crate) fn full_pp_noise(
    a0: Complex64,
    a0p: Complex64,
    p: &PhysicalParams,
) -> (Complex64, Complex64) {
    ((p.chi * a0).sqrt(), (p.chi.conj() * a0p).sqrt())
}

/// Drift of the unreduced positive-P equations for signal `A₁` and pump `A₀`.
///
/// Lengths are those of the grid and times are in the units of the damping
/// rates of `p`.
pub fn full_positive_p_drift(
    signal: &ComplexFieldPair,
    pump: &ComplexFieldPair,
    p: &PhysicalParams,
    ops: &mut SpectralOps,
) -> Result<PositivePDrift> {
    if signal.grid() != pump.grid() || signal.grid().as_ref() != ops.grid().as_ref() {
        return Err(Error::GridMismatch);
    }
    let diag = |ops: &mut SpectralOps, v: &[Complex64], rate: &dyn Fn(f64) -> Complex64| {
        let mut buf = v.to_vec();
        ops.forward(&mut buf);
        for (i, z) in buf.iter_mut().enumerate() {
            *z *= rate(ops.k2()[i]);
        }
        ops.inverse(&mut buf);
        buf
    };
    let conj_signal = |k2: f64| p.signal_rate(k2).conj();
    let conj_pump = |k2: f64| p.pump_rate(k2).conj();
    let mut d1 = diag(ops, &signal.plus, &|k2| p.signal_rate(k2));
    let mut d1p = diag(ops, &signal.cross, &conj_signal);
    let mut d0 = diag(ops, &pump.plus, &|k2| p.pump_rate(k2));
    let mut d0p = diag(ops, &pump.cross, &conj_pump);
    let n = signal.plus.len();
    let mut noise_plus = Vec::with_capacity(n);
    let mut noise_cross = Vec::with_capacity(n);
    for i in 0..n {
        let (a1, a1p, a0, a0p) = (signal.plus[i], signal.cross[i], pump.plus[i], pump.cross[i]);
        let local = full_pp_local(a1, a1p, a0, a0p, p);
        d1[i] += local[0];
        d1p[i] += local[1];
        d0[i] += local[2];
        d0p[i] += local[3];
        let (bp, bc) = full_pp_noise(a0, a0p, p);
        noise_plus.push(bp);
        noise_cross.push(bc);
    }
    let grid = signal.grid().clone();
    Ok(PositivePDrift {
        signal: ComplexFieldPair::from_parts(grid.clone(), d1, d1p)?,
        pump: ComplexFieldPair::from_parts(grid, d0, d0p)?,
        noise_plus,
        noise_cross,
    })
}

/// Homodyne quadratures `X = √g_c(α + α⁺)`, `Y = i(α⁺ - α)`.
pub fn quadratures_complex(
    plus: &[Complex64],
    cross: &[Complex64],
    gc: f64,
) -> (Vec<Complex64>, Vec<Complex64>) {
    let sg = gc.sqrt();
    let i = Complex64::i();
    plus.iter()
        .zip(cross)
        .map(|(&a, &ap)| (sg * (a + ap), i * (ap - a)))
        .unzip()
}

/// Real parts of the quadratures plus the imaginary parts, which vanish only
/// on average for positive-P trajectories.
#[derive(Debug, Clone)]
pub struct Quadratures {
    pub x: RealField,
    pub y: RealField,
    pub x_imag: Vec<f64>,
    pub y_imag: Vec<f64>,
}

impl Quadratures {
    pub fn max_imag(&self) -> f64 {
        self.x_imag
            .iter()
            .chain(&self.y_imag)
            .fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

pub fn quadratures(pair: &ComplexFieldPair, gc: f64) -> Result<Quadratures> {
    pair.check_finite("quadrature input")?;
    let (x, y) = quadratures_complex(&pair.plus, &pair.cross, gc);
    let grid = pair.grid().clone();
    Ok(Quadratures {
        x: RealField::from_values(grid.clone(), x.iter().map(|z| z.re).collect())?,
        y: RealField::from_values(grid, y.iter().map(|z| z.re).collect())?,
        x_imag: x.iter().map(|z| z.im).collect(),
        y_imag: y.iter().map(|z| z.im).collect(),
    })
}
