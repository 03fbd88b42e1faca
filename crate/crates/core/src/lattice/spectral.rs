use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::{LatticeGrid, RealField};
use crate::error::Result;

/// Cached FFT plans and scratch space for one grid.
///
/// Transforms are unnormalized forward, `1/N`-normalized inverse. Cloning
/// shares the plans and allocates fresh scratch, so each worker holds its
/// own instance.
pub struct SpectralOps {
    grid: Arc<LatticeGrid>,
    fwd_x: Arc<dyn Fft<f64>>,
    fwd_y: Arc<dyn Fft<f64>>,
    inv_x: Arc<dyn Fft<f64>>,
    inv_y: Arc<dyn Fft<f64>>,
    k2: Vec<f64>,
    scratch: Vec<Complex64>,
    columns: Vec<Complex64>,
}

impl Clone for SpectralOps {
    fn clone(&self) -> Self {
        Self {
            grid: self.grid.clone(),
            fwd_x: self.fwd_x.clone(),
            fwd_y: self.fwd_y.clone(),
            inv_x: self.inv_x.clone(),
            inv_y: self.inv_y.clone(),
            k2: self.k2.clone(),
            scratch: self.scratch.clone(),
            columns: self.columns.clone(),
        }
    }
}

impl std::fmt::Debug for SpectralOps {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpectralOps")
            .field("nx", &self.grid.nx())
            .field("ny", &self.grid.ny())
            .finish()
    }
}

impl SpectralOps {
    pub fn new(grid: Arc<LatticeGrid>) -> Self {
        let mut planner = FftPlanner::new();
        let fwd_x = planner.plan_fft_forward(grid.nx());
        let fwd_y = planner.plan_fft_forward(grid.ny());
        let inv_x = planner.plan_fft_inverse(grid.nx());
        let inv_y = planner.plan_fft_inverse(grid.ny());
        let scratch_len = [&fwd_x, &fwd_y, &inv_x, &inv_y]
            .iter()
            .map(|p| p.get_inplace_scratch_len())
            .max()
            .unwrap_or(0);
        let zero = Complex64::new(0.0, 0.0);
        Self {
            k2: grid.k2_table(),
            scratch: vec![zero; scratch_len],
            columns: vec![zero; grid.len()],
            grid,
            fwd_x,
            fwd_y,
            inv_x,
            inv_y,
        }
    }

    pub fn grid(&self) -> &Arc<LatticeGrid> {
        &self.grid
    }

    pub fn k2(&self) -> &[f64] {
        &self.k2
    }

    fn transform(&mut self, buf: &mut [Complex64], inverse: bool) {
        let (nx, ny) = (self.grid.nx(), self.grid.ny());
        debug_assert_eq!(buf.len(), nx * ny);
        let (px, py) = if inverse {
            (&self.inv_x, &self.inv_y)
        } else {
            (&self.fwd_x, &self.fwd_y)
        };
        // rows are contiguous; rustfft processes every chunk of length nx
        px.process_with_scratch(buf, &mut self.scratch);
        if ny > 1 {
            for iy in 0..ny {
                for ix in 0..nx {
                    self.columns[ix * ny + iy] = buf[iy * nx + ix];
                }
            }
            py.process_with_scratch(&mut self.columns, &mut self.scratch);
            for ix in 0..nx {
                for iy in 0..ny {
                    buf[iy * nx + ix] = self.columns[ix * ny + iy];
                }
            }
        }
    }

    /// In-place unnormalized forward transform `Σ_r f(r) e^{-ik·r}`.
    pub fn forward(&mut self, buf: &mut [Complex64]) {
        self.transform(buf, false);
    }

    /// In-place inverse transform including the `1/N` factor.
    pub fn inverse(&mut self, buf: &mut [Complex64]) {
        self.transform(buf, true);
        let scale = 1.0 / buf.len() as f64;
        for z in buf.iter_mut() {
            *z *= scale;
        }
    }

    /// Multiplies each Fourier mode of a complex field by `multiplier[k]`.
    pub fn apply_multiplier(&mut self, buf: &mut [Complex64], multiplier: impl Fn(usize) -> f64) {
        self.forward(buf);
        for (i, z) in buf.iter_mut().enumerate() {
            *z *= multiplier(i);
        }
        self.inverse(buf);
    }

    fn real_multiplier(
        &mut self,
        f: &RealField,
        multiplier: impl Fn(f64) -> f64,
    ) -> Result<RealField> {
        f.check_finite("spectral operator input")?;
        let mut buf = f.to_complex();
        let k2 = std::mem::take(&mut self.k2);
        self.apply_multiplier(&mut buf, |i| multiplier(k2[i]));
        self.k2 = k2;
        RealField::from_values(f.grid().clone(), buf.into_iter().map(|z| z.re).collect())
    }

    /// Spectral `∇²`: each mode multiplied by `-|k|²`.
    pub fn laplacian(&mut self, f: &RealField) -> Result<RealField> {
        self.real_multiplier(f, |k2| -k2)
    }

    /// Spectral `∇⁴`: each mode multiplied by `|k|⁴`.
    pub fn biharmonic(&mut self, f: &RealField) -> Result<RealField> {
        self.real_multiplier(f, |k2| k2 * k2)
    }

    /// `∇²` of a complex field, in place.
    pub fn laplacian_complex(&mut self, buf: &mut [Complex64]) {
        let k2 = std::mem::take(&mut self.k2);
        self.apply_multiplier(buf, |i| -k2[i]);
        self.k2 = k2;
    }

    /// Per-mode `(dx dy)²/(lx ly) · Re[f̂(k) f̂(-k)]`.
    ///
    /// For real input this is `|f̂(k)|²` with the normalization under which
    /// a linear mode with stationary relaxation rate `λ(k)` and noise
    /// strength 2 has `S(k) = 1/λ(k)`.
    pub fn structure_factor_complex(&mut self, values: &[Complex64]) -> Vec<f64> {
        let mut buf = values.to_vec();
        self.forward(&mut buf);
        let norm = self.grid.cell_area() / self.grid.len() as f64;
        (0..buf.len())
            .map(|i| norm * (buf[i] * buf[self.grid.mirror(i)]).re)
            .collect()
    }

    pub fn structure_factor(&mut self, f: &RealField) -> Result<Vec<f64>> {
        f.check_finite("structure factor input")?;
        let mut buf = f.to_complex();
        self.forward(&mut buf);
        let norm = self.grid.cell_area() / self.grid.len() as f64;
        Ok(buf.iter().map(|z| norm * z.norm_sqr()).collect())
    }

    /// Spatial integral of `|∇f|²`, evaluated in Fourier space.
    pub fn gradient_energy(&mut self, f: &RealField) -> Result<f64> {
        let s = self.structure_factor(f)?;
        Ok(s.iter().zip(&self.k2).map(|(s, k2)| s * k2).sum())
    }
}

pub fn laplacian(f: &RealField) -> Result<RealField> {
    SpectralOps::new(f.grid().clone()).laplacian(f)
}

pub fn biharmonic(f: &RealField) -> Result<RealField> {
    SpectralOps::new(f.grid().clone()).biharmonic(f)
}

pub fn structure_factor_transform(f: &RealField) -> Result<Vec<f64>> {
    SpectralOps::new(f.grid().clone()).structure_factor(f)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn grid(n: usize, l: f64) -> Arc<LatticeGrid> {
        Arc::new(LatticeGrid::square(n, l).unwrap())
    }

    fn rel_err(a: &[f64], b: &[f64]) -> f64 {
        let scale = b.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(1e-300);
        a.iter()
            .zip(b)
            .fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()))
            / scale
    }

    /// Smooth periodic test function built from a handful of low modes.
    fn smooth_field(g: Arc<LatticeGrid>) -> RealField {
        let (lx, ly) = (g.lx(), g.ly());
        RealField::from_fn(g, move |x, y| {
            let (a, b) = (2.0 * PI * x / lx, 2.0 * PI * y / ly);
            (a.sin() + 0.5 * (2.0 * b).cos()).exp() + 0.3 * (a + b).cos()
        })
    }

    #[test]
    fn laplacian_of_constant_vanishes() {
        let f = RealField::constant(grid(16, 5.0), 3.7);
        let l = laplacian(&f).unwrap();
        assert!(l.max_abs() < 1e-12);
        assert!(biharmonic(&f).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn cosine_is_an_eigenfunction() {
        let g = grid(32, 20.0);
        let k1 = 2.0 * PI / g.lx();
        let f = RealField::from_fn(g, |x, _| (k1 * x).cos());
        let lap = laplacian(&f).unwrap();
        let expect: Vec<f64> = f.values().iter().map(|v| -k1 * k1 * v).collect();
        assert!(rel_err(lap.values(), &expect) < 1e-10);
        let bih = biharmonic(&f).unwrap();
        let expect: Vec<f64> = f.values().iter().map(|v| k1.powi(4) * v).collect();
        assert!(rel_err(bih.values(), &expect) < 1e-10);
    }

    /// Five-point stencil, the finite-difference oracle.
    fn five_point(f: &RealField) -> Vec<f64> {
        let g = f.grid();
        let (nx, ny, dx, dy) = (g.nx(), g.ny(), g.dx(), g.dy());
        let v = f.values();
        (0..g.len())
            .map(|i| {
                let (ix, iy) = g.coords(i);
                let e = v[g.index((ix + 1) % nx, iy)];
                let w = v[g.index((ix + nx - 1) % nx, iy)];
                let n = v[g.index(ix, (iy + 1) % ny)];
                let s = v[g.index(ix, (iy + ny - 1) % ny)];
                (e + w - 2.0 * v[i]) / (dx * dx) + (n + s - 2.0 * v[i]) / (dy * dy)
            })
            .collect()
    }

    #[test]
    fn finite_difference_converges_to_spectral_at_second_order() {
        let mut errors = Vec::new();
        for n in [16, 32, 64] {
            let f = smooth_field(grid(n, 2.0 * PI));
            let spec = laplacian(&f).unwrap();
            let fd = five_point(&f);
            let err = spec
                .values()
                .iter()
                .zip(&fd)
                .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
            errors.push(err);
        }
        for w in errors.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!(order >= 1.9, "observed order {order}, errors {errors:?}");
        }
    }

    #[test]
    fn biharmonic_is_laplacian_squared() {
        let g = grid(24, 7.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let vals = (0..g.len()).map(|_| rng.random::<f64>() - 0.5).collect();
        let f = RealField::from_values(g, vals).unwrap();
        let mut ops = SpectralOps::new(f.grid().clone());
        let a = ops.biharmonic(&f).unwrap();
        let lap = ops.laplacian(&f).unwrap();
        let b = ops.laplacian(&lap).unwrap();
        assert!(rel_err(a.values(), b.values()) < 1e-8);
    }

    #[test]
    fn non_finite_input_is_rejected() {
        let mut f = RealField::zeros(grid(8, 1.0));
        f.values_mut()[5] = f64::NAN;
        match laplacian(&f) {
            Err(crate::Error::NonFinite { site, .. }) => assert_eq!(site, 5),
            other => panic!("expected NonFinite, got {other:?}"),
        }
        assert!(structure_factor_transform(&f).is_err());
    }

    #[test]
    fn structure_factor_of_zero_and_pure_mode() {
        let g = grid(32, 20.0);
        let zero = RealField::zeros(g.clone());
        assert!(structure_factor_transform(&zero)
            .unwrap()
            .iter()
            .all(|&s| s == 0.0));

        let amp = 1.7;
        let k1 = 2.0 * PI / g.lx();
        let f = RealField::from_fn(g.clone(), |x, _| amp * (k1 * x).cos());
        let s = structure_factor_transform(&f).unwrap();
        let expect = amp * amp * g.area() / 4.0;
        for (i, &si) in s.iter().enumerate() {
            let (mx, my) = g.mode_numbers(i);
            if my == 0 && mx.abs() == 1 {
                assert!((si - expect).abs() < 1e-10 * expect);
            } else {
                assert!(si.abs() < 1e-10 * expect, "mode {mx},{my}: {si}");
            }
        }
    }

    #[test]
    fn parseval_relates_structure_factor_to_mean_square() {
        let g = Arc::new(LatticeGrid::new(12, 8, 3.0, 5.0).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let vals = (0..g.len())
            .map(|_| rng.random::<f64>() * 4.0 - 2.0)
            .collect();
        let f = RealField::from_values(g.clone(), vals).unwrap();
        let s = structure_factor_transform(&f).unwrap();
        // direct sum over sites as the oracle
        let direct: f64 = f.values().iter().map(|v| v * v).sum::<f64>() / g.len() as f64;
        let via_s: f64 = s.iter().sum::<f64>() / g.area();
        assert!((direct - via_s).abs() < 1e-12 * direct);
    }

    #[test]
    fn gradient_energy_matches_by_parts_identity() {
        let f = smooth_field(grid(32, 2.0 * PI));
        let mut ops = SpectralOps::new(f.grid().clone());
        let e = ops.gradient_energy(&f).unwrap();
        let lap = ops.laplacian(&f).unwrap();
        let by_parts: f64 = -f
            .values()
            .iter()
            .zip(lap.values())
            .map(|(a, b)| a * b)
            .sum::<f64>()
            * f.grid().cell_area();
        assert!((e - by_parts).abs() < 1e-10 * e.abs());
    }

    fn field_strategy() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, f64, f64)> {
        (
            prop::collection::vec(-10.0..10.0_f64, 64),
            prop::collection::vec(-10.0..10.0_f64, 64),
            -5.0..5.0_f64,
            -5.0..5.0_f64,
        )
    }

    proptest! {
        #[test]
        fn spectral_round_trip((re, im, _, _) in field_strategy()) {
            let g = Arc::new(LatticeGrid::square(8, 3.0).unwrap());
            let mut ops = SpectralOps::new(g);
            let orig: Vec<Complex64> = re.iter().zip(&im).map(|(&a, &b)| Complex64::new(a, b)).collect();
            let mut buf = orig.clone();
            ops.forward(&mut buf);
            ops.inverse(&mut buf);
            let scale = orig.iter().fold(1e-300_f64, |m, z| m.max(z.norm()));
            for (a, b) in buf.iter().zip(&orig) {
                prop_assert!((a - b).norm() <= 1e-12 * scale);
            }
        }

        #[test]
        fn operators_are_linear((f, g, a, b) in field_strategy()) {
            let grid = Arc::new(LatticeGrid::square(8, 3.0).unwrap());
            let f = RealField::from_values(grid.clone(), f).unwrap();
            let g = RealField::from_values(grid.clone(), g).unwrap();
            let mut ops = SpectralOps::new(grid);
            let combo = f.combine(a, &g, b).unwrap();
            for op in [SpectralOps::laplacian, SpectralOps::biharmonic] {
                let lhs = op(&mut ops, &combo).unwrap();
                let rhs = op(&mut ops, &f).unwrap().combine(a, &op(&mut ops, &g).unwrap(), b).unwrap();
                let scale = rhs.max_abs().max(1.0);
                for (x, y) in lhs.values().iter().zip(rhs.values()) {
                    prop_assert!((x - y).abs() <= 1e-10 * scale);
                }
            }
        }
    }
}
