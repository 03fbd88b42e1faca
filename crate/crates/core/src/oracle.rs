//! Metropolis sampler of the stationary distribution `P[X] ∝ exp(-V[X])`
//! of the GL equation.
//!
//! The sampler evaluates `V` with its own compact stencils (forward
//! differences for `|∇X|²`, the 5-point Laplacian for `(∇²X)²`) rather
//! than with the spectral operators of the simulator, so the two share no
//! discretization code. On the lattice this replaces `k²` by
//! `κ² = Σ (2 - 2cos(k dx))/dx²` in every quadratic term; see [`fd_k2`].

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{stream_seed, LatticeGrid, NoiseStream, RealField, SpectralOps};
use crate::models::GLParams;
use crate::observables::{EnsembleAccumulator, EnsembleStats, Sample, TrajectoryAccumulator};
use crate::parallel::{map_indexed, Execution};

const TARGET_ACCEPTANCE: f64 = 0.44;

fn default_sweeps() -> usize {
    20_000
}
fn default_burn_in() -> usize {
    2_000
}
fn default_thin() -> usize {
    5
}
fn default_chains() -> usize {
    16
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McmcConfig {
    /// Gaussian proposal width. `None` picks it from the local curvature
    /// and tunes it toward 44% acceptance during burn-in only.
    #[serde(default)]
    pub proposal_width: Option<f64>,
    #[serde(default = "default_sweeps")]
    pub sweeps: usize,
    #[serde(default = "default_burn_in")]
    pub burn_in_sweeps: usize,
    #[serde(default = "default_thin")]
    pub thin: usize,
    /// Independent chains; error bars come from their spread.
    #[serde(default = "default_chains")]
    pub chains: usize,
    #[serde(default)]
    pub seed: u64,
}

impl Default for McmcConfig {
    fn default() -> Self {
        Self {
            proposal_width: None,
            sweeps: default_sweeps(),
            burn_in_sweeps: default_burn_in(),
            thin: default_thin(),
            chains: default_chains(),
            seed: 0,
        }
    }
}

impl McmcConfig {
    pub fn validate(&self) -> Result<()> {
        if let Some(w) = self.proposal_width {
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::config(
                    "mcmc.proposal_width",
                    format!("{w} must be positive"),
                ));
            }
        }
        if self.thin == 0 || self.sweeps < self.thin {
            return Err(Error::config(
                "mcmc.thin",
                "must be at least 1 and at most sweeps",
            ));
        }
        if self.chains == 0 {
            return Err(Error::config("mcmc.chains", "must be at least 1"));
        }
        Ok(())
    }
}

/// Lattice `κ²` of mode `index` for the oracle's stencils.
pub fn fd_k2(grid: &LatticeGrid, index: usize) -> f64 {
    let (kx, ky) = grid.wavevector(index);
    let (dx, dy) = (grid.dx(), grid.dy());
    (2.0 - 2.0 * (kx * dx).cos()) / (dx * dx) + (2.0 - 2.0 * (ky * dy).cos()) / (dy * dy)
}

/// Stationary `S(k) = 1/λ(κ²)` of the quadratic part of the oracle's `V`
/// at noise strength 2.
pub fn fd_lambda(p: &GLParams, grid: &LatticeGrid, index: usize) -> f64 {
    p.lambda(fd_k2(grid, index))
}

/// Gaussian-theory `⟨X²⟩ = Σₖ 1/λ / (lx ly)` with either the spectral
/// `k²` or the oracle's `κ²`. Their difference estimates the
/// discretization gap between Langevin runs and this sampler.
pub fn gaussian_x2(p: &GLParams, grid: &LatticeGrid, stencil: bool) -> f64 {
    let sum: f64 = (0..grid.len())
        .map(|i| {
            let k2 = if stencil { fd_k2(grid, i) } else { grid.k2(i) };
            1.0 / p.lambda(k2)
        })
        .sum();
    sum / grid.area()
}

struct Stencil {
    right: Vec<usize>,
    left: Vec<usize>,
    up: Vec<usize>,
    down: Vec<usize>,
    inv_dx2: f64,
    inv_dy2: f64,
    weight: f64,
}

impl Stencil {
    fn new(grid: &LatticeGrid) -> Self {
        let (nx, ny) = (grid.nx(), grid.ny());
        let at = |ix: usize, iy: usize| grid.index(ix % nx, iy % ny);
        let n = grid.len();
        let mut s = Self {
            right: Vec::with_capacity(n),
            left: Vec::with_capacity(n),
            up: Vec::with_capacity(n),
            down: Vec::with_capacity(n),
            inv_dx2: 1.0 / (grid.dx() * grid.dx()),
            inv_dy2: 1.0 / (grid.dy() * grid.dy()),
            weight: grid.cell_area() / 4.0,
        };
        for i in 0..n {
            let (ix, iy) = grid.coords(i);
            s.right.push(at(ix + 1, iy));
            s.left.push(at(ix + nx - 1, iy));
            s.up.push(at(ix, iy + 1));
            s.down.push(at(ix, iy + ny - 1));
        }
        s
    }

    /// Energy density of site `i` times the cell area.
    #[inline]
    fn site(&self, x: &[f64], i: usize, p: &GLParams) -> f64 {
        let xi = x[i];
        let (r, l, u, d) = (
            x[self.right[i]],
            x[self.left[i]],
            x[self.up[i]],
            x[self.down[i]],
        );
        let grad2 = (r - xi) * (r - xi) * self.inv_dx2 + (u - xi) * (u - xi) * self.inv_dy2;
        let lap = (r + l - 2.0 * xi) * self.inv_dx2 + (u + d - 2.0 * xi) * self.inv_dy2;
        let quartic = if p.cubic { xi * xi * xi * xi } else { 0.0 };
        self.weight * (2.0 * p.gamma_x * xi * xi + quartic - p.gamma_xy * grad2 + lap * lap)
    }

    /// Sites whose energy density depends on `x[i]`, without repeats.
    fn neighbourhood(&self, i: usize) -> ([usize; 5], usize) {
        let mut out = [i; 5];
        let mut n = 1;
        for j in [self.right[i], self.left[i], self.up[i], self.down[i]] {
            if !out[..n].contains(&j) {
                out[n] = j;
                n += 1;
            }
        }
        (out, n)
    }

    fn local_delta(&self, x: &mut [f64], i: usize, new: f64, p: &GLParams) -> f64 {
        let (sites, n) = self.neighbourhood(i);
        let before: f64 = sites[..n].iter().map(|&j| self.site(x, j, p)).sum();
        let old = x[i];
        x[i] = new;
        let after: f64 = sites[..n].iter().map(|&j| self.site(x, j, p)).sum();
        x[i] = old;
        after - before
    }
}

/// `V[X]` with the oracle's finite-difference stencils.
pub fn energy_fd(x: &RealField, p: &GLParams) -> f64 {
    let st = Stencil::new(x.grid());
    (0..x.values().len())
        .map(|i| st.site(x.values(), i, p))
        .sum()
}

/// `V[X'] - V[X]` for `X'` equal to `X` except `X'[site] = new`, from the
/// local stencil only.
pub fn local_energy_change(x: &RealField, p: &GLParams, site: usize, new: f64) -> f64 {
    let st = Stencil::new(x.grid());
    let mut v = x.values().to_vec();
    st.local_delta(&mut v, site, new, p)
}

/// Metropolis acceptance probability `min(1, exp(-(V' - V)))`.
#[inline]
pub fn acceptance_probability(delta_v: f64) -> f64 {
    if delta_v <= 0.0 {
        1.0
    } else {
        (-delta_v).exp()
    }
}

/// Mutable sampler state reused across sweeps.
pub struct Sweeper {
    stencil: Stencil,
    params: GLParams,
    pub width: f64,
}

impl Sweeper {
    pub fn new(grid: &LatticeGrid, params: GLParams, width: f64) -> Self {
        Self {
            stencil: Stencil::new(grid),
            params,
            width,
        }
    }

    /// Width `2.4/√c`, with `c` the curvature of the site potential in
    /// `X` at zero field (floored at the cell area).
    pub fn auto_width(grid: &LatticeGrid, p: &GLParams) -> f64 {
        let inv2 = 1.0 / (grid.dx() * grid.dx()) + 1.0 / (grid.dy() * grid.dy());
        // second derivative of the quadratic part of V in one site value
        let w = grid.cell_area() / 4.0;
        let c = w
            * (4.0 * p.gamma_x
                + 4.0 * p.gamma_xy.abs() * inv2
                + 2.0 * (4.0 * inv2 * inv2 + 2.0 * inv2 * inv2));
        2.4 / c.max(grid.cell_area()).sqrt()
    }

    /// One sequential sweep over all sites; returns the number accepted.
    pub fn sweep(&self, x: &mut [f64], rng: &mut NoiseStream) -> usize {
        let mut accepted = 0;
        for i in 0..x.len() {
            let new = x[i] + self.width * rng.standard_normal();
            let dv = self.stencil.local_delta(x, i, new, &self.params);
            if rng.uniform() < acceptance_probability(dv) {
                x[i] = new;
                accepted += 1;
            }
        }
        accepted
    }
}

/// One sweep of single-site updates; returns the updated field and the
/// acceptance rate of the sweep.
pub fn metropolis_sweep(
    x: &RealField,
    p: &GLParams,
    width: f64,
    rng: &mut NoiseStream,
) -> Result<(RealField, f64)> {
    x.check_finite("metropolis input")?;
    let sweeper = Sweeper::new(x.grid(), p.clone(), width);
    let mut v = x.values().to_vec();
    let acc = sweeper.sweep(&mut v, rng);
    let n = v.len() as f64;
    Ok((RealField::from_values(x.grid().clone(), v)?, acc as f64 / n))
}

/// Integrated autocorrelation time with Sokal's automatic window
/// (`W ≥ 5τ`), in units of the series spacing.
pub fn integrated_autocorrelation_time(series: &[f64]) -> f64 {
    let n = series.len();
    if n < 4 {
        return 1.0;
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let d: Vec<f64> = series.iter().map(|v| v - mean).collect();
    let c0 = d.iter().map(|v| v * v).sum::<f64>() / n as f64;
    if c0 <= 0.0 {
        return 1.0;
    }
    let mut tau = 1.0;
    for t in 1..n / 2 {
        let ct = d[..n - t]
            .iter()
            .zip(&d[t..])
            .map(|(a, b)| a * b)
            .sum::<f64>()
            / n as f64;
        tau += 2.0 * ct / c0;
        if t as f64 >= 5.0 * tau {
            break;
        }
    }
    tau.max(1.0)
}

#[derive(Debug, Clone)]
pub struct McmcResult {
    pub stats: EnsembleStats,
    /// Acceptance over the sampling sweeps of all chains.
    pub acceptance: f64,
    /// Chain-averaged autocorrelation time of the site mean of `X²`, in
    /// recorded samples.
    pub iat_x2: f64,
    pub widths: Vec<f64>,
    pub warnings: Vec<String>,
}

struct ChainOutput {
    summary: Option<crate::observables::TrajectorySummary>,
    accepted: usize,
    proposed: usize,
    iat: f64,
    width: f64,
}

fn run_chain(p: &GLParams, grid: &Arc<LatticeGrid>, c: &McmcConfig, index: usize) -> ChainOutput {
    let mut rng = NoiseStream::from_seed(stream_seed(c.seed, index as u64));
    let mut ops = SpectralOps::new(grid.clone());
    let width = c
        .proposal_width
        .unwrap_or_else(|| Sweeper::auto_width(grid, p));
    let mut sweeper = Sweeper::new(grid, p.clone(), width);
    let n = grid.len();
    let mut x = vec![0.0; n];
    for _ in 0..c.burn_in_sweeps {
        let acc = sweeper.sweep(&mut x, &mut rng) as f64 / n as f64;
        if c.proposal_width.is_none() {
            sweeper.width *= (acc - TARGET_ACCEPTANCE).exp();
        }
    }
    let mut acc = TrajectoryAccumulator::default();
    let mut series = Vec::with_capacity(c.sweeps / c.thin);
    let mut accepted = 0;
    for s in 1..=c.sweeps {
        accepted += sweeper.sweep(&mut x, &mut rng);
        if s % c.thin == 0 {
            let xc: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
            let mut y = xc.clone();
            ops.laplacian_complex(&mut y);
            y.iter_mut().for_each(|v| *v *= 0.5);
            let sample = Sample::from_fields(&xc, &y, &mut ops, Vec::new());
            series.push(sample.moments[1]);
            acc.push(&sample);
        }
    }
    ChainOutput {
        summary: acc.finish(grid),
        accepted,
        proposed: c.sweeps * n,
        iat: integrated_autocorrelation_time(&series),
        width: sweeper.width,
    }
}

/// Runs independent chains from `X = 0` and reduces them like Langevin
/// trajectories, in chain-index order.
pub fn sample_equilibrium(
    p: &GLParams,
    grid: &Arc<LatticeGrid>,
    c: &McmcConfig,
    exec: Execution,
) -> Result<McmcResult> {
    p.validate()?;
    c.validate()?;
    let chains = map_indexed(c.chains, exec, |i| run_chain(p, grid, c, i));
    let mut acc = EnsembleAccumulator::new();
    let (mut accepted, mut proposed) = (0, 0);
    for (i, ch) in chains.iter().enumerate() {
        if let Some(s) = &ch.summary {
            acc.insert(i, s.clone());
        }
        accepted += ch.accepted;
        proposed += ch.proposed;
    }
    let acceptance = accepted as f64 / proposed.max(1) as f64;
    let mut warnings = Vec::new();
    if !(0.05..=0.95).contains(&acceptance) {
        let w = format!("acceptance rate {acceptance:.3} outside [0.05, 0.95]");
        log::warn!("{w}");
        warnings.push(w);
    }
    Ok(McmcResult {
        stats: acc.finish(grid, Some(p.gamma_x)),
        acceptance,
        iat_x2: chains.iter().map(|c| c.iat).sum::<f64>() / chains.len() as f64,
        widths: chains.iter().map(|c| c.width).collect(),
        warnings,
    })
}
