use std::collections::BTreeMap;
use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;

use crate::lattice::{LatticeGrid, SpectralOps};

/// Mean with standard error; `stderr` is NaN when fewer than two
/// independent units contributed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
}

impl Estimate {
    pub fn has_error_bar(&self) -> bool {
        self.stderr.is_finite()
    }

    /// `|self - other|` in units of the combined standard error.
    pub fn pull(&self, other: &Estimate) -> f64 {
        (self.mean - other.mean).abs() / self.stderr.hypot(other.stderr)
    }
}

/// Sample mean and standard error of the mean.
pub fn estimate(values: &[f64]) -> Estimate {
    let n = values.len();
    if n == 0 {
        return Estimate {
            mean: f64::NAN,
            stderr: f64::NAN,
        };
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return Estimate {
            mean,
            stderr: f64::NAN,
        };
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    Estimate {
        mean,
        stderr: (var / n as f64).sqrt(),
    }
}

/// Names of the site-averaged moments, in storage order.
pub const MOMENT_NAMES: [&str; 7] = ["x_mean", "x2", "x4", "y_mean", "y2", "xy", "x_imag_ms"];

/// Reductions of one field snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    /// Site averages in [`MOMENT_NAMES`] order. Products are taken without
    /// conjugation and the real part is kept, which gives normally ordered
    /// moments for positive-P fields and the plain moments for real fields.
    pub moments: [f64; 7],
    pub structure_factor: Vec<f64>,
    /// Unnormalized `k = 0` Fourier amplitude of `X`.
    pub x_zero_mode: Complex64,
    /// Model-specific scalar observables.
    pub extras: Vec<f64>,
}

impl Sample {
    pub fn from_fields(
        x: &[Complex64],
        y: &[Complex64],
        ops: &mut SpectralOps,
        extras: Vec<f64>,
    ) -> Self {
        let n = x.len() as f64;
        let mut acc = [Complex64::new(0.0, 0.0); 6];
        let mut imag_ms = 0.0;
        for (&a, &b) in x.iter().zip(y) {
            let a2 = a * a;
            acc[0] += a;
            acc[1] += a2;
            acc[2] += a2 * a2;
            acc[3] += b;
            acc[4] += b * b;
            acc[5] += a * b;
            imag_ms += a.im * a.im;
        }
        let mut moments = [0.0; 7];
        for (m, s) in moments.iter_mut().zip(acc) {
            *m = s.re / n;
        }
        moments[6] = imag_ms / n;
        let x_zero_mode = x.iter().sum();
        Self {
            moments,
            structure_factor: ops.structure_factor_complex(x),
            x_zero_mode,
            extras,
        }
    }
}

/// Running sums over the time samples of one trajectory.
#[derive(Debug, Clone, Default)]
pub struct TrajectoryAccumulator {
    count: usize,
    moments: [f64; 7],
    s: Vec<f64>,
    zero_mode: Complex64,
    zero_mode_sq: Complex64,
    extras: Vec<f64>,
}

impl TrajectoryAccumulator {
    pub fn push(&mut self, sample: &Sample) {
        if self.count == 0 {
            self.s = vec![0.0; sample.structure_factor.len()];
            self.extras = vec![0.0; sample.extras.len()];
        }
        self.count += 1;
        for (a, b) in self.moments.iter_mut().zip(&sample.moments) {
            *a += b;
        }
        for (a, b) in self.s.iter_mut().zip(&sample.structure_factor) {
            *a += b;
        }
        for (a, b) in self.extras.iter_mut().zip(&sample.extras) {
            *a += b;
        }
        self.zero_mode += sample.x_zero_mode;
        self.zero_mode_sq += sample.x_zero_mode * sample.x_zero_mode;
    }

    pub fn count(&self) -> usize {
        self.count
    }

    /// Time averages; `None` if nothing was sampled.
    pub fn finish(&self, grid: &LatticeGrid) -> Option<TrajectorySummary> {
        if self.count == 0 {
            return None;
        }
        let c = self.count as f64;
        let norm = grid.cell_area() / grid.len() as f64;
        let mean0 = self.zero_mode / c;
        let connected = norm * (self.zero_mode_sq / c - mean0 * mean0).re;
        Some(TrajectorySummary {
            moments: self.moments.map(|m| m / c),
            structure_factor: self.s.iter().map(|s| s / c).collect(),
            s0_connected: connected,
            extras: self.extras.iter().map(|e| e / c).collect(),
            samples: self.count,
        })
    }
}

/// Time-averaged observables of one trajectory, the independent unit for
/// error bars.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySummary {
    pub moments: [f64; 7],
    pub structure_factor: Vec<f64>,
    /// Variance of the `k = 0` Fourier amplitude about the trajectory's own
    /// time mean, in structure-factor units.
    pub s0_connected: f64,
    pub extras: Vec<f64>,
    pub samples: usize,
}

/// Site-averaged moments of the quadratures.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentSet {
    pub x_mean: Estimate,
    pub x2: Estimate,
    pub x4: Estimate,
    pub y_mean: Estimate,
    pub y2: Estimate,
    pub xy: Estimate,
    /// Mean square of the imaginary part of `X` (zero for real models).
    pub x_imag_ms: Estimate,
    pub n_trajectories: usize,
    pub n_samples: usize,
}

impl MomentSet {
    pub fn as_rows(&self) -> [(&'static str, Estimate); 7] {
        [
            ("x_mean", self.x_mean),
            ("x2", self.x2),
            ("x4", self.x4),
            ("y_mean", self.y_mean),
            ("y2", self.y2),
            ("xy", self.xy),
            ("x_imag_ms", self.x_imag_ms),
        ]
    }

    pub fn has_error_bars(&self) -> bool {
        self.n_trajectories >= 2
    }
}

/// Ensemble-averaged `S(k)` per mode with standard errors.
#[derive(Debug, Clone, PartialEq)]
pub struct StructureFactor {
    pub grid: Arc<LatticeGrid>,
    pub mean: Vec<f64>,
    pub stderr: Vec<f64>,
    pub gamma_x: Option<f64>,
    pub n_trajectories: usize,
}

impl StructureFactor {
    pub fn at(&self, mode: usize) -> Estimate {
        Estimate {
            mean: self.mean[mode],
            stderr: self.stderr[mode],
        }
    }

    /// Mode index of the largest mean value.
    pub fn peak(&self) -> usize {
        self.mean
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, &v)| {
                if v > best.1 {
                    (i, v)
                } else {
                    best
                }
            })
            .0
    }

    /// Mode indices sorted by `|k|²`, then by index.
    pub fn modes_by_k2(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.mean.len()).collect();
        idx.sort_by(|&a, &b| {
            self.grid
                .k2(a)
                .partial_cmp(&self.grid.k2(b))
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.cmp(&b))
        });
        idx
    }
}

/// Everything measured at one control-parameter value.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleStats {
    pub moments: MomentSet,
    pub structure_factor: StructureFactor,
    pub s0_connected: Estimate,
    pub extras: Vec<Estimate>,
}

/// Reduces trajectory summaries in the given order.
pub fn accumulate(
    summaries: &[&TrajectorySummary],
    grid: &Arc<LatticeGrid>,
    gamma_x: Option<f64>,
) -> EnsembleStats {
    let n = summaries.len();
    let column = |f: &dyn Fn(&TrajectorySummary) -> f64| -> Estimate {
        let v: Vec<f64> = summaries.iter().map(|s| f(s)).collect();
        estimate(&v)
    };
    let m = |k: usize| column(&|s| s.moments[k]);
    let moments = MomentSet {
        x_mean: m(0),
        x2: m(1),
        x4: m(2),
        y_mean: m(3),
        y2: m(4),
        xy: m(5),
        x_imag_ms: m(6),
        n_trajectories: n,
        n_samples: summaries.iter().map(|s| s.samples).sum(),
    };
    let modes = grid.len();
    let (mean, stderr) = (0..modes)
        .map(|k| {
            let e = column(&|s| s.structure_factor[k]);
            (e.mean, e.stderr)
        })
        .unzip();
    let n_extras = summaries.first().map_or(0, |s| s.extras.len());
    EnsembleStats {
        moments,
        structure_factor: StructureFactor {
            grid: grid.clone(),
            mean,
            stderr,
            gamma_x,
            n_trajectories: n,
        },
        s0_connected: column(&|s| s.s0_connected),
        extras: (0..n_extras).map(|k| column(&|s| s.extras[k])).collect(),
    }
}

/// Trajectory summaries keyed by trajectory index.
///
/// `merge` is a keyed union, so it is associative and commutative, and
/// `finish` always reduces in index order: the merged result does not
/// depend on how trajectories were distributed over workers.
#[derive(Debug, Clone, Default)]
pub struct EnsembleAccumulator {
    summaries: BTreeMap<usize, TrajectorySummary>,
}

impl EnsembleAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, index: usize, summary: TrajectorySummary) {
        self.summaries.insert(index, summary);
    }

    pub fn merge(mut self, other: EnsembleAccumulator) -> Self {
        self.summaries.extend(other.summaries);
        self
    }

    pub fn len(&self) -> usize {
        self.summaries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.summaries.is_empty()
    }

    pub fn finish(&self, grid: &Arc<LatticeGrid>, gamma_x: Option<f64>) -> EnsembleStats {
        let refs: Vec<&TrajectorySummary> = self.summaries.values().collect();
        accumulate(&refs, grid, gamma_x)
    }
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    use super::*;

    fn grid() -> Arc<LatticeGrid> {
        Arc::new(LatticeGrid::square(8, 4.0).unwrap())
    }

    fn summary_from(fields: &[Vec<f64>], ops: &mut SpectralOps) -> TrajectorySummary {
        let mut acc = TrajectoryAccumulator::default();
        for f in fields {
            let x: Vec<Complex64> = f.iter().map(|&v| Complex64::new(v, 0.0)).collect();
            acc.push(&Sample::from_fields(&x, &x, ops, vec![]));
        }
        acc.finish(ops.grid()).unwrap()
    }

    #[test]
    fn zero_samples_give_zero_statistics() {
        let g = grid();
        let mut ops = SpectralOps::new(g.clone());
        let zero = vec![0.0; g.len()];
        let s: Vec<TrajectorySummary> = (0..3)
            .map(|_| summary_from(&[zero.clone(), zero.clone()], &mut ops))
            .collect();
        let refs: Vec<&TrajectorySummary> = s.iter().collect();
        let stats = accumulate(&refs, &g, None);
        for (_, e) in stats.moments.as_rows() {
            assert_eq!(e.mean, 0.0);
            assert_eq!(e.stderr, 0.0);
        }
        assert!(stats.structure_factor.mean.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn single_trajectory_has_no_error_bars() {
        let g = grid();
        let mut ops = SpectralOps::new(g.clone());
        let s = summary_from(&[vec![1.0; g.len()]], &mut ops);
        let stats = accumulate(&[&s], &g, None);
        assert!(!stats.moments.has_error_bars());
        assert!(!stats.moments.x2.has_error_bar());
        assert_eq!(stats.moments.x2.mean, 1.0);
    }

    #[test]
    fn synthetic_gaussian_variance_is_recovered() {
        let g = grid();
        let mut ops = SpectralOps::new(g.clone());
        let v: f64 = 2.5;
        let normal = Normal::new(0.0, v.sqrt()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(123);
        let summaries: Vec<TrajectorySummary> = (0..50)
            .map(|_| {
                let fields: Vec<Vec<f64>> = (0..20)
                    .map(|_| (0..g.len()).map(|_| normal.sample(&mut rng)).collect())
                    .collect();
                summary_from(&fields, &mut ops)
            })
            .collect();
        let refs: Vec<&TrajectorySummary> = summaries.iter().collect();
        let stats = accumulate(&refs, &g, None);
        let x2 = stats.moments.x2;
        assert!((x2.mean - v).abs() < 3.0 * x2.stderr, "{x2:?}");
        // Gaussian: <X^4> = 3 v^2
        let x4 = stats.moments.x4;
        assert!((x4.mean - 3.0 * v * v).abs() < 3.0 * x4.stderr, "{x4:?}");
        assert!(x4.mean >= x2.mean * x2.mean);
        // white noise: S(k) = v dx dy for every mode
        let sf = &stats.structure_factor;
        let expect = v * g.cell_area();
        let pulls: Vec<f64> = (0..g.len())
            .map(|k| (sf.mean[k] - expect) / sf.stderr[k])
            .collect();
        // S(k) = S(-k) for real fields: count each independent mode once
        let bad = (0..g.len())
            .filter(|&k| k <= g.mirror(k) && pulls[k].abs() > 3.5)
            .count();
        assert!(bad <= 1, "{pulls:?}");
    }

    #[test]
    fn moments_satisfy_parseval_on_same_samples() {
        let g = grid();
        let mut ops = SpectralOps::new(g.clone());
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let normal = Normal::new(0.3, 1.0).unwrap();
        let fields: Vec<Vec<f64>> = (0..5)
            .map(|_| (0..g.len()).map(|_| normal.sample(&mut rng)).collect())
            .collect();
        let s = summary_from(&fields, &mut ops);
        let via_s: f64 = s.structure_factor.iter().sum::<f64>() / g.area();
        assert!((via_s - s.moments[1]).abs() < 1e-6);
        // S(k) = S(-k) for real input
        for k in 0..g.len() {
            assert_eq!(s.structure_factor[k], s.structure_factor[g.mirror(k)]);
        }
    }

    #[test]
    fn connected_zero_mode_variance_removes_the_mean() {
        let g = grid();
        let mut ops = SpectralOps::new(g.clone());
        // constant field: zero-mode variance in time is zero
        let s = summary_from(&[vec![0.7; g.len()], vec![0.7; g.len()]], &mut ops);
        assert!(s.s0_connected.abs() < 1e-12);
        assert!(s.structure_factor[0] > 0.0);
        let s = summary_from(&[vec![1.0; g.len()], vec![-1.0; g.len()]], &mut ops);
        // S(0) of a uniform unit field is the area
        assert!((s.s0_connected - g.area()).abs() < 1e-9);
    }

    #[test]
    fn merge_is_order_independent() {
        let g = grid();
        let mut ops = SpectralOps::new(g.clone());
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let normal = Normal::new(0.0, 1.0).unwrap();
        let summaries: Vec<TrajectorySummary> = (0..6)
            .map(|_| {
                let f: Vec<f64> = (0..g.len()).map(|_| normal.sample(&mut rng)).collect();
                summary_from(&[f], &mut ops)
            })
            .collect();
        let mut parts: Vec<EnsembleAccumulator> = Vec::new();
        for (i, s) in summaries.iter().enumerate() {
            let mut a = EnsembleAccumulator::new();
            a.insert(i, s.clone());
            parts.push(a);
        }
        let forward = parts
            .iter()
            .cloned()
            .fold(EnsembleAccumulator::new(), |a, b| a.merge(b));
        let backward = parts
            .iter()
            .rev()
            .cloned()
            .fold(EnsembleAccumulator::new(), |a, b| a.merge(b));
        let (a, b) = (forward.finish(&g, None), backward.finish(&g, None));
        assert_eq!(a, b);
        assert_eq!(a.moments.n_trajectories, 6);
    }
}
