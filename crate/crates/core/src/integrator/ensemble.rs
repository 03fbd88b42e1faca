use std::sync::Arc;

use super::{InitialCondition, IntegratorConfig, Model, ModelFields, ScanSchedule, Stepper};
use crate::error::{Error, Result};
use crate::lattice::{stream_seed, LatticeGrid};
use crate::observables::{
    EnsembleAccumulator, EnsembleStats, TrajectoryAccumulator, TrajectorySummary,
};
use crate::parallel::{map_indexed, Execution};

/// Fraction of discarded trajectories above which a point is unreliable.
pub const UNRELIABLE_DISCARD_FRACTION: f64 = 0.10;

/// Everything needed to run an ensemble reproducibly.
#[derive(Debug, Clone)]
pub struct EnsembleSpec {
    pub model: Model,
    pub grid: Arc<LatticeGrid>,
    pub config: IntegratorConfig,
    /// `None` runs one fixed-parameter point of length
    /// `burn_in + sample_duration`.
    pub schedule: Option<ScanSchedule>,
    pub initial: InitialCondition,
    pub trajectories: usize,
    pub seed: u64,
}

impl EnsembleSpec {
    pub fn new(model: Model, grid: Arc<LatticeGrid>, trajectories: usize, seed: u64) -> Self {
        let config = IntegratorConfig::for_model(&model);
        Self {
            model,
            grid,
            config,
            schedule: None,
            initial: InitialCondition::Vacuum,
            trajectories,
            seed,
        }
    }

    fn plan(&self) -> Vec<(Option<f64>, f64)> {
        match &self.schedule {
            Some(s) => s.points.iter().map(|p| (Some(p.gamma_x), p.hold)).collect(),
            None => vec![(None, self.config.burn_in + self.config.sample_duration)],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trajectories == 0 {
            return Err(Error::config("trajectories", "must be at least 1"));
        }
        self.config.validate(&self.model)?;
        if let Some(s) = &self.schedule {
            s.validate(&self.config)?;
        }
        Ok(())
    }
}

/// Per-point summaries of one trajectory.
#[derive(Debug, Clone)]
pub struct TrajectoryOutcome {
    pub index: usize,
    /// `None` from the point at which the trajectory diverged onward.
    pub points: Vec<Option<TrajectorySummary>>,
    pub diverged_at: Option<usize>,
    pub final_fields: ModelFields,
}

/// Runs trajectory `index` of `spec` with a clone of `stepper`.
pub fn run_trajectory(
    spec: &EnsembleSpec,
    stepper: &Stepper,
    index: usize,
) -> Result<TrajectoryOutcome> {
    let mut stepper = stepper.clone();
    let mut st = stepper.initial_state(spec.initial, stream_seed(spec.seed, index as u64))?;
    let cfg = &spec.config;
    let burn = cfg.steps(cfg.burn_in);
    let stride = cfg.stride();
    let ramp = spec.schedule.as_ref().is_some_and(|s| s.ramp);
    let mut points = Vec::new();
    let mut diverged_at = None;
    let mut previous: Option<f64> = None;
    for (p, (gamma_x, hold)) in spec.plan().into_iter().enumerate() {
        let samples = cfg.steps(hold).saturating_sub(burn) / stride;
        match (gamma_x, previous) {
            (Some(g), Some(g0)) if ramp && burn > 0 => {
                for s in 0..burn {
                    stepper.set_gamma_x(g0 + (g - g0) * (s + 1) as f64 / burn as f64)?;
                    stepper.step(&mut st);
                }
            }
            (Some(g), _) => {
                stepper.set_gamma_x(g)?;
                stepper.advance(&mut st, burn);
            }
            (None, _) => stepper.advance(&mut st, burn),
        }
        previous = gamma_x;
        let mut acc = TrajectoryAccumulator::default();
        for _ in 0..samples {
            stepper.advance(&mut st, stride);
            if st.diverged {
                break;
            }
            acc.push(&stepper.observe(&st));
        }
        if st.diverged {
            diverged_at = Some(p);
            log::warn!(
                "trajectory {index} diverged at t = {:.4} (point {p})",
                st.time
            );
            break;
        }
        points.push(acc.finish(&spec.grid));
    }
    Ok(TrajectoryOutcome {
        index,
        points,
        diverged_at,
        final_fields: st.fields,
    })
}

/// Ensemble statistics at one schedule point.
#[derive(Debug, Clone)]
pub struct PointResult {
    pub gamma_x: Option<f64>,
    /// `None` when every trajectory had diverged.
    pub stats: Option<EnsembleStats>,
    pub used: usize,
    pub discarded: usize,
}

impl PointResult {
    pub fn discard_fraction(&self) -> f64 {
        let total = self.used + self.discarded;
        if total == 0 {
            0.0
        } else {
            self.discarded as f64 / total as f64
        }
    }

    pub fn unreliable(&self) -> bool {
        self.discard_fraction() > UNRELIABLE_DISCARD_FRACTION
    }
}

#[derive(Debug, Clone)]
pub struct EnsembleResult {
    pub points: Vec<PointResult>,
    pub trajectories: usize,
    pub diverged: usize,
    /// Any point lost more than 10% of its trajectories.
    pub unreliable: bool,
    pub final_fields: Vec<ModelFields>,
}

/// Runs all trajectories of `spec` and reduces them point by point in
/// trajectory-index order. The result is identical for every
/// [`Execution`].
pub fn run_ensemble(spec: &EnsembleSpec, exec: Execution) -> Result<EnsembleResult> {
    spec.validate()?;
    let stepper = Stepper::new(spec.model.clone(), spec.grid.clone(), spec.config.clone())?;
    if spec.schedule.is_some() {
        stepper
            .clone()
            .set_gamma_x(spec.model.gamma_x().unwrap_or(0.0))?;
    }
    let outcomes = map_indexed(spec.trajectories, exec, |i| {
        run_trajectory(spec, &stepper, i)
    });
    let outcomes: Vec<TrajectoryOutcome> = outcomes.into_iter().collect::<Result<_>>()?;
    let plan = spec.plan();
    let mut points = Vec::with_capacity(plan.len());
    for (p, (gamma_x, _)) in plan.iter().enumerate() {
        let mut acc = EnsembleAccumulator::new();
        let mut discarded = 0;
        for o in &outcomes {
            match o.points.get(p) {
                Some(Some(s)) => acc.insert(o.index, s.clone()),
                _ => discarded += 1,
            }
        }
        let label = gamma_x.or_else(|| spec.model.gamma_x());
        let point = PointResult {
            gamma_x: label,
            stats: (!acc.is_empty()).then(|| acc.finish(&spec.grid, label)),
            used: acc.len(),
            discarded,
        };
        if point.unreliable() {
            log::warn!(
                "point {p}: {:.0}% of trajectories diverged",
                100.0 * point.discard_fraction()
            );
        }
        points.push(point);
    }
    let diverged = outcomes.iter().filter(|o| o.diverged_at.is_some()).count();
    Ok(EnsembleResult {
        unreliable: points.iter().any(PointResult::unreliable),
        points,
        trajectories: spec.trajectories,
        diverged,
        final_fields: outcomes.into_iter().map(|o| o.final_fields).collect(),
    })
}
