use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{GLParams, PhysicalParams, QuadratureParams, ScaledParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// Exact linear propagation; local terms through `φ₁`.
    #[default]
    ExponentialEuler,
    /// Linear part implicit, local terms explicit.
    SemiImplicitEuler,
    EulerMaruyama,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelLevel {
    Gl,
    Xy,
    Adiabatic,
    FullPp,
}

/// A model level together with its parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Gl(GLParams),
    Xy(QuadratureParams),
    Adiabatic(ScaledParams),
    FullPositiveP(PhysicalParams),
}

impl Model {
    pub fn level(&self) -> ModelLevel {
        match self {
            Model::Gl(_) => ModelLevel::Gl,
            Model::Xy(_) => ModelLevel::Xy,
            Model::Adiabatic(_) => ModelLevel::Adiabatic,
            Model::FullPositiveP(_) => ModelLevel::FullPp,
        }
    }

    /// Largest time step allowed by the stiffness of the `Y` quadrature,
    /// `0.1 g_c/γ_y`, for the levels that carry it.
    pub fn stiff_dt_limit(&self) -> Option<f64> {
        match self {
            Model::Xy(q) => Some(0.1 * q.gc / q.gamma_y),
            Model::Adiabatic(s) => Some(0.1 * s.gc / (1.0 + s.mu())),
            _ => None,
        }
    }

    /// Default step: 0.01 for GL, `min(0.01, 0.1 g_c/γ_y)` for the
    /// quadrature and adiabatic levels, `0.1/max(γ₀, γ₁)` for full positive-P.
    pub fn default_dt(&self) -> f64 {
        match self {
            Model::Gl(_) => 0.01,
            Model::Xy(_) | Model::Adiabatic(_) => {
                0.01_f64.min(self.stiff_dt_limit().unwrap_or(0.01))
            }
            Model::FullPositiveP(p) => 0.1 / p.gamma0.max(p.gamma1),
        }
    }

    pub fn gamma_x(&self) -> Option<f64> {
        match self {
            Model::Gl(p) => Some(p.gamma_x),
            Model::Xy(q) => Some(q.gamma_x),
            Model::Adiabatic(s) => Some(s.quadrature().gamma_x),
            Model::FullPositiveP(p) => p.derive_scaled().ok().map(|s| s.quadrature().gamma_x),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Model::Gl(p) => p.validate(),
            Model::Xy(q) => q.validate(),
            Model::Adiabatic(s) => s.validate(),
            Model::FullPositiveP(p) => p.derive_scaled().map(|_| ()),
        }
    }
}

fn default_max_norm() -> f64 {
    1e3
}
fn default_burn_in() -> f64 {
    50.0
}
fn default_sample_every() -> f64 {
    1.0
}
fn default_sample_duration() -> f64 {
    100.0
}
fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorConfig {
    pub dt: f64,
    #[serde(default)]
    pub scheme: Scheme,
    /// Divergence guard on `max |field|`.
    #[serde(default = "default_max_norm")]
    pub max_field_norm: f64,
    /// Relaxation time before sampling, at every schedule point.
    #[serde(default = "default_burn_in")]
    pub burn_in: f64,
    /// Time between samples.
    #[serde(default = "default_sample_every")]
    pub sample_every: f64,
    /// Sampling window of a fixed-parameter run.
    #[serde(default = "default_sample_duration")]
    pub sample_duration: f64,
    /// 2/3-rule dealiasing of the local nonlinear terms.
    #[serde(default)]
    pub dealias: bool,
    /// Set false for deterministic runs.
    #[serde(default = "default_true")]
    pub noise: bool,
}

impl IntegratorConfig {
    pub fn new(dt: f64) -> Self {
        Self {
            dt,
            scheme: Scheme::default(),
            max_field_norm: default_max_norm(),
            burn_in: default_burn_in(),
            sample_every: default_sample_every(),
            sample_duration: default_sample_duration(),
            dealias: false,
            noise: true,
        }
    }

    pub fn for_model(model: &Model) -> Self {
        Self::new(model.default_dt())
    }

    pub fn validate(&self, model: &Model) -> Result<()> {
        let check = |name: &str, ok: bool, msg: String| {
            if ok {
                Ok(())
            } else {
                Err(Error::config(format!("integrator.{name}"), msg))
            }
        };
        check(
            "dt",
            self.dt.is_finite() && self.dt > 0.0,
            format!("{} must be positive", self.dt),
        )?;
        check(
            "max_field_norm",
            self.max_field_norm > 0.0,
            "must be positive".into(),
        )?;
        check(
            "burn_in",
            self.burn_in >= 0.0,
            "must be non-negative".into(),
        )?;
        check(
            "sample_every",
            self.sample_every >= self.dt,
            format!("{} must be at least dt", self.sample_every),
        )?;
        check(
            "sample_duration",
            self.sample_duration >= self.sample_every,
            "must allow at least one sample".into(),
        )?;
        if let Some(limit) = model.stiff_dt_limit() {
            check(
                "dt",
                self.dt <= limit * (1.0 + 1e-9),
                format!(
                    "{} exceeds the stiffness limit 0.1 gc/gamma_y = {limit}",
                    self.dt
                ),
            )?;
        }
        Ok(())
    }

    /// `round(duration / dt)`.
    pub fn steps(&self, duration: f64) -> usize {
        (duration / self.dt).round().max(0.0) as usize
    }

    pub fn stride(&self) -> usize {
        self.steps(self.sample_every).max(1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanDirection {
    #[default]
    Forward,
    Backward,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanPoint {
    pub gamma_x: f64,
    pub hold: f64,
}

/// Quasi-static scan of `γₓ`. Each point is held for `hold` time units;
/// the first `burn_in` of every hold is discarded. With `ramp`, `γₓ` moves
/// linearly from the previous point to the new one during the burn-in
/// instead of jumping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSchedule {
    pub points: Vec<ScanPoint>,
    #[serde(default)]
    pub direction: ScanDirection,
    #[serde(default)]
    pub ramp: bool,
}

impl ScanSchedule {
    pub fn stepped(values: &[f64], hold: f64) -> Self {
        Self {
            points: values
                .iter()
                .map(|&gamma_x| ScanPoint { gamma_x, hold })
                .collect(),
            direction: ScanDirection::Forward,
            ramp: false,
        }
    }

    /// Same points in reverse order, tagged backward.
    pub fn reversed(&self) -> Self {
        let mut points = self.points.clone();
        points.reverse();
        Self {
            points,
            direction: match self.direction {
                ScanDirection::Forward => ScanDirection::Backward,
                ScanDirection::Backward => ScanDirection::Forward,
            },
            ramp: self.ramp,
        }
    }

    pub fn validate(&self, config: &IntegratorConfig) -> Result<()> {
        if self.points.is_empty() {
            return Err(Error::config("schedule.points", "must not be empty"));
        }
        for (i, p) in self.points.iter().enumerate() {
            if !p.gamma_x.is_finite() {
                return Err(Error::config(
                    format!("schedule.points[{i}].gamma_x"),
                    "must be finite",
                ));
            }
            if p.hold < config.burn_in + config.sample_every {
                return Err(Error::config(
                    format!("schedule.points[{i}].hold"),
                    format!(
                        "{} must cover burn_in ({}) plus one sample interval ({})",
                        p.hold, config.burn_in, config.sample_every
                    ),
                ));
            }
        }
        Ok(())
    }
}

/// Starting fields. `Vacuum` is all-zero signal (the full positive-P pump
/// starts at its empty-cavity value `ℰ/γ̃₀`); the other variants set the
/// critical quadrature `X`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialCondition {
    #[default]
    Vacuum,
    Uniform {
        value: f64,
    },
    Random {
        mean: f64,
        amplitude: f64,
    },
}
