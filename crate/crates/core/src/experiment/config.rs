use std::path::{Path, PathBuf};
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::{
    EnsembleSpec, InitialCondition, IntegratorConfig, Model, ModelLevel, ScanSchedule,
};
use crate::lattice::LatticeGrid;
use crate::models::{GLParams, PhysicalParams, QuadratureParams};
use crate::oracle::McmcConfig;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
}

/// A complete experiment description. Exactly one of `gl`, `quadrature`
/// and `physical` must be present; coarser model levels accept the finer
/// blocks and derive their own parameters from them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelLevel,
    pub grid: GridConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gl: Option<GLParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quadrature: Option<QuadratureParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub physical: Option<PhysicalParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub integrator: Option<IntegratorConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<ScanSchedule>,
    #[serde(default)]
    pub initial: InitialCondition,
    pub trajectories: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mcmc: Option<McmcConfig>,
}

/// Scaled constants reported alongside runs built from a physical block.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DerivedParams {
    pub gc: f64,
    pub t0: f64,
    pub x0: f64,
    pub mu_tilde: Complex64,
    pub quadrature: QuadratureParams,
    /// Linear `(X, Y)` block at `k = 0`.
    pub decay_matrix: [[f64; 2]; 2],
    pub warnings: Vec<String>,
}

/// A validated configuration ready to run.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub model: Model,
    pub grid: Arc<LatticeGrid>,
    pub integrator: IntegratorConfig,
    pub derived: Option<DerivedParams>,
}

impl Resolved {
    pub fn ensemble(&self, cfg: &ExperimentConfig) -> EnsembleSpec {
        EnsembleSpec {
            model: self.model.clone(),
            grid: self.grid.clone(),
            config: self.integrator.clone(),
            schedule: cfg.schedule.clone(),
            initial: cfg.initial,
            trajectories: cfg.trajectories,
            seed: cfg.seed,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text)
            .map_err(|e| Error::config(format!("line {}", e.line()), e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(path.display().to_string(), e.to_string()))?;
        Self::from_json(&text)
    }

    /// Checks cross-field invariants and builds the model.
    pub fn resolve(&self) -> Result<Resolved> {
        let blocks = [
            self.gl.is_some(),
            self.quadrature.is_some(),
            self.physical.is_some(),
        ];
        if blocks.iter().filter(|b| **b).count() != 1 {
            return Err(Error::config(
                "gl|quadrature|physical",
                "exactly one parameter block is required",
            ));
        }
        if self.trajectories == 0 {
            return Err(Error::config("trajectories", "must be at least 1"));
        }
        let g = &self.grid;
        let grid = Arc::new(
            LatticeGrid::new(g.nx, g.ny, g.lx, g.ly)
                .map_err(|e| Error::config("grid", e.to_string()))?,
        );
        let scaled = match &self.physical {
            Some(p) => Some(
                p.derive_scaled()
                    .map_err(|e| Error::config("physical", e.to_string()))?,
            ),
            None => None,
        };
        let derived = scaled.as_ref().map(|s| {
            let q = s.quadrature();
            let m = q.linear_block(0.0);
            DerivedParams {
                gc: s.gc,
                t0: s.t0,
                x0: s.x0,
                mu_tilde: s.mu_tilde,
                decay_matrix: [[m[0][0].re, m[0][1].re], [m[1][0].re, m[1][1].re]],
                quadrature: q,
                warnings: s.warnings(),
            }
        });
        for w in derived.iter().flat_map(|d| &d.warnings) {
            log::warn!("{w}");
        }
        let needs = |what: &str| {
            Err(Error::config(
                "model",
                format!("level {:?} needs a {what} parameter block", self.model),
            ))
        };
        let model = match self.model {
            ModelLevel::Gl => Model::Gl(match (&self.gl, &self.quadrature, &derived) {
                (Some(p), _, _) => p.clone(),
                (_, Some(q), _) => q.gl(),
                (_, _, Some(d)) => d.quadrature.gl(),
                _ => unreachable!(),
            }),
            ModelLevel::Xy => match (&self.quadrature, &derived) {
                (Some(q), _) => Model::Xy(q.clone()),
                (_, Some(d)) => Model::Xy(d.quadrature.clone()),
                _ => return needs("quadrature or physical"),
            },
            ModelLevel::Adiabatic => match &scaled {
                Some(s) => Model::Adiabatic(s.clone()),
                None => return needs("physical"),
            },
            ModelLevel::FullPp => match &self.physical {
                Some(p) => Model::FullPositiveP(p.clone()),
                None => return needs("physical"),
            },
        };
        let path = match self.model {
            ModelLevel::Gl if self.gl.is_some() => "gl",
            _ if self.quadrature.is_some() => "quadrature",
            _ if self.physical.is_some() => "physical",
            _ => "gl",
        };
        model
            .validate()
            .map_err(|e| Error::config(path, e.to_string()))?;
        let integrator = self
            .integrator
            .clone()
            .unwrap_or_else(|| IntegratorConfig::for_model(&model));
        integrator.validate(&model)?;
        if let Some(s) = &self.schedule {
            s.validate(&integrator)?;
            if matches!(model, Model::Adiabatic(_) | Model::FullPositiveP(_)) {
                return Err(Error::config(
                    "schedule",
                    "gamma_x scans are supported at the gl and xy levels only",
                ));
            }
        }
        if let Some(m) = &self.mcmc {
            m.validate()?;
        }
        Ok(Resolved {
            model,
            grid,
            integrator,
            derived,
        })
    }

    /// Parameters for the equilibrium sampler, which only exists at the
    /// GL level.
    pub fn gl_params(&self) -> Result<GLParams> {
        match self.resolve()?.model {
            Model::Gl(p) => Ok(p),
            _ => Err(Error::config(
                "model",
                "the equilibrium oracle needs model = \"gl\"",
            )),
        }
    }

    /// Reference sweep defaults: 100×100 sites on a 40×40 domain, 100
    /// trajectories, `γₓ` stepped from 1.0 through 0 to -0.3.
    pub fn reference_sweep() -> Self {
        let gammas = [
            1.0, 0.8, 0.6, 0.5, 0.4, 0.3, 0.2, 0.15, 0.1, 0.05, 0.0, -0.05, -0.1, -0.2, -0.3,
        ];
        let integrator = IntegratorConfig::new(0.01);
        let hold = integrator.burn_in + integrator.sample_duration;
        Self {
            model: ModelLevel::Gl,
            grid: GridConfig {
                nx: 100,
                ny: 100,
                lx: 40.0,
                ly: 40.0,
            },
            gl: Some(GLParams::new(gammas[0], 0.0)),
            quadrature: None,
            physical: None,
            integrator: Some(integrator),
            schedule: Some(ScanSchedule::stepped(&gammas, hold)),
            initial: InitialCondition::Vacuum,
            trajectories: 100,
            seed: 0,
            output_dir: None,
            mcmc: None,
        }
    }
}
