//! Stochastic time stepping for every model level, deterministic
//! trajectory ensembles and quasi-static scan schedules.
//!
//! All steppers share one structure: the part of the drift that is linear
//! and diagonal (or 2×2 block-diagonal) in Fourier space is propagated with
//! its exact matrix exponential, and the local remainder plus noise enters
//! through the matching `φ₁` integral (Itô, left-point evaluation).

mod config;
mod ensemble;
mod linear;
mod stepper;

pub use config::{
    InitialCondition, IntegratorConfig, Model, ModelLevel, ScanDirection, ScanPoint, ScanSchedule,
    Scheme,
};
pub use ensemble::{
    run_ensemble, run_trajectory, EnsembleResult, EnsembleSpec, PointResult, TrajectoryOutcome,
    UNRELIABLE_DISCARD_FRACTION,
};
pub use stepper::{ModelFields, Stepper, TrajectoryState, FULL_PP_EXTRAS};
