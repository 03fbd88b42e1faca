//! Stochastic field simulation of the planar optical parametric oscillator
//! near its critical point.
//!
//! The crate covers the full model hierarchy, from the positive-P equations
//! for signal and pump fields down to the Ginzburg-Landau (Lifshitz) equation
//! for the critical quadrature, together with ensemble observables and an
//! independent Metropolis sampler of the stationary distribution.
//!
//! Module map:
//! - [`lattice`]: periodic grids, fields, spectral operators, white noise.
//! - [`models`]: parameter chain, drift functions and the squeezing spectrum.
//! - [`integrator`]: stochastic steppers, trajectory ensembles, scan schedules.
//! - [`observables`]: moments, structure factors, phase classification.
//! - [`oracle`]: Metropolis Monte Carlo of `exp(-V[X])`.
//! - [`experiment`]: configuration, manifests, CSV output and CLI commands.

pub mod error;
pub mod experiment;
pub mod integrator;
pub mod lattice;
pub mod models;
pub mod observables;
pub mod oracle;
pub mod parallel;

pub use error::{Error, Result};
