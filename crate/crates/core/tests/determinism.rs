//! Results depend on the seed only, never on the worker count.

use std::sync::Arc;

use num_complex::Complex64;
use opo_critical::integrator::{run_ensemble, EnsembleSpec, Model, ScanSchedule};
use opo_critical::lattice::LatticeGrid;
use opo_critical::models::{GLParams, PhysicalParams, QuadratureParams};
use opo_critical::oracle::{sample_equilibrium, McmcConfig};
use opo_critical::parallel::Execution;

fn modes() -> [Execution; 3] {
    [
        Execution::Sequential,
        Execution::Threads(2),
        Execution::Threads(3),
    ]
}

fn check(spec: &EnsembleSpec) {
    let runs: Vec<_> = modes()
        .iter()
        .map(|&e| run_ensemble(spec, e).unwrap())
        .collect();
    for r in &runs[1..] {
        assert_eq!(r.final_fields, runs[0].final_fields);
        for (a, b) in r.points.iter().zip(&runs[0].points) {
            assert_eq!(a.stats, b.stats);
        }
    }
}

#[test]
fn gl_scan_is_identical_across_worker_counts() {
    let grid = Arc::new(LatticeGrid::square(8, 5.0).unwrap());
    let mut spec = EnsembleSpec::new(Model::Gl(GLParams::new(0.5, 1.0)), grid, 5, 99);
    spec.config.burn_in = 1.0;
    spec.config.sample_every = 0.1;
    spec.schedule = Some(ScanSchedule::stepped(&[0.5, 0.0, -0.5], 3.0));
    check(&spec);
}

#[test]
fn positive_p_levels_are_identical_across_worker_counts() {
    let grid = Arc::new(LatticeGrid::square(4, 3.0).unwrap());
    let mut spec = EnsembleSpec::new(
        Model::Xy(QuadratureParams::tuned(0.05, 0.5)),
        grid.clone(),
        4,
        1,
    );
    spec.config.burn_in = 0.1;
    spec.config.sample_duration = 0.5;
    spec.config.sample_every = 0.05;
    check(&spec);
    let p =
        PhysicalParams::with_scaled(0.05, Complex64::new(0.9, 0.0), 0.0, 10.0, 1.0, 1.0).unwrap();
    let mut spec = EnsembleSpec::new(Model::FullPositiveP(p), grid, 4, 2);
    spec.config.burn_in = 0.5;
    spec.config.sample_duration = 1.0;
    spec.config.sample_every = 0.1;
    check(&spec);
}

#[test]
fn different_seeds_differ() {
    let grid = Arc::new(LatticeGrid::square(4, 3.0).unwrap());
    let mut spec = EnsembleSpec::new(Model::Gl(GLParams::new(0.5, 0.0)), grid, 2, 1);
    spec.config.burn_in = 0.5;
    spec.config.sample_duration = 1.0;
    let a = run_ensemble(&spec, Execution::Sequential).unwrap();
    spec.seed = 2;
    let b = run_ensemble(&spec, Execution::Sequential).unwrap();
    assert_ne!(a.final_fields, b.final_fields);
}

#[test]
fn mcmc_chains_are_identical_across_worker_counts() {
    let grid = Arc::new(LatticeGrid::square(4, 3.0).unwrap());
    let c = McmcConfig {
        sweeps: 200,
        burn_in_sweeps: 50,
        chains: 5,
        seed: 8,
        ..McmcConfig::default()
    };
    let p = GLParams::new(0.5, 0.0);
    let runs: Vec<_> = modes()
        .iter()
        .map(|&e| sample_equilibrium(&p, &grid, &c, e).unwrap())
        .collect();
    for r in &runs[1..] {
        assert_eq!(r.stats, runs[0].stats);
        assert_eq!(r.widths, runs[0].widths);
    }
}
