//! The local-oscillator phase that cancels the `X → Y` feedback gives the
//! smallest `Y` variance.

use std::sync::Arc;

use num_complex::Complex64;
use opo_critical::integrator::{run_ensemble, EnsembleSpec, Model};
use opo_critical::lattice::LatticeGrid;
use opo_critical::models::{optimal_lo_phase, ScaledParams};
use opo_critical::observables::Estimate;
use opo_critical::parallel::Execution;

#[test]
fn theta_scan_minimizes_y_variance_at_optimal_phase() {
    let (gc, mu, delta1) = (0.01, 0.995, 0.01);
    let grid = Arc::new(LatticeGrid::single_site(1.0, 1.0).unwrap());
    let y2_at = |theta: f64| -> (Estimate, f64) {
        let s = ScaledParams {
            gc,
            t0: 1.0,
            x0: 1.0,
            mu_tilde: Complex64::new(mu, theta),
            delta1,
        };
        let mut spec = EnsembleSpec::new(Model::Xy(s.quadrature()), grid.clone(), 16, 23);
        spec.config.burn_in = 5.0;
        spec.config.sample_duration = 200.0;
        spec.config.sample_every = 0.01;
        let stats = run_ensemble(&spec, Execution::Auto)
            .unwrap()
            .points
            .remove(0)
            .stats
            .unwrap();
        (stats.moments.y2, stats.moments.xy.mean)
    };
    let thetas = [delta1 - 0.04, delta1, delta1 + 0.04];
    let scan: Vec<(Estimate, f64)> = thetas.iter().map(|&t| y2_at(t)).collect();
    let (best, xy) = scan[1];
    let theta_opt = optimal_lo_phase(0.0, delta1, gc, xy);
    assert!(
        (theta_opt - thetas[1]).abs() < 0.01,
        "optimal phase {theta_opt}"
    );
    for (i, (e, _)) in scan.iter().enumerate() {
        if i != 1 {
            let se = (e.stderr.powi(2) + best.stderr.powi(2)).sqrt();
            assert!(
                e.mean - best.mean > 3.0 * se,
                "theta {}: {e:?} vs best {best:?}",
                thetas[i]
            );
        }
    }
}
