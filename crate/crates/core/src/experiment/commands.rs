use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Serialize;
use serde_json::Value;

use super::output::{fmt_f64, RunManifest, RunStatus, RunWriter, Table};
use super::{DerivedParams, ExperimentConfig};
use crate::error::{Error, Result};
use crate::integrator::{run_ensemble, EnsembleSpec, Model, FULL_PP_EXTRAS};
use crate::lattice::{LatticeGrid, NoiseStream, RealField, SpectralOps};
use crate::models::{gl_drift, potential_functional, squeezing_value, GLParams};
use crate::observables::{EnsembleStats, Estimate};
use crate::oracle::{gaussian_x2, sample_equilibrium, McmcConfig};
use crate::parallel::Execution;

pub const MOMENTS_HEADER: [&str; 6] = ["source", "gamma_x", "observable", "value", "stderr", "n"];
pub const STRUCTURE_HEADER: [&str; 9] = [
    "source", "gamma_x", "mx", "my", "kx", "ky", "k2", "s", "s_err",
];
pub const SWEEP_HEADER: [&str; 5] = ["gamma_x", "S0", "S0_err", "n_traj", "discard_frac"];
pub const SPECTRUM_HEADER: [&str; 3] = ["omega", "v_corrected", "v_linearized"];

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub out: PathBuf,
    pub exec: Execution,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub manifest: RunManifest,
}

impl RunReport {
    /// 0 on success, 4 if any point lost more than 10% of trajectories.
    pub fn exit_code(&self) -> i32 {
        match self.manifest.status {
            RunStatus::Unreliable => 4,
            RunStatus::Failed => 1,
            _ => 0,
        }
    }
}

fn run_with_manifest(
    out: &Path,
    command: &str,
    inputs: Value,
    derived: Option<DerivedParams>,
    body: impl FnOnce(&mut RunWriter) -> Result<bool>,
) -> Result<RunReport> {
    let mut w = RunWriter::begin(out, command, inputs, derived)?;
    match body(&mut w) {
        Ok(unreliable) => Ok(RunReport {
            manifest: w.finish(None, unreliable)?,
        }),
        Err(e) => {
            w.finish(Some(&e), false)?;
            Err(e)
        }
    }
}

/// Records a failure that happened before any inputs could be parsed.
pub fn write_failure_manifest(out: &Path, command: &str, error: &Error) -> Result<RunManifest> {
    RunWriter::begin(out, command, Value::Null, None)?.finish(Some(error), false)
}

fn moment_rows(
    table: &mut Table,
    source: &str,
    gamma_x: Option<f64>,
    stats: &EnsembleStats,
    extras: &[&str],
) {
    let g = gamma_x.map_or_else(String::new, fmt_f64);
    let n = stats.moments.n_trajectories.to_string();
    let mut row = |name: &str, e: Estimate| {
        table.push(vec![
            source.to_string(),
            g.clone(),
            name.to_string(),
            fmt_f64(e.mean),
            fmt_f64(e.stderr),
            n.clone(),
        ])
    };
    for (name, e) in stats.moments.as_rows() {
        row(name, e);
    }
    row("s0_connected", stats.s0_connected);
    for (name, e) in extras.iter().zip(&stats.extras) {
        row(name, *e);
    }
}

fn structure_rows(table: &mut Table, source: &str, stats: &EnsembleStats) {
    let sf = &stats.structure_factor;
    let g = sf.gamma_x.map_or_else(String::new, fmt_f64);
    for i in sf.modes_by_k2() {
        let (mx, my) = sf.grid.mode_numbers(i);
        let (kx, ky) = sf.grid.wavevector(i);
        table.push(vec![
            source.to_string(),
            g.clone(),
            mx.to_string(),
            my.to_string(),
            fmt_f64(kx),
            fmt_f64(ky),
            fmt_f64(sf.grid.k2(i)),
            fmt_f64(sf.mean[i]),
            fmt_f64(sf.stderr[i]),
        ]);
    }
}

fn config_inputs(cfg: &ExperimentConfig) -> Result<Value> {
    Ok(serde_json::to_value(cfg)?)
}

fn extras_for(model: &Model) -> &'static [&'static str] {
    match model {
        Model::FullPositiveP(_) => &FULL_PP_EXTRAS,
        _ => &[],
    }
}

fn run_points(
    w: &mut RunWriter,
    spec: &EnsembleSpec,
    exec: Execution,
    sweep: bool,
) -> Result<bool> {
    let result = run_ensemble(spec, exec)?;
    let mut moments = Table::new(&MOMENTS_HEADER);
    let mut structure = Table::new(&STRUCTURE_HEADER);
    let mut table = Table::new(&SWEEP_HEADER);
    let extras = extras_for(&spec.model);
    let mut worst: f64 = 0.0;
    for p in &result.points {
        worst = worst.max(p.discard_fraction());
        let g = p.gamma_x;
        match &p.stats {
            Some(stats) => {
                moment_rows(&mut moments, "langevin", g, stats, extras);
                structure_rows(&mut structure, "langevin", stats);
                table.push(vec![
                    g.map_or_else(String::new, fmt_f64),
                    fmt_f64(stats.s0_connected.mean),
                    fmt_f64(stats.s0_connected.stderr),
                    p.used.to_string(),
                    fmt_f64(p.discard_fraction()),
                ]);
            }
            None => table.push(vec![
                g.map_or_else(String::new, fmt_f64),
                "NaN".into(),
                "NaN".into(),
                "0".into(),
                fmt_f64(p.discard_fraction()),
            ]),
        }
    }
    w.manifest.discard_fraction = Some(worst);
    w.diagnostic("diverged_trajectories", result.diverged);
    w.diagnostic("dt", spec.config.dt);
    if sweep {
        w.write_table("sweep.csv", &table)?;
    } else if result.points[0].stats.is_none() {
        return Err(Error::Validation("every trajectory diverged".into()));
    }
    w.write_table("moments.csv", &moments)?;
    w.write_table("structure_factor.csv", &structure)?;
    if result.unreliable {
        w.manifest
            .warnings
            .push(format!("discard fraction {worst:.3} exceeds 10%"));
    }
    Ok(result.unreliable)
}

/// Single-point ensemble run: `moments.csv`, `structure_factor.csv`.
pub fn simulate(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<RunReport> {
    let resolved = cfg.resolve();
    let derived = resolved.as_ref().ok().and_then(|r| r.derived.clone());
    run_with_manifest(&opts.out, "simulate", config_inputs(cfg)?, derived, |w| {
        let r = resolved?;
        let mut spec = r.ensemble(cfg);
        if spec.schedule.take().is_some() {
            w.manifest
                .warnings
                .push("schedule ignored by simulate".into());
        }
        run_points(w, &spec, opts.exec, false)
    })
}

/// Scan-schedule run: adds the per-point `sweep.csv` table.
pub fn sweep(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<RunReport> {
    let resolved = cfg.resolve();
    let derived = resolved.as_ref().ok().and_then(|r| r.derived.clone());
    run_with_manifest(&opts.out, "sweep", config_inputs(cfg)?, derived, |w| {
        let r = resolved?;
        if cfg.schedule.is_none() {
            return Err(Error::config("schedule", "sweep needs a scan schedule"));
        }
        run_points(w, &r.ensemble(cfg), opts.exec, true)
    })
}

/// Equilibrium sampler on the GL parameters of `cfg`.
pub fn oracle(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<RunReport> {
    run_with_manifest(&opts.out, "oracle", config_inputs(cfg)?, None, |w| {
        let p = cfg.gl_params()?;
        let grid = cfg.resolve()?.grid;
        let mcmc = cfg.mcmc.clone().unwrap_or_else(|| McmcConfig {
            seed: cfg.seed,
            ..McmcConfig::default()
        });
        let r = sample_equilibrium(&p, &grid, &mcmc, opts.exec)?;
        w.diagnostic("acceptance", r.acceptance);
        w.diagnostic("iat_x2", r.iat_x2);
        w.diagnostic("proposal_widths", &r.widths);
        w.manifest.warnings.extend(r.warnings.iter().cloned());
        let mut moments = Table::new(&MOMENTS_HEADER);
        let mut structure = Table::new(&STRUCTURE_HEADER);
        moment_rows(&mut moments, "mcmc", Some(p.gamma_x), &r.stats, &[]);
        structure_rows(&mut structure, "mcmc", &r.stats);
        w.write_table("moments.csv", &moments)?;
        w.write_table("structure_factor.csv", &structure)?;
        Ok(false)
    })
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct SpectrumArgs {
    pub gamma_x: Option<f64>,
    pub gc: Option<f64>,
    pub x2: Option<f64>,
    pub from_run: Option<PathBuf>,
    pub paper_defaults: bool,
    /// Largest `Ω`; defaults to `10/g_c` (`g_cΩ/2 = 5`).
    pub omega_max: Option<f64>,
    pub points: usize,
}

#[derive(Debug, Clone, Serialize)]
struct SpectrumInputs {
    gamma_x: f64,
    gc: f64,
    x2: f64,
    x2_stderr: Option<f64>,
    x2_source: String,
    omega_max: f64,
    points: usize,
}

/// `⟨X²⟩` and `γₓ` from the `moments.csv` of an earlier run, and `g_c`
/// from its manifest when it recorded one.
fn read_run(dir: &Path) -> Result<(f64, f64, Option<f64>, Option<f64>)> {
    let path = dir.join("moments.csv");
    let text = std::fs::read_to_string(&path)
        .map_err(|e| Error::config(path.display().to_string(), e.to_string()))?;
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let bad = |m: &str| Error::config(path.display().to_string(), m.to_string());
    let mut found = None;
    for rec in rdr.records() {
        let rec = rec.map_err(|e| bad(&e.to_string()))?;
        if rec.get(2) == Some("x2") {
            let num = |i: usize| rec.get(i).and_then(|v| v.parse::<f64>().ok());
            found = Some((
                num(3).ok_or_else(|| bad("unparsable x2 value"))?,
                num(1),
                num(4),
            ));
            break;
        }
    }
    let (x2, gamma_x, stderr) = found.ok_or_else(|| bad("no x2 row"))?;
    let gc = std::fs::read_to_string(dir.join("manifest.json"))
        .ok()
        .and_then(|t| serde_json::from_str::<Value>(&t).ok())
        .and_then(|m| {
            m.pointer("/derived/gc")
                .or_else(|| m.pointer("/inputs/quadrature/gc"))
                .and_then(Value::as_f64)
        });
    Ok((
        x2,
        gamma_x.ok_or_else(|| bad("missing gamma_x"))?,
        gc,
        stderr,
    ))
}

fn resolve_spectrum(a: &SpectrumArgs) -> Result<SpectrumInputs> {
    let (mut gamma_x, mut gc, mut x2, mut x2_stderr, mut source) =
        (a.gamma_x, a.gc, a.x2, None, "argument".to_string());
    if let Some(dir) = &a.from_run {
        let (rx2, rg, rgc, se) = read_run(dir)?;
        if x2.is_none() {
            x2 = Some(rx2);
            x2_stderr = se;
            source = format!("run:{}", dir.display());
        }
        gamma_x = gamma_x.or(Some(rg));
        gc = gc.or(rgc);
    }
    if a.paper_defaults {
        gamma_x = gamma_x.or(Some(0.5));
        gc = gc.or(Some(0.01));
    }
    let gamma_x = gamma_x.ok_or_else(|| Error::config("gamma_x", "required"))?;
    let gc = gc.ok_or_else(|| Error::config("gc", "required"))?;
    let x2 = x2.ok_or_else(|| Error::config("x2", "give --x2 or --from-run"))?;
    if !(gc.is_finite() && gc > 0.0) {
        return Err(Error::config("gc", format!("{gc} must be positive")));
    }
    if !(x2.is_finite() && x2 >= 0.0) {
        return Err(Error::config("x2", format!("{x2} must be non-negative")));
    }
    if !gamma_x.is_finite() {
        return Err(Error::config("gamma_x", "must be finite"));
    }
    let points = if a.points == 0 { 201 } else { a.points };
    if points < 2 {
        return Err(Error::config("points", "need at least 2"));
    }
    Ok(SpectrumInputs {
        gamma_x,
        gc,
        x2,
        x2_stderr,
        x2_source: source,
        omega_max: a.omega_max.unwrap_or(10.0 / gc),
        points,
    })
}

/// Corrected and linearized squeezing spectra on a uniform `Ω` grid.
pub fn spectrum(args: &SpectrumArgs, opts: &RunOptions) -> Result<RunReport> {
    let resolved = resolve_spectrum(args);
    let inputs = match &resolved {
        Ok(r) => serde_json::to_value(r)?,
        Err(_) => serde_json::to_value(args)?,
    };
    run_with_manifest(&opts.out, "spectrum", inputs, None, |w| {
        let s = resolved?;
        let mut t = Table::new(&SPECTRUM_HEADER);
        for i in 0..s.points {
            let omega = s.omega_max * i as f64 / (s.points - 1) as f64;
            t.push(vec![
                fmt_f64(omega),
                fmt_f64(squeezing_value(omega, s.x2, s.gamma_x, s.gc)),
                fmt_f64(squeezing_value(omega, 0.0, s.gamma_x, s.gc)),
            ]);
        }
        w.write_table("spectrum.csv", &t)?;
        Ok(false)
    })
}

/// Outcome of one built-in invariant check.
#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Largest relative deviation between `gl_drift` and the central-difference
/// functional derivative `-(1/dxdy) ∂V/∂X` over `fields` random fields.
pub fn gradient_flow_error(
    grid: &Arc<LatticeGrid>,
    p: &GLParams,
    fields: usize,
    seed: u64,
) -> Result<f64> {
    let mut ops = SpectralOps::new(grid.clone());
    let mut rng = NoiseStream::from_seed(seed);
    let h = 1e-4;
    let mut worst: f64 = 0.0;
    for _ in 0..fields {
        let x = RealField::from_values(
            grid.clone(),
            (0..grid.len())
                .map(|_| 0.5 * rng.standard_normal())
                .collect(),
        )?;
        let drift = gl_drift(&x, p, &mut ops)?;
        let scale = drift.max_abs().max(1e-300);
        let mut v = x.values().to_vec();
        for i in 0..grid.len() {
            let x0 = v[i];
            v[i] = x0 + h;
            let up = potential_functional(
                &RealField::from_values(grid.clone(), v.clone())?,
                p,
                &mut ops,
            )?;
            v[i] = x0 - h;
            let down = potential_functional(
                &RealField::from_values(grid.clone(), v.clone())?,
                p,
                &mut ops,
            )?;
            v[i] = x0;
            let fd = -(up - down) / (2.0 * h) / grid.cell_area();
            worst = worst.max((fd - drift.values()[i]).abs() / scale);
        }
    }
    Ok(worst)
}

/// Desk-scale versions of the OU, gradient-flow and fluctuation-dissipation
/// checks.
pub fn validation_suite(exec: Execution) -> Result<Vec<CheckResult>> {
    let mut out = Vec::new();

    let grid = Arc::new(LatticeGrid::square(8, 5.0)?);
    let err = gradient_flow_error(&grid, &GLParams::new(0.5, 1.0), 3, 11)?;
    out.push(CheckResult {
        name: "gradient-flow".into(),
        passed: err < 1e-6,
        detail: format!("max relative deviation {err:.2e} (limit 1e-6)"),
    });

    let p = GLParams::linearized(1.0, 0.0);
    let mut spec = EnsembleSpec::new(Model::Gl(p.clone()), grid.clone(), 32, 1);
    spec.config.dt = 0.05;
    spec.config.burn_in = 10.0;
    spec.config.sample_duration = 100.0;
    let stats = run_ensemble(&spec, exec)?
        .points
        .remove(0)
        .stats
        .ok_or_else(|| Error::Validation("diverged".into()))?;
    let sf = &stats.structure_factor;
    let pulls: Vec<f64> = (0..grid.len())
        .filter(|&i| i <= grid.mirror(i))
        .map(|i| (sf.mean[i] - 1.0 / p.lambda(grid.k2(i))) / sf.stderr[i])
        .collect();
    let outliers = pulls.iter().filter(|z| z.abs() > 3.0).count();
    // ~0.3% per mode expected beyond 3σ
    let allowed = 1 + pulls.len() / 50;
    out.push(CheckResult {
        name: "ou-spectrum".into(),
        passed: outliers <= allowed,
        detail: format!(
            "{outliers} of {} modes beyond 3 s.e. (allowed {allowed})",
            pulls.len()
        ),
    });

    let p = GLParams::new(1.0, 0.0);
    let mut spec = EnsembleSpec::new(Model::Gl(p.clone()), grid.clone(), 32, 2);
    spec.config.dt = 0.02;
    spec.config.burn_in = 10.0;
    spec.config.sample_duration = 200.0;
    let lang = run_ensemble(&spec, exec)?
        .points
        .remove(0)
        .stats
        .ok_or_else(|| Error::Validation("diverged".into()))?;
    let mc = sample_equilibrium(
        &p,
        &grid,
        &McmcConfig {
            sweeps: 4000,
            burn_in_sweeps: 500,
            chains: 16,
            seed: 3,
            ..McmcConfig::default()
        },
        exec,
    )?;
    let (a, b) = (lang.moments.x2, mc.stats.moments.x2);
    let allowance = (gaussian_x2(&p, &grid, false) - gaussian_x2(&p, &grid, true)).abs();
    let tol = 3.0 * (a.stderr.powi(2) + b.stderr.powi(2)).sqrt() + allowance;
    out.push(CheckResult {
        name: "fluctuation-dissipation".into(),
        passed: (a.mean - b.mean).abs() <= tol,
        detail: format!(
            "<X^2> langevin {:.4}±{:.4}, mcmc {:.4}±{:.4}, tolerance {:.4}",
            a.mean, a.stderr, b.mean, b.stderr, tol
        ),
    });
    Ok(out)
}

/// Runs [`validation_suite`]; fails with a validation error if any check
/// fails.
pub fn validate(opts: &RunOptions) -> Result<(RunReport, Vec<CheckResult>)> {
    let mut checks = Vec::new();
    let report = run_with_manifest(&opts.out, "validate", Value::Null, None, |w| {
        checks = validation_suite(opts.exec)?;
        w.diagnostic("checks", &checks);
        let failed: Vec<&str> = checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| c.name.as_str())
            .collect();
        if failed.is_empty() {
            Ok(false)
        } else {
            Err(Error::Validation(failed.join(", ")))
        }
    });
    match report {
        Ok(r) => Ok((r, checks)),
        Err(Error::Validation(m)) => {
            for c in &checks {
                log::error!("{}: {}", c.name, c.detail);
            }
            Err(Error::Validation(m))
        }
        Err(e) => Err(e),
    }
}
