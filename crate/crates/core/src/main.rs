use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use opo_critical::experiment::{self, ExperimentConfig, RunOptions, SpectrumArgs};
use opo_critical::parallel::Execution;
use opo_critical::Error;

/// Stochastic simulator of the critical planar OPO.
#[derive(Parser)]
#[command(name = "opo", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Experiment configuration (strict JSON).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory; overrides `output_dir` of the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Single-point ensemble run.
    Simulate(ConfigArgs),
    /// Scan of gamma_x following the config's schedule.
    Sweep {
        #[command(flatten)]
        args: ConfigArgs,
        /// 100x100 sites, 40x40 domain, 100 trajectories, gamma_x 1.0 to -0.3.
        #[arg(long)]
        paper_defaults: bool,
    },
    /// Metropolis sampling of the stationary distribution.
    Oracle(ConfigArgs),
    /// Corrected and linearized squeezing spectra.
    Spectrum {
        #[arg(long)]
        gamma_x: Option<f64>,
        #[arg(long)]
        gc: Option<f64>,
        #[arg(long, conflicts_with = "from_run")]
        x2: Option<f64>,
        /// Run directory whose moments.csv provides <X^2>.
        #[arg(long)]
        from_run: Option<PathBuf>,
        /// gamma_x = 0.5, gc = 0.01 unless given.
        #[arg(long)]
        paper_defaults: bool,
        #[arg(long)]
        omega_max: Option<f64>,
        #[arg(long, default_value_t = 201)]
        points: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Built-in invariant checks at desk scale.
    Validate {
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn out_dir(flag: Option<PathBuf>, cfg: Option<&ExperimentConfig>, command: &str) -> PathBuf {
    flag.or_else(|| cfg.and_then(|c| c.output_dir.clone()))
        .unwrap_or_else(|| Path::new("runs").join(command))
}

fn load(args: &ConfigArgs, command: &str) -> Result<ExperimentConfig, (PathBuf, Error)> {
    let fail = |e| (out_dir(args.out.clone(), None, command), e);
    let path = args
        .config
        .as_ref()
        .ok_or_else(|| fail(Error::config("--config", "required")))?;
    ExperimentConfig::load(path).map_err(fail)
}

fn run(cli: Cli) -> Result<i32, Error> {
    let exec = Execution::from_env();
    let config_command =
        |args: ConfigArgs,
         name: &str,
         paper: bool,
         f: fn(&ExperimentConfig, &RunOptions) -> opo_critical::Result<experiment::RunReport>|
         -> Result<i32, Error> {
            let cfg = if paper && args.config.is_none() {
                Ok(ExperimentConfig::reference_sweep())
            } else {
                load(&args, name)
            };
            let cfg = match cfg {
                Ok(c) => c,
                Err((dir, e)) => {
                    experiment::write_failure_manifest(&dir, name, &e)?;
                    return Err(e);
                }
            };
            let opts = RunOptions {
                out: out_dir(args.out, Some(&cfg), name),
                exec,
            };
            let report = f(&cfg, &opts)?;
            eprintln!(
                "wrote {} ({})",
                opts.out.display(),
                report.manifest.manifest_sha256
            );
            Ok(report.exit_code())
        };
    match cli.command {
        Command::Simulate(a) => config_command(a, "simulate", false, experiment::simulate),
        Command::Sweep {
            args,
            paper_defaults,
        } => {
            if paper_defaults && args.config.is_some() {
                return Err(Error::config(
                    "--paper-defaults",
                    "cannot be combined with --config",
                ));
            }
            config_command(args, "sweep", paper_defaults, experiment::sweep)
        }
        Command::Oracle(a) => config_command(a, "oracle", false, experiment::oracle),
        Command::Spectrum {
            gamma_x,
            gc,
            x2,
            from_run,
            paper_defaults,
            omega_max,
            points,
            out,
        } => {
            let args = SpectrumArgs {
                gamma_x,
                gc,
                x2,
                from_run,
                paper_defaults,
                omega_max,
                points,
            };
            let opts = RunOptions {
                out: out_dir(out, None, "spectrum"),
                exec,
            };
            let report = experiment::spectrum(&args, &opts)?;
            eprintln!("wrote {}", opts.out.display());
            Ok(report.exit_code())
        }
        Command::Validate { out } => {
            let opts = RunOptions {
                out: out_dir(out, None, "validate"),
                exec,
            };
            let (report, checks) = experiment::validate(&opts)?;
            for c in &checks {
                println!(
                    "{} {}: {}",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.detail
                );
            }
            Ok(report.exit_code())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
