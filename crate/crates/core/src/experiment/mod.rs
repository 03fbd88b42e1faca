//! Experiment configuration, run manifests, CSV tables and the commands
//! behind the `opo` binary.
//!
//! Every run directory gets a `manifest.json`, also on failure. Data files
//! start with a `# manifest-sha256: <hex>` line followed by a CSV header.

mod commands;
mod config;
mod output;

pub use commands::{
    gradient_flow_error, oracle, simulate, spectrum, sweep, validate, validation_suite,
    write_failure_manifest, CheckResult, RunOptions, RunReport, SpectrumArgs, MOMENTS_HEADER,
    SPECTRUM_HEADER, STRUCTURE_HEADER, SWEEP_HEADER,
};
pub use config::{DerivedParams, ExperimentConfig, GridConfig, Resolved};
pub use output::{
    atomic_write, fmt_f64, manifest_hash, RunManifest, RunStatus, RunWriter, Table, CODE_VERSION,
};
