//! Configuration, experiment orchestration and output for `nlpm-core`.
//!
//! A run writes CSV snapshots and diagnostics, JSON barrier reports and
//! optional SVG plots into its own directory; `manifest.json` is written
//! last and atomically, so a directory without it is an unfinished run.

pub mod config;
pub mod datum;
pub mod experiment;
pub mod io;
pub mod plot;
pub mod presets;
pub mod report;
pub mod suite;
pub mod sweep;

pub use config::{load_config, parse_config, ConfigError, RunConfig};
pub use experiment::{run_experiment, RunOutcome};
pub use sweep::{parse_plan, run_sweep, SweepPlan, SweepReport};

/// Environment override for the output root.
pub const ENV_OUTPUT_ROOT: &str = "NLPM_OUTPUT_ROOT";
/// Environment override for the worker count.
pub const ENV_THREADS: &str = "NLPM_THREADS";
