use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Result};
use clap::{Parser, Subcommand};
use nlpm::config::{load_config, ConfigError, RunConfig};
use nlpm::suite::{report_csv, run_suite, Fidelity};
use nlpm::sweep::{parse_plan, run_sweep, SweepPlan};
use nlpm::{presets, report, run_experiment, ENV_OUTPUT_ROOT, ENV_THREADS};

/// Porous medium flow with fractional potential pressure: runs, sweeps,
/// validation and operator dumps.
#[derive(Parser)]
#[command(version)]
struct Cli {
    /// Root directory for run output.
    #[arg(long, global = true, env = ENV_OUTPUT_ROOT)]
    output_root: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one configuration.
    Run {
        config: Option<PathBuf>,
        /// Use a built-in configuration instead of a file.
        #[arg(long, conflicts_with = "config")]
        preset: Option<String>,
    },
    /// Run an (m, s) sweep plan.
    Sweep {
        plan: Option<PathBuf>,
        /// Built-in plan; only "dichotomy" exists.
        #[arg(long, conflicts_with = "plan")]
        preset: Option<String>,
        #[arg(long, env = ENV_THREADS)]
        threads: Option<usize>,
    },
    /// Run the validation suite and print its CSV.
    Validate {
        #[arg(long)]
        quick: bool,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Also write the CSV here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Dump the operator tables of a configuration.
    Kernels { config: PathBuf },
    /// Regenerate the summaries of a run or sweep directory.
    Report { dir: PathBuf },
}

enum Failure {
    Config(ConfigError),
    Other(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Other(e)
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e)
    }
}

fn output_root(cli: &Option<PathBuf>, cfg: Option<&RunConfig>) -> PathBuf {
    cli.clone().or_else(|| cfg.and_then(|c| c.output.clone())).unwrap_or_else(|| PathBuf::from("runs"))
}

fn run_config(path: &Option<PathBuf>, preset: &Option<String>) -> Result<RunConfig, Failure> {
    match (path, preset) {
        (Some(p), _) => Ok(load_config(p)?),
        (None, Some(name)) => presets::by_name(name).ok_or_else(|| {
            Failure::Config(ConfigError { problems: vec![format!("unknown preset {name:?}; known: {}", presets::NAMES.join(", "))] })
        }),
        (None, None) => Err(Failure::Config(ConfigError { problems: vec!["give a config file or --preset".into()] })),
    }
}

fn execute(cli: Cli) -> Result<i32, Failure> {
    match &cli.cmd {
        Cmd::Run { config, preset } => {
            let cfg = run_config(config, preset)?;
            let out = run_experiment(&cfg, &output_root(&cli.output_root, Some(&cfg)))?;
            print!("{}", report::run_summary(&out.manifest));
            println!("output: {}", out.dir.display());
            Ok(out.exit_code)
        }
        Cmd::Sweep { plan, preset, threads } => {
            let plan = match (plan, preset.as_deref()) {
                (Some(p), _) => {
                    let text = std::fs::read_to_string(p).map_err(|e| anyhow!("reading {}: {e}", p.display()))?;
                    parse_plan(&text)?
                }
                (None, Some("dichotomy")) => SweepPlan::dichotomy(),
                (None, Some(other)) => {
                    return Err(ConfigError { problems: vec![format!("unknown sweep preset {other:?}; known: dichotomy")] }.into())
                }
                (None, None) => return Err(ConfigError { problems: vec!["give a plan file or --preset".into()] }.into()),
            };
            let rep = run_sweep(&plan, &output_root(&cli.output_root, None), *threads)?;
            print!("{}", rep.regime_map_text());
            println!("output: {}", rep.dir.display());
            Ok(rep.exit_code())
        }
        Cmd::Validate { quick, seed, out } => {
            let rows = run_suite(if *quick { Fidelity::Quick } else { Fidelity::Full }, *seed);
            let text = report_csv(&rows);
            print!("{text}");
            if let Some(p) = out {
                std::fs::write(p, &text).map_err(|e| anyhow!("writing {}: {e}", p.display()))?;
            }
            Ok(if rows.iter().all(|r| r.pass()) { 0 } else { 1 })
        }
        Cmd::Kernels { config } => {
            let cfg = load_config(config)?;
            let dir = report::dump_kernels(&cfg, &output_root(&cli.output_root, Some(&cfg)))?;
            println!("output: {}", dir.display());
            Ok(0)
        }
        Cmd::Report { dir } => {
            let (text, code) = report::regenerate(Path::new(dir))?;
            print!("{text}");
            Ok(code)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(Failure::Config(e)) => {
            eprintln!("configuration error: {e}");
            ExitCode::from(2)
        }
        Err(Failure::Other(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
