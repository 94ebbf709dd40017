//! Command-line driver: reads a JSON experiment file, runs one experiment
//! and writes its artifacts plus the effective configuration to an output
//! directory.
//!
//! Exit codes: 0 on success, 2 for invalid configuration or violated
//! preconditions, 3 when a started run could not finish.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use config::ExperimentConfig;
pub use error::{CliError, Result, EXIT_ABORTED, EXIT_INVALID};
pub use output::{OutDir, EFFECTIVE_CONFIG};

#[derive(Debug, Parser)]
#[command(
    name = "drm",
    version,
    about = "Deep Ritz solver and statistical-error bound workbench"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train networks and report their H¹ errors.
    Solve(CommonArgs),
    /// Print class constants and Rademacher / statistical-error bounds.
    Bounds(CommonArgs),
    /// Run a convergence sweep over hyper-parameter plans.
    Sweep(CommonArgs),
    /// Measure generalization gaps over training-set sizes.
    Gap(CommonArgs),
    /// Measure the Robin-penalty gap to the Dirichlet solution in 1D.
    Penalty(CommonArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Experiment configuration (JSON).
    #[arg(long, value_name = "PATH")]
    pub config: PathBuf,
    /// Output directory; overrides `out` in the config.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Use seeds 0..K instead of the configured list.
    #[arg(long, value_name = "K")]
    pub seeds: Option<u64>,
    /// Worker threads; overrides `jobs` in the config.
    #[arg(long, value_name = "J")]
    pub jobs: Option<usize>,
}

pub const DEFAULT_OUT: &str = "drm-out";

/// Loads the config and applies command-line overrides.
pub fn effective_config(args: &CommonArgs) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(&args.config)?;
    if let Some(k) = args.seeds {
        if k == 0 {
            return Err(CliError::Invalid("--seeds must be at least 1".into()));
        }
        cfg.seeds = (0..k).collect();
    }
    if let Some(j) = args.jobs {
        cfg.jobs = j;
    }
    let out = args
        .out
        .clone()
        .or_else(|| cfg.out.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    cfg.out = Some(out);
    cfg.validate_common()?;
    Ok(cfg)
}

pub fn execute(command: &Command) -> Result<()> {
    let (args, run): (&CommonArgs, fn(&ExperimentConfig, &OutDir) -> Result<()>) = match command {
        Command::Solve(a) => (a, commands::cmd_solve),
        Command::Bounds(a) => (a, commands::cmd_bounds),
        Command::Sweep(a) => (a, commands::cmd_sweep),
        Command::Gap(a) => (a, commands::cmd_gap),
        Command::Penalty(a) => (a, commands::cmd_penalty),
    };
    let cfg = effective_config(args)?;
    let out = OutDir::new(cfg.out.clone().expect("set by effective_config"));
    run(&cfg, &out)
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INVALID } else { 0 };
        }
    };
    match execute(&cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
