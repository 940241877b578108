//! Command-line driver: `simulate`, `linstab`, `compare` and `sweep`.

pub mod commands;
pub mod config;
pub mod output;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use commands::{cmd_compare, cmd_linstab, cmd_simulate, cmd_sweep, resolve_out, Progress, SweepConfig, EXIT_CONFIG};
use config::RunConfig;

#[derive(Debug, Parser)]
#[command(name = "lubrisurf", version, about = "Thin film with soluble surfactant: simulation and linear stability")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Overrides the seed in the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Suppresses progress lines.
    #[arg(long)]
    quiet: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Integrates one configuration and writes trace.csv, snapshots/ and manifest.json.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Writes linstab.json: equilibrium, b_q certificates and the operator spectrum.
    Linstab {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Fits the decay rate of a finished run and records it next to the spectral gap.
    Compare {
        #[arg(long)]
        run: PathBuf,
        #[arg(long)]
        linstab: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Runs the cartesian product of parameter axes and writes summary.csv.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
}

fn load_run(path: &std::path::Path, seed: Option<u64>) -> crate::Result<RunConfig> {
    let mut cfg = RunConfig::load(path)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn fail(err: impl std::fmt::Display) -> i32 {
    eprintln!("error: {err}");
    EXIT_CONFIG
}

/// Parses `args` (including the program name) and runs the subcommand; returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { 0 };
        }
    };
    match cli.command {
        Command::Simulate { config, out, common } => {
            let cfg = match load_run(&config, common.seed) {
                Ok(c) => c,
                Err(e) => return fail(e),
            };
            match resolve_out(out, &cfg) {
                Ok(dir) => cmd_simulate(cfg, &dir, Progress { quiet: common.quiet }),
                Err(e) => fail(e),
            }
        }
        Command::Linstab { config, out, common } => {
            let cfg = match load_run(&config, common.seed) {
                Ok(c) => c,
                Err(e) => return fail(e),
            };
            match resolve_out(out, &cfg) {
                Ok(dir) => cmd_linstab(cfg, &dir, Progress { quiet: common.quiet }),
                Err(e) => fail(e),
            }
        }
        Command::Compare { run, linstab, common } => cmd_compare(&run, &linstab, Progress { quiet: common.quiet }),
        Command::Sweep { config, out, common } => {
            let text = match std::fs::read_to_string(&config) {
                Ok(t) => t,
                Err(e) => return fail(format!("cannot read {}: {e}", config.display())),
            };
            let mut cfg = match SweepConfig::from_json(&text) {
                Ok(c) => c,
                Err(e) => return fail(e),
            };
            if let Some(s) = common.seed {
                cfg.base.seed = s;
            }
            match resolve_out(out, &cfg.base) {
                Ok(dir) => cmd_sweep(cfg, &dir, Progress { quiet: common.quiet }),
                Err(e) => fail(e),
            }
        }
    }
}
