//! Command-line driver for the `cqed` simulation and estimation pipeline.

pub mod commands;
pub mod config;
pub mod output;
pub mod selftest;
pub mod units;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use config::{ConfigError, Overrides};
use output::RunContext;

/// Environment variable that sets the output directory when `--out` is absent.
pub const OUT_DIR_ENV: &str = "CQED_OUT_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
}

#[derive(Debug, Parser)]
#[command(name = "cqed", version, about = "Cavity QED transit simulation, bistability and estimation")]
pub struct Cli {
    /// Scenario file (TOML).
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Built-in parameter set, used when no scenario file names one.
    #[arg(long, global = true, value_parser = ["paper-2003"])]
    pub preset: Option<String>,
    /// Seed for every random stream; overrides the scenario file.
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,
    /// Output directory [default: from the scenario file, else ./out]
    #[arg(long, global = true, value_name = "DIR", env = OUT_DIR_ENV)]
    pub out: Option<PathBuf>,
    /// Table format of written files.
    #[arg(long, global = true, value_enum, default_value = "csv")]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Derived cavity figures of merit and their published values.
    Params,
    /// Guide and lattice trap depths at the cavity and at the MOT.
    Trap,
    /// S-curve and hysteresis sweep of the bistability model.
    Bistability,
    /// Lattice transport trajectory (t, z, v, delta).
    Transport,
    /// Transmission traces of a cloud transit, one per probe.
    Transit,
    /// Cooperativity timeline and cloud fit from transit traces.
    Estimate {
        /// Trace CSV written by `transit`; repeatable. Overrides the
        /// scenario's [estimate] inputs.
        #[arg(long = "input", value_name = "PATH")]
        inputs: Vec<PathBuf>,
    },
    /// Replays the checks against published values; exit 0 iff all pass.
    Selftest,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Params => "params",
            Command::Trap => "trap",
            Command::Bistability => "bistability",
            Command::Transport => "transport",
            Command::Transit => "transit",
            Command::Estimate { .. } => "estimate",
            Command::Selftest => "selftest",
        }
    }
}

/// Exit status for checks that ran but failed.
pub const EXIT_FAILED: u8 = 1;
/// Exit status for unusable configuration.
pub const EXIT_CONFIG: u8 = 2;

pub fn run(cli: Cli) -> ExitCode {
    ExitCode::from(status(execute(cli)))
}

/// Process exit status for the outcome of [`execute`]. Errors are reported
/// on stderr here.
pub fn status(outcome: anyhow::Result<bool>) -> u8 {
    match outcome {
        Ok(true) => 0,
        Ok(false) => EXIT_FAILED,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<ConfigError>().is_some() {
                EXIT_CONFIG
            } else {
                EXIT_FAILED
            }
        }
    }
}

/// Runs one subcommand. `Ok(false)` means it ran but its checks failed.
pub fn execute(cli: Cli) -> anyhow::Result<bool> {
    let Format::Csv = cli.format;
    if let Command::Selftest = cli.command {
        let checks = selftest::run_checks()?;
        selftest::print_table(&checks);
        return Ok(checks.iter().all(|c| c.pass));
    }
    let overrides = Overrides { preset: cli.preset.clone(), seed: cli.seed };
    let loaded = config::load(cli.config.as_deref(), &overrides)?;
    let dir = cli.out.clone().or(loaded.output_dir).unwrap_or_else(|| PathBuf::from("out"));
    let ctx = RunContext::new(cli.command.name(), dir, loaded.scenario);
    log::info!("{} -> {} (config {})", ctx.command, ctx.dir.display(), ctx.hash);
    match &cli.command {
        Command::Params => commands::params(&ctx),
        Command::Trap => commands::trap(&ctx),
        Command::Bistability => commands::bistability(&ctx),
        Command::Transport => commands::transport(&ctx),
        Command::Transit => commands::transit(&ctx),
        Command::Estimate { inputs } => {
            let inputs = if inputs.is_empty() { ctx.scenario.estimate.inputs.clone() } else { inputs.clone() };
            commands::estimate(&ctx, &inputs)
        }
        Command::Selftest => unreachable!("handled above"),
    }
}

#[cfg(test)]
mod tests;
