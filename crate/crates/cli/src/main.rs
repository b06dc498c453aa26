//! `dnls`: run, sweep, verify and export derivative NLS simulations.
//!
//! Exit status: 0 when every applicable check passes, 1 when a check fails
//! or a run aborts, 2 for invalid specs, arguments or input files.

mod commands;
mod error;
mod output;
mod spec;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::error::CliError;
use crate::spec::{seed_from_env, RunSpec};

const DEFAULT_OUT: &str = "dnls-out";

#[derive(Parser)]
#[command(name = "dnls", version, about = "Pseudo-spectral derivative NLS solver with blowup diagnostics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one run and verify it.
    Run {
        /// Run spec (JSON). Defaults to the single-mode blowup run.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a spec at several amplitudes and check the scaling of the lifespan bound.
    Sweep {
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Comma-separated amplitudes, e.g. 0.5,1,2.
        #[arg(long)]
        amplitudes: String,
        /// Worker threads; 0 uses one per core.
        #[arg(long, default_value_t = 0)]
        jobs: usize,
    },
    /// Export m.dat, bound.dat and sup.dat from a trajectory CSV.
    Plotdata {
        trajectory: PathBuf,
        /// Spec of the run that produced the trajectory.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-run the check suite on an archived trajectory CSV.
    Verify {
        trajectory: PathBuf,
        #[arg(long)]
        spec: Option<PathBuf>,
        /// report.json of the run, enables the lifespan check.
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn output_dir(flag: Option<PathBuf>, spec: &RunSpec) -> PathBuf {
    flag.or_else(|| spec.outputs.clone()).unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

fn load(spec: Option<&Path>) -> Result<RunSpec, CliError> {
    RunSpec::load(spec, seed_from_env()?)
}

fn dispatch(command: Command) -> Result<u8, CliError> {
    match command {
        Command::Run { spec, out } => {
            let spec = load(spec.as_deref())?;
            commands::cmd_run(&spec, &output_dir(out, &spec))
        }
        Command::Sweep { spec, out, amplitudes, jobs } => {
            let amplitudes = commands::parse_amplitudes(&amplitudes)?;
            let spec = load(spec.as_deref())?;
            commands::cmd_sweep(&spec, &amplitudes, jobs, &output_dir(out, &spec))
        }
        Command::Plotdata { trajectory, spec, out } => {
            let spec = load(spec.as_deref())?;
            commands::cmd_plotdata(&trajectory, &spec, &output_dir(out, &spec))
        }
        Command::Verify { trajectory, spec, report, out } => {
            let spec = load(spec.as_deref())?;
            commands::cmd_verify(&trajectory, report.as_deref(), &spec, &output_dir(out, &spec))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
