//! Command-line front end for the tangency library: phase-portrait data,
//! bifurcation sweeps along parameter rays, the verification suite, and the
//! closed-form scaling-law predictors.

mod commands;
mod config;
mod scripts;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::AppError;
use config::{CommonArgs, RunConfig};

#[derive(Parser)]
#[command(
    name = "tangency",
    version,
    about = "Single-round periodic orbits and scaling laws near a resonant homoclinic tangency"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write phase-portrait data: manifolds, coexisting orbits, fixed points.
    Portrait(CommonArgs),
    /// Locate SN/PD bifurcations for each k along a parameter ray and fit
    /// the scaled limits.
    Sweep(CommonArgs),
    /// Run the verification checks and write a pass/fail report.
    Verify(CommonArgs),
    /// Print the closed-form scaled bifurcation limits for a ray.
    Predict(CommonArgs),
}

fn configure_pool(cfg: &RunConfig) {
    if let Some(jobs) = cfg.jobs {
        // A second initialization in the same process is rejected by rayon;
        // results do not depend on the pool size, so that is harmless.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global();
    }
}

fn run(cli: Cli) -> Result<ExitCode, AppError> {
    let (args, default_k_range, command): (&CommonArgs, (u32, u32), _) = match &cli.command {
        Command::Portrait(a) => (a, (1, 15), commands::cmd_portrait as fn(&RunConfig) -> _),
        Command::Sweep(a) => (a, (8, 22), commands::cmd_sweep),
        Command::Verify(a) => (a, (8, 22), commands::cmd_verify),
        Command::Predict(a) => (a, (8, 22), commands::cmd_predict),
    };
    let cfg = RunConfig::resolve(args, default_k_range)
        .map_err(|e| AppError::Config(e.to_string()))?;
    configure_pool(&cfg);
    command(&cfg)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}
