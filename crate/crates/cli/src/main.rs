//! `wgscatter`: runs single points, negativity maps, α sweeps and the
//! validation suite, writing CSV data, gnuplot scripts and a metadata sidecar.
//!
//! Exit codes: 0 success, 1 validation failure, 2 configuration error,
//! 3 runtime or numerical failure.

mod config;
mod error;
mod output;
mod run;
mod validate;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use wgscatter::two_excitation::Fault;

use config::{Mode, RunRequest, Settings};
use error::CliError;
use output::OutputDir;

#[derive(Debug, Parser)]
#[command(name = "wgscatter", version, about)]
struct Cli {
    /// TOML file with any of the long flags as keys (`-` written as `_`).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve one parameter point: map, rates, measures and plot script.
    #[command(allow_negative_numbers = true)]
    Simulate(Settings),
    /// N_Δ(α, t) over a log-spaced α grid in the infinite waveguide.
    #[command(allow_negative_numbers = true)]
    NegativityMap(Settings),
    /// GM, BLP and divisibility verdicts over α for several geometries.
    #[command(allow_negative_numbers = true)]
    SweepAlpha(Settings),
    /// Run the invariant suite; exits 1 if any check fails.
    #[command(allow_negative_numbers = true)]
    Validate(ValidateArgs),
}

#[derive(Debug, Args)]
struct ValidateArgs {
    #[command(flatten)]
    settings: Settings,
    /// Inject a solver defect to confirm the suite detects it.
    #[arg(long, value_enum)]
    fault: Option<FaultArg>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FaultArg {
    /// Drop the delayed mirror self-interaction.
    SkipMirrorDelay,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    let file = match &cli.config {
        Some(path) => Settings::from_file(path)?,
        None => Settings::default(),
    };
    let (mode, flags, fault) = match cli.command {
        Command::Simulate(s) => (Mode::Simulate, s, None),
        Command::NegativityMap(s) => (Mode::NegativityMap, s, None),
        Command::SweepAlpha(s) => (Mode::SweepAlpha, s, None),
        Command::Validate(v) => (
            Mode::Validate,
            v.settings,
            v.fault
                .map(|FaultArg::SkipMirrorDelay| Fault::SkipMirrorDelay),
        ),
    };
    let explicit_out = flags.out.is_some() || file.out.is_some();
    let req = RunRequest::resolve(mode, flags.over(file))?;
    match mode {
        Mode::Simulate => run::simulate(&req),
        Mode::NegativityMap => run::negativity_map(&req),
        Mode::SweepAlpha => run::sweep_alpha(&req),
        Mode::Validate => {
            let start = Instant::now();
            let checks = validate::run_checks(fault);
            let text = validate::report(&checks);
            print!("{text}");
            if explicit_out {
                let mut out = OutputDir::create(&req.output_dir)?;
                out.write_text("validate_report.txt", &text)?;
                out.finish(&req, start.elapsed().as_secs_f64())?;
            }
            match checks.iter().filter(|c| !c.pass).count() {
                0 => Ok(()),
                n => Err(CliError::ValidationFailed(n)),
            }
        }
    }
}
