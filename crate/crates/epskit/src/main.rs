use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use epskit::config::parse_config;
use epskit::run::{cmd_analyze, cmd_design, cmd_simulate, cmd_stability, cmd_sweep, Workspace};
use epskit::Error;

/// Design and simulation toolkit for a wavelength-nondegenerate entangled
/// photon-pair source.
#[derive(Parser)]
#[command(name = "epskit", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the source design end to end and write the design report.
    Design(RunArgs),
    /// Trace the wedge-separation sweep and write its rate curve CSV.
    Sweep(RunArgs),
    /// Generate stochastic count records for scans, CHSH, and a power sweep.
    Simulate(RunArgs),
    /// Evaluate the thermal phase-drift budget.
    Stability(RunArgs),
    /// Ingest a count-record CSV and report visibility, CHSH, and rates.
    Analyze(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Override one configuration key, e.g. --set pump.power_mw=0.4.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output directory (overrides the configured one).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Master seed (overrides the configured one).
    #[arg(long)]
    seed: Option<u64>,
}

fn execute(command: &Command) -> Result<String, Error> {
    let args = match command {
        Command::Design(a)
        | Command::Sweep(a)
        | Command::Simulate(a)
        | Command::Stability(a)
        | Command::Analyze(a) => a,
    };
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| Error::io(args.config.display().to_string(), e))?;
    let mut config = parse_config(&text, &args.set)?;
    if let Some(out) = &args.out {
        config.output_dir = out.display().to_string();
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    let ws = Workspace::new(config)?;
    match command {
        Command::Design(_) => cmd_design(&ws),
        Command::Sweep(_) => cmd_sweep(&ws),
        Command::Simulate(_) => cmd_simulate(&ws),
        Command::Stability(_) => cmd_stability(&ws),
        Command::Analyze(_) => cmd_analyze(&ws),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli.command) {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
