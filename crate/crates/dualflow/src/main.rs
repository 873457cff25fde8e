use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dualflow::commands::{self, CertifyOverrides, Outcome};

#[derive(Parser)]
#[command(name = "dualflow", version, about = "Certified implicit-Euler solver for linear-growth gradient flows")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve the flow described by a configuration file.
    Run { config: PathBuf },
    /// Tabulate f, f⁰, f* and a Fenchel–Young check at sample points.
    Table { lagrangian: PathBuf, samples: PathBuf },
    /// Certify a stored (state, flux) pair against a configured step.
    Certify {
        state: PathBuf,
        flux: PathBuf,
        config: PathBuf,
        /// Data g of the step (defaults to the configured initial state).
        #[arg(long)]
        data: Option<PathBuf>,
        /// Step size (defaults to the first configured step).
        #[arg(long)]
        tau: Option<f64>,
    },
}

fn execute(cli: Cli) -> anyhow::Result<Outcome> {
    commands::check_threads(std::env::var("DUALFLOW_THREADS").ok().as_deref())?;
    match cli.command {
        Command::Run { config } => {
            let (outcome, summary) = commands::run(&config)?;
            print!("{summary}");
            Ok(outcome)
        }
        Command::Table { lagrangian, samples } => {
            print!("{}", commands::table(&lagrangian, &samples)?);
            Ok(Outcome::Certified)
        }
        Command::Certify { state, flux, config, data, tau } => {
            let over = CertifyOverrides { data: data.as_deref(), tau };
            let (outcome, report) = commands::certify_files(&state, &flux, &config, &over)?;
            print!("{report}");
            Ok(outcome)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match execute(cli) {
        Ok(outcome) => ExitCode::from(outcome.exit_code() as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
