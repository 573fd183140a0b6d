use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use wclab::{load_config, run_experiment, write_summary, ConfigError, ExperimentConfig, RunError};

const EXIT_FAILURE: u8 = 1;
const EXIT_INVALID: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

#[derive(Parser)]
#[command(name = "wclab", version, about = "Wireless-cable OTA emulation lab for ISAC base stations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Suppress progress and summary output.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Ideal,
    Conducted,
    Ota,
}

impl Mode {
    fn name(self) -> &'static str {
        match self {
            Mode::Ideal => "ideal",
            Mode::Conducted => "conducted",
            Mode::Ota => "ota",
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run {
        config: PathBuf,
        /// Replace the config's seed list with a single seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory, overriding `output_dir`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Emulation mode to compare against the ideal reference (drone experiments).
        #[arg(long, value_enum)]
        mode: Option<Mode>,
    },
    /// Validate a config and print it with all defaults filled in.
    Validate { config: PathBuf },
    /// Rebuild the summary table of a finished bundle.
    Summarize { bundle: PathBuf },
}

fn load(path: &Path) -> Result<ExperimentConfig, ExitCode> {
    load_config(path).map_err(|e| {
        eprintln!("error: {e}");
        match e {
            ConfigError::Read { .. } => ExitCode::from(EXIT_FAILURE),
            _ => ExitCode::from(EXIT_INVALID),
        }
    })
}

fn run(cli: Cli) -> Result<(), ExitCode> {
    match cli.command {
        Command::Validate { config } => {
            let cfg = load(&config)?;
            if !cli.quiet {
                print!("{}", cfg.echo());
            }
            Ok(())
        }
        Command::Run { config, seed, out, mode } => {
            let mut cfg = load(&config)?;
            if let Some(s) = seed {
                cfg.seeds = Some(vec![s]);
            }
            if let Some(o) = out {
                cfg.output_dir = o;
            }
            if let Some(m) = mode {
                cfg.processing.modes = vec![m.name().to_string()];
            }
            let report = run_experiment(&cfg).map_err(|e| {
                eprintln!("error: {e}");
                match e {
                    RunError::Config(_) => ExitCode::from(EXIT_INVALID),
                    e if e.is_numerical() => ExitCode::from(EXIT_NUMERICAL),
                    _ => ExitCode::from(EXIT_FAILURE),
                }
            })?;
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            if !cli.quiet {
                println!("wrote {} files to {}", report.files.len() + 1, report.output_dir.display());
                let summary = report.output_dir.join(wclab::summary::SUMMARY_TXT);
                if let Ok(text) = std::fs::read_to_string(summary) {
                    print!("{text}");
                }
            }
            Ok(())
        }
        Command::Summarize { bundle } => {
            if !bundle.is_dir() {
                eprintln!("error: {} is not a directory", bundle.display());
                return Err(ExitCode::from(EXIT_INVALID));
            }
            let table = write_summary(&bundle).map_err(|e| {
                eprintln!("error: {e}");
                ExitCode::from(EXIT_FAILURE)
            })?;
            if !cli.quiet {
                print!("{}", table.to_text());
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(code) => code,
    }
}
