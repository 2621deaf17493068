use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dispersia_cli::{cmd_analyze, cmd_fit, cmd_simulate, cmd_spectrum, parse_window, CliError, RunConfig, Status};

/// Passivity analysis and modal simulation of Maxwell's equations in
/// dispersive media.
#[derive(Debug, Parser)]
#[command(name = "dispersia", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Certify the kernels and check passivity, strict passivity and the decay exponent.
    Analyze {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Integrate the configured modes and write the energy trace.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Tabulate the spectral abscissa of each mode over a k-grid.
    Spectrum {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Classify the decay of an energy trace.
    Fit {
        /// Trace file; defaults to `fit.trace` in the config.
        trace: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Fit window `a,b`; defaults to [T/5, T].
        #[arg(long, value_parser = parse_window, allow_hyphen_values = true)]
        window: Option<(f64, f64)>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<Status, CliError> {
    match cli.command {
        Command::Analyze { config, out } => cmd_analyze(&RunConfig::load(&config)?, out.as_deref()),
        Command::Simulate { config, out, threads } => {
            cmd_simulate(&RunConfig::load(&config)?, out.as_deref(), threads)
        }
        Command::Spectrum { config, out, threads } => {
            cmd_spectrum(&RunConfig::load(&config)?, out.as_deref(), threads)
        }
        Command::Fit { trace, config, window, out } => {
            let cfg = config.as_deref().map(RunConfig::load).transpose()?;
            cmd_fit(cfg.as_ref(), trace.as_deref(), window, out.as_deref())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter("DISPERSIA_LOG")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(status) => {
            if status == Status::Inconclusive {
                eprintln!("dispersia: fit is inconclusive");
            } else if status == Status::NotPassive {
                eprintln!("dispersia: medium is not passive");
            }
            ExitCode::from(status.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("dispersia: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
