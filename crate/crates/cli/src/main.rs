use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mmw_cellsearch_cli::{
    cmd_codebook, cmd_power, cmd_sweep, parse_schemes, CliError, PowerArgs, SweepArgs,
};

#[derive(Parser)]
#[command(
    name = "cellsearch",
    version,
    about = "mmWave initial cell search simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte Carlo access-error sweep.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; created if missing.
        #[arg(long)]
        out: PathBuf,
        /// Override the config's master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads; defaults to the available parallelism.
        #[arg(long)]
        workers: Option<usize>,
        /// Override the config's trial count.
        #[arg(long)]
        trials: Option<u64>,
    },
    /// Tabulate receiver power against ADC resolution.
    Power {
        #[arg(long, default_value = "configs/components.toml")]
        components: PathBuf,
        #[arg(long, default_value_t = 1)]
        b_min: u32,
        #[arg(long, default_value_t = 10)]
        b_max: u32,
        /// Comma-separated subset of abf,psn,hbf,dbf; may be empty.
        #[arg(long, default_value = "abf,psn,hbf,dbf")]
        schemes: String,
        #[arg(long, default_value_t = 16)]
        n_ms: usize,
        /// Branch count used for PSN and HBF.
        #[arg(long, default_value_t = 3)]
        branches: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Dump a codebook and its beam patterns.
    Codebook {
        #[arg(long)]
        antennas: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Sweep {
            config,
            out,
            seed,
            workers,
            trials,
        } => {
            let outcome = cmd_sweep(&SweepArgs {
                config,
                out,
                seed,
                workers,
                trials,
            })?;
            eprintln!(
                "wrote {} rows to {} ({})",
                outcome.rows,
                outcome.csv_path.display(),
                outcome.manifest_path.display()
            );
        }
        Command::Power {
            components,
            b_min,
            b_max,
            schemes,
            n_ms,
            branches,
            out,
        } => cmd_power(&PowerArgs {
            components,
            b_min,
            b_max,
            schemes: parse_schemes(&schemes)?,
            n_ms,
            branches,
            out,
        })?,
        Command::Codebook { antennas, out } => cmd_codebook(antennas, &out)?,
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
