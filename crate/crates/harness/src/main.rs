use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mcsfa_harness::{run_sweep, write_features, write_sweep, HarnessError, Status, SweepConfig};

#[derive(Parser)]
#[command(name = "mcsfa", version, about = "Slow-feature value-function experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the sweep and write results.csv, heatmaps and manifest.json
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Maximum worker threads
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Plot slow features and stationary distributions
    Features {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Check a config file and report the sweep size
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

fn run(cli: Cli) -> Result<(), HarnessError> {
    match cli.command {
        Command::Sweep { config, out, jobs } => {
            let (cfg, bytes) = SweepConfig::load(&config)?;
            let results = run_sweep(&cfg, jobs)?;
            let files = write_sweep(&out, &bytes, &results)?;
            let ok = results.iter().filter(|r| r.status == Status::Ok).count();
            println!(
                "{} cells: {ok} ok, {} skipped; wrote {} files to {}",
                results.len(),
                results.len() - ok,
                files.len() + 1,
                out.display()
            );
        }
        Command::Features { config, out } => {
            let (cfg, bytes) = SweepConfig::load(&config)?;
            let files = write_features(&cfg, &bytes, &out)?;
            println!("wrote {} files to {}", files.len() + 1, out.display());
        }
        Command::Validate { config } => {
            let (cfg, _) = SweepConfig::load(&config)?;
            println!("{}: ok, {} cells", config.display(), cfg.n_cells());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
