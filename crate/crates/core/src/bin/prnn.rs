//! Command-line experiment driver.
//!
//! One TOML config plus a master seed determines every artifact byte.
//! Exit codes: 0 success, 1 invalid config or arguments, 2 runtime failure.

use std::path::PathBuf;

use clap::{Parser, Subcommand};
use photonic_rnn::experiment::{cmd_doe, cmd_mg, cmd_sweep, cmd_train, ExperimentConfig};

#[derive(Parser)]
#[command(
    name = "prnn",
    version,
    about = "Photonic recurrent network simulator: chaotic series prediction \
             with a Boolean readout trained by greedy bit flips"
)]
struct Cli {
    /// Experiment config (TOML); built-in defaults when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Override the master seed.
    #[arg(long, global = true, value_name = "INT")]
    seed: Option<u64>,

    /// Directory receiving all artifacts.
    #[arg(long, global = true, value_name = "DIR", default_value = "artifacts")]
    out: PathBuf,

    /// Worker threads for sweeps; 0 means one per core.
    #[arg(long, global = true, value_name = "INT", default_value_t = 0)]
    workers: usize,

    /// Override the input downsampling factor.
    #[arg(long, global = true, value_name = "INT")]
    downsample: Option<usize>,

    /// Also emit SVG plots (learning curve, prediction overlay).
    #[arg(long, global = true)]
    plot: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the chaotic drive series and write it as CSV.
    Mg,
    /// Build the coupling matrix and its heterogeneity statistics.
    Doe,
    /// Run one seeded end-to-end training and write all artifacts.
    Train,
    /// Train every configured grid point and tabulate the errors.
    Sweep,
}

fn run(cli: Cli) -> photonic_rnn::Result<()> {
    let mut config = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seeds.master = seed;
    }
    if let Some(factor) = cli.downsample {
        config.dataset.downsample = factor;
    }
    config.validate()?;
    std::fs::create_dir_all(&cli.out)?;
    match cli.command {
        Command::Mg => cmd_mg(&config, &cli.out).map(drop),
        Command::Doe => cmd_doe(&config, &cli.out).map(drop),
        Command::Train => cmd_train(&config, &cli.out, cli.plot).map(drop),
        Command::Sweep => cmd_sweep(&config, &cli.out, cli.workers).map(drop),
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
