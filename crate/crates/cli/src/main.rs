use std::path::PathBuf;
use std::process::ExitCode;

use abctrack::inference::Algorithm;
use clap::{Parser, Subcommand};

mod commands;
mod config;

#[derive(Debug, Parser)]
#[command(name = "abctrack", version, about = "Likelihood-free tracking with binary directional sensors")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a scenario (truth and observations) from a config file.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "scenario.json")]
        out: PathBuf,
    },
    /// Track the targets of a scenario file with one sampler.
    Track {
        scenario: PathBuf,
        #[arg(long)]
        algorithm: Algorithm,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "estimates.csv")]
        out: PathBuf,
        /// Write every proposal (and, for abc-pt, every swap) to this CSV.
        #[arg(long)]
        particle_log: Option<PathBuf>,
        /// Worker threads; 0 uses every core.
        #[arg(long, default_value_t = 0)]
        workers: usize,
    },
    /// Run a repeated RMSE experiment over a grid of target and sensor counts.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory.
        #[arg(long, default_value = "results")]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        workers: usize,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("error")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate { config, seed, out } => commands::simulate(&config, seed, &out),
        Command::Track {
            scenario,
            algorithm,
            config,
            seed,
            out,
            particle_log,
            workers,
        } => commands::with_workers(workers, || {
            commands::track(&scenario, algorithm, &config, seed, &out, particle_log.as_deref())
        }),
        Command::Experiment {
            config,
            seed,
            out,
            workers,
        } => commands::with_workers(workers, || commands::experiment(&config, seed, &out)),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("error: {}", msg.replace('\n', " "));
            ExitCode::FAILURE
        }
    }
}
