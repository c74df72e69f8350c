use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use moen::commands::{self, Filter};
use moen::{Overrides, Result, RunConfig};

/// Minimum-energy observers with a learned value-function gradient.
#[derive(Parser)]
#[command(name = "moen", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate the true trajectory and the measurements (truth.csv).
    Simulate(Common),
    /// Kalman-Bucy filter; linear models only (estimate.csv, sigma.csv).
    Kalman(Common),
    /// Extended Kalman filter (estimate.csv, sigma.csv).
    Ekf(Common),
    /// Train the network (theta.csv, costs.csv).
    Train(Common),
    /// Run the network observer with trained parameters (observer.csv).
    Observe {
        #[command(flatten)]
        common: Common,
        /// Parameter file written by `train`; its `.shape.toml` sidecar must sit next to it.
        #[arg(long)]
        theta: PathBuf,
        /// Observations in truth.csv format; simulated from the config when absent.
        #[arg(long)]
        obs: Option<PathBuf>,
    },
    /// Optimal against learned cost over the [report] grid (report.csv, report.txt).
    Report(Common),
}

#[derive(Args)]
struct Common {
    /// TOML run configuration; the harmonic preset when absent.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Number of ensemble samples d.
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    iters: Option<usize>,
    /// Ensemble seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

impl Common {
    fn resolve(&self) -> Result<RunConfig> {
        let mut config = RunConfig::load(self.config.as_deref())?;
        config.apply(&Overrides {
            alpha: self.alpha,
            samples: self.samples,
            iters: self.iters,
            seed: self.seed,
            out_dir: self.out_dir.clone(),
        })?;
        Ok(config)
    }
}

fn run(cli: Cli) -> Result<String> {
    match cli.command {
        Command::Simulate(c) => commands::simulate(&c.resolve()?),
        Command::Kalman(c) => commands::filter(&c.resolve()?, Filter::KalmanBucy),
        Command::Ekf(c) => commands::filter(&c.resolve()?, Filter::Extended),
        Command::Train(c) => commands::train_cmd(&c.resolve()?),
        Command::Observe { common, theta, obs } => commands::observe(&common.resolve()?, &theta, obs.as_deref()),
        Command::Report(c) => commands::report(&c.resolve()?).map(|(_, text)| text),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(summary) => {
            print!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("moen: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
