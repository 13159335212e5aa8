//! `subord-kit`: command-line front end for subordkit.
//!
//! Exit codes: 0 success, 2 config error, 3 numerical failure, 4 statistical failure.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::Suite;
use config::Config;
use error::CliError;

#[derive(Parser)]
#[command(name = "subord-kit", version, about = "Subordinators: Bernstein functions, generalized gamma, harmonic potentials")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Common {
    /// Spec file: `key = value` lines or JSON.
    #[arg(long)]
    config: PathBuf,
}

#[derive(Subcommand)]
enum Cmd {
    /// Print the spec as config, phi on a grid and Webster diagnostics.
    Describe(Common),
    /// Moments of I and R with the product oracle and the duality residual.
    Moments {
        #[command(flatten)]
        common: Common,
        /// Integer orders.
        #[arg(long, value_delimiter = ',')]
        n: Vec<u32>,
        /// Real orders.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        s: Vec<f64>,
    },
    /// Infinite-divisibility verdict for log I.
    Idtest {
        #[command(flatten)]
        common: Common,
        /// Also write rho on the search grid to this CSV file.
        #[arg(long)]
        rho: Option<PathBuf>,
    },
    /// Harmonic potential density rho on a grid.
    Hpm {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',')]
        grid: Vec<f64>,
        /// Add numeric-inversion and difference columns.
        #[arg(long)]
        numeric: bool,
    },
    /// Generalized gamma function and Euler constant of phi.
    Gamma {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',')]
        s: Vec<f64>,
    },
    /// Monte Carlo verification suite.
    Verify {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        suite: Suite,
        /// Override sim.n.
        #[arg(long)]
        samples: Option<usize>,
        /// Override sim.seed.
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn load(c: &Common) -> Result<Config, CliError> {
    let text = std::fs::read_to_string(&c.config).map_err(|source| CliError::Read {
        path: c.config.display().to_string(),
        source,
    })?;
    Config::parse(&text)
}

fn run(cli: Cli) -> Result<u8, CliError> {
    let stdout = std::io::stdout().lock();
    match cli.cmd {
        Cmd::Describe(c) => commands::describe(&load(&c)?, stdout)?,
        Cmd::Moments { common, n, s } => commands::moments(&load(&common)?, &n, &s, stdout)?,
        Cmd::Idtest { common, rho } => commands::idtest(&load(&common)?, rho.as_deref(), stdout)?,
        Cmd::Hpm { common, grid, numeric } => commands::hpm(&load(&common)?, &grid, numeric, stdout)?,
        Cmd::Gamma { common, s } => commands::gamma(&load(&common)?, &s, stdout)?,
        Cmd::Verify {
            common,
            suite,
            samples,
            seed,
        } => {
            let cfg = load(&common)?;
            let mut sim = commands::sim_config(&cfg)?;
            if let Some(n) = samples {
                sim.n_samples = n;
            }
            if let Some(s) = seed {
                sim.seed = s;
            }
            if !commands::verify(&cfg, suite, &sim, stdout)? {
                eprintln!("statistical check failed");
                return Ok(4);
            }
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
