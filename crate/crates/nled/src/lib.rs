//! Command surface over `nled-core`: configuration files, lattice
//! density ingestion, grid sweeps and the verification suites.

pub mod commands;
pub mod config;
pub mod error;
pub mod lattice;
pub mod report;
pub mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

pub use config::{Config, Format};
pub use error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "nled",
    version,
    about = "Fields, currents, charges and energies of nonlinear electrodynamics point and continuous sources"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON or TOML configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Directory for the output files (default: `output.dir` or the working directory).
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    /// Seed of the random sample points (default: `output.seed` or 0).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Table format of grid outputs.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum Command {
    /// E, H, the magnetic current and the energy density on the grid.
    Sample,
    /// Free charges from boundary fluxes, with a ladder of flux radii.
    Charge {
        /// Outer flux radius.
        #[arg(long = "R")]
        radius: Option<f64>,
    },
    /// Total field energy and near-charge exponents.
    Energy,
    /// Analytic and finite-difference currents on the grid.
    Current,
    /// Fields of the continuous source on the grid.
    Continuous,
    /// Run the invariant suites; fails unless all pass.
    Verify,
}

/// Executes one command and returns the files written.
pub fn execute(cli: &Cli) -> Result<Vec<PathBuf>, CliError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Config("--config is required".into()))?;
    let config = Config::load(path)?;
    let out_dir = cli
        .out_dir
        .clone()
        .or_else(|| config.output.dir.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&out_dir)
        .map_err(|e| CliError::io(&format!("cannot create {}", out_dir.display()), e))?;
    let session = commands::Session {
        format: cli.format.or(config.output.format).unwrap_or(Format::Csv),
        seed: cli.seed.or(config.output.seed).unwrap_or(0),
        out_dir,
        config,
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        pool = pool.num_threads(n);
    }
    let pool = pool
        .build()
        .map_err(|e| CliError::Config(format!("cannot start worker threads: {e}")))?;
    pool.install(|| match cli.command {
        Command::Sample => commands::sample(&session),
        Command::Charge { radius } => commands::charge(&session, radius),
        Command::Energy => commands::energy(&session),
        Command::Current => commands::current(&session),
        Command::Continuous => commands::continuous(&session),
        Command::Verify => commands::verify(&session),
    })
}

/// Runs the command, reporting to stdout/stderr, and maps the outcome to the exit status.
pub fn run(cli: &Cli) -> ExitCode {
    match execute(cli) {
        Ok(files) => {
            for f in files {
                println!("wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("nled: {e}");
            e.exit_code()
        }
    }
}
