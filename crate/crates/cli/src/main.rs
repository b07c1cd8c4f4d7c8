//! `kclosure`: tables and trajectories for the exact kinetic closure.

mod commands;
mod config;
mod output;
mod profile;

use clap::{Args, Parser, Subcommand};
use serde_json::json;
use std::path::PathBuf;
use std::process::ExitCode;

use output::Format;

#[derive(Debug, Parser)]
#[command(name = "kclosure", version, about = "Dispersion, spectra and density evolution for the exact BGK closure")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Flat `key = value` file with defaults for any flag.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// lambda*(k) over a range of wave numbers.
    #[command(args_override_self = true)]
    Dispersion {
        #[arg(long, default_value_t = 0.1, allow_hyphen_values = true)]
        k_min: f64,
        #[arg(long, default_value_t = 12.5331, allow_hyphen_values = true)]
        k_max: f64,
        #[arg(long, default_value_t = 200)]
        n_points: usize,
        #[arg(long, default_value_t = 0.1, allow_hyphen_values = true)]
        tau: f64,
        #[command(flatten)]
        common: Common,
    },
    /// The Green's-function profile g(x) = e^{x^2} (sign x - erf x).
    #[command(args_override_self = true)]
    Greens {
        #[arg(long, default_value_t = -3.0, allow_hyphen_values = true)]
        x_min: f64,
        #[arg(long, default_value_t = 3.0, allow_hyphen_values = true)]
        x_max: f64,
        #[arg(long, default_value_t = 601)]
        n_points: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Spectrum of the moment operator at one wave number.
    #[command(args_override_self = true)]
    Spectrum {
        #[arg(long, default_value_t = 5.0, allow_hyphen_values = true)]
        k: f64,
        #[arg(long, default_value_t = 0.1, allow_hyphen_values = true)]
        tau: f64,
        /// Truncation size for the Ritz values.
        #[arg(long, default_value_t = 100)]
        n: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Evolves a periodic density profile.
    #[command(args_override_self = true)]
    Evolve {
        /// closure_exact, ce_order1, ce_order3, ce_order5 or kinetic_truncated.
        #[arg(long, default_value = "closure_exact")]
        model: String,
        /// `;`-separated terms: constant:value=V, gaussian:amp=A,center=C,width=W, cosine:mode=J,amp=A,phase=P.
        #[arg(long, default_value = "constant:value=1;cosine:mode=1,amp=0.1")]
        profile: String,
        #[arg(long, default_value_t = 0.1, allow_hyphen_values = true)]
        tau: f64,
        /// Grid points, a power of two.
        #[arg(long, default_value_t = 64)]
        grid: usize,
        /// Domain length.
        #[arg(long, default_value_t = std::f64::consts::TAU, allow_hyphen_values = true)]
        length: f64,
        #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
        t_end: f64,
        #[arg(long, default_value_t = 0.01, allow_hyphen_values = true)]
        dt: f64,
        /// Hermite moments for kinetic_truncated.
        #[arg(long, default_value_t = 64)]
        n_moments: usize,
        /// Supercritical modes under closure_exact: damp_essential or zero_mode.
        #[arg(long, default_value = "damp_essential")]
        policy: String,
        /// Record every n-th step.
        #[arg(long, default_value_t = 1)]
        save_every: usize,
        /// Per-mode kinetic start of the attraction report: equilibrium or white.
        #[arg(long, default_value = "equilibrium")]
        kinetic_start: String,
        /// Seed for the white start.
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[command(flatten)]
        common: Common,
    },
    /// Exact Chapman-Enskog multiplier terms.
    #[command(args_override_self = true)]
    Ce {
        /// Highest power of tau.
        #[arg(long, default_value_t = 5)]
        order: usize,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(kinetic_closure::Error),
    Io(std::io::Error),
}

impl From<kinetic_closure::Error> for CliError {
    fn from(e: kinetic_closure::Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Io(_) => 2,
            CliError::Core(e) if e.is_validation() => 2,
            CliError::Core(_) => 3,
        }
    }

    fn record(&self) -> serde_json::Value {
        let (kind, message) = match self {
            CliError::Usage(m) => ("usage", m.clone()),
            CliError::Io(e) => ("io", e.to_string()),
            CliError::Core(e) => (e.kind(), e.to_string()),
        };
        json!({"error": kind, "message": message, "exit_code": self.exit_code()})
    }
}

fn fail(e: CliError) -> ExitCode {
    output::diagnostic(&e.record());
    ExitCode::from(e.exit_code())
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let argv = match config::expand(argv, |p| std::fs::read_to_string(p)) {
        Ok(a) => a,
        Err(e) => return fail(CliError::Usage(e.0)),
    };
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let msg = e.render().to_string();
            return fail(CliError::Usage(msg.trim_end().to_string()));
        }
    };
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(e),
    }
}
