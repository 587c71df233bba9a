mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::ConfigError;
use output::NotEmpty;

pub const EXIT_OK: u8 = 0;
pub const EXIT_PROPERTY: u8 = 1;
pub const EXIT_FAIL: u8 = 2;
pub const EXIT_INCONCLUSIVE: u8 = 3;
pub const EXIT_CONFIG: u8 = 64;

#[derive(Parser, Debug)]
#[command(name = "nullwave", version, about = "Characteristic solver and δ-scaling experiments for □φ = Q(∇φ,∇φ)")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON configuration (defaults are used when omitted).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Worker threads; overrides `worker_count` from the config.
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// Write into a non-empty output directory.
    #[arg(long, global = true)]
    force: bool,

    /// Also write SVG plots of the fitted quantities.
    #[arg(long, global = true)]
    plots: bool,

    /// Replaces the root of a relative `output_dir`.
    #[arg(long, env = "NULLWAVE_OUTPUT_ROOT", hide_env_values = true, hide = true)]
    output_root: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the null-form algebra property suite.
    VerifyAlgebra {
        /// Null samples per basis form.
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, hide = true)]
        corrupt_basis: bool,
    },
    /// March one configuration and write the field and its diagnostics.
    Run,
    /// δ-sweep with power-law fits.
    Sweep,
    /// Grid refinement and u₀ studies.
    Converge,
    /// δ-sweep with the shrinking-cap focusing preset.
    Focus,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::VerifyAlgebra { samples, corrupt_basis } => Ok(commands::verify_algebra(samples, corrupt_basis)),
        Command::Run => commands::run(&cli),
        Command::Sweep => commands::sweep(&cli, false),
        Command::Focus => commands::sweep(&cli, true),
        Command::Converge => commands::converge(&cli),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<ConfigError>().is_some() || e.downcast_ref::<NotEmpty>().is_some() {
                ExitCode::from(EXIT_CONFIG)
            } else {
                ExitCode::from(EXIT_PROPERTY)
            }
        }
    }
}
