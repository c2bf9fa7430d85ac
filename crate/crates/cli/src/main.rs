use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use muskat_cli::commands::{self, CliError, EXIT_CONFIG};
use muskat_cli::config::{config_dir, load_config};

#[derive(Parser)]
#[command(name = "muskat", version, about = "Three-phase Muskat interface simulator")]
struct Cli {
    /// Only print warnings and errors.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve the initial interfaces and write series, snapshots and meta.json.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; defaults to `output.directory` of the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare linearized growth rates of eigenmodes with the flat symbol.
    Dispersion {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5,6,7,8")]
        modes: Vec<u32>,
        #[arg(long, default_value_t = 1e-6)]
        eps: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check analytic derivatives against central differences.
    CheckJacobian {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 1e-4)]
        eps: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sample velocity and pressure on a rectangular grid for one snapshot.
    Field {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        snapshot: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Residuals of the layer operator identities at the initial state.
    Identities {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Squirt and distance diagnostics of a finished simulate run.
    Diagnose {
        #[arg(long)]
        out: PathBuf,
    },
}

fn dispatch(command: Command) -> Result<i32, CliError> {
    let load = |path: &Path, out: Option<PathBuf>| -> Result<_, CliError> {
        let cfg = load_config(path)?;
        let out = out.unwrap_or_else(|| cfg.output.directory.clone());
        Ok((cfg, config_dir(path), out))
    };
    match command {
        Command::Simulate { config, out } => {
            let (cfg, base, out) = load(&config, out)?;
            commands::simulate(&cfg, &base, &out)
        }
        Command::Dispersion { config, modes, eps, out } => {
            let (cfg, base, out) = load(&config, out)?;
            commands::dispersion(&cfg, &base, &modes, eps, &out)
        }
        Command::CheckJacobian { config, eps, out } => {
            let (cfg, base, out) = load(&config, out)?;
            commands::check_jacobian(&cfg, &base, eps, &out)
        }
        Command::Field { config, snapshot, out } => {
            let (cfg, base, out) = load(&config, out)?;
            commands::field(&cfg, &base, &snapshot, &out)
        }
        Command::Identities { config, out } => {
            let (cfg, base, out) = load(&config, out)?;
            commands::identities(&cfg, &base, &out)
        }
        Command::Diagnose { out } => commands::diagnose(&out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.quiet { "warn" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let code = match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if e.exit_code() == EXIT_CONFIG {
                eprintln!("no run was started");
            }
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
