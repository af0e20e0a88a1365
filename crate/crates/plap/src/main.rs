//! `plap`: experiments on superposed fundamental solutions of the p-Laplace
//! equation.
//!
//! Exit codes: 0 success, 1 a verification check failed, 2 usage error,
//! 3 invalid configuration or runtime failure. Set `PLAP_LOG` (e.g.
//! `PLAP_LOG=info`) for progress logging on stderr.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use plap::commands::{self, CommandError, SignMapRange};
use plap::config::{ExperimentConfig, CONFIG_VERSION};
use plap::sampling::DEFAULT_SEED;
use plap::suites::{run_suite, Suite};

const EXIT_CHECK_FAILED: u8 = 1;
const EXIT_RUNTIME: u8 = 3;

#[derive(Parser)]
#[command(
    name = "plap",
    version,
    about = "Superpositions of p-Laplace fundamental solutions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate W = V + K and its p-Laplacian three ways at the configured points.
    Eval {
        #[arg(long)]
        config: PathBuf,
        /// CSV destination (stdout if omitted).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides the config's seed for random poles and points.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Sign class of the p-Laplacian of superpositions over a (p, n) grid.
    SignMap {
        #[arg(long, default_value_t = 0.2)]
        p_min: f64,
        #[arg(long, default_value_t = 4.0)]
        p_max: f64,
        #[arg(long, default_value_t = 0.05)]
        p_step: f64,
        #[arg(long, default_value_t = 1)]
        n_min: usize,
        #[arg(long, default_value_t = 6)]
        n_max: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a verification suite and print a JSON report.
    Verify {
        #[arg(long, value_enum, default_value_t = Suite::All)]
        suite: Suite,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        /// JSON destination (stdout if omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve the p-harmonic comparison problem; grid CSV to --out, summary JSON to stdout.
    Compare {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Tabulate the evolution defects (Barenblatt along a ray, or two-bump in time).
    EvolutionSweep {
        /// Defaults to p = 3, n = 2, Barenblatt with C = 1, t = 1, a = 2.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn emit(out: Option<&Path>, text: &str) -> std::io::Result<()> {
    match out {
        Some(path) => std::fs::write(path, text),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()
        }
    }
}

fn load(path: &Path) -> Result<ExperimentConfig, CommandError> {
    let cfg = ExperimentConfig::from_path(path)?;
    log::debug!(
        "loaded {} (config version {CONFIG_VERSION})",
        path.display()
    );
    Ok(cfg)
}

fn seed_for(cfg: &ExperimentConfig, flag: Option<u64>) -> u64 {
    flag.or(cfg.seed).unwrap_or(DEFAULT_SEED)
}

fn run(cli: Cli) -> Result<u8, CommandError> {
    match cli.command {
        Command::Eval { config, out, seed } => {
            let cfg = load(&config)?;
            let csv = commands::eval_csv(&cfg, seed_for(&cfg, seed))?;
            emit(out.as_deref(), &csv)?;
        }
        Command::SignMap {
            p_min,
            p_max,
            p_step,
            n_min,
            n_max,
            out,
        } => {
            let csv = commands::sign_map_csv(&SignMapRange {
                p_min,
                p_max,
                p_step,
                n_min,
                n_max,
            })?;
            emit(out.as_deref(), &csv)?;
        }
        Command::Verify { suite, seed, out } => {
            let report = run_suite(suite, seed);
            for check in &report.checks {
                log::info!("{check}");
            }
            let json = serde_json::to_string_pretty(&report).expect("report serializes");
            emit(out.as_deref(), &(json + "\n"))?;
            if !report.passed {
                return Ok(EXIT_CHECK_FAILED);
            }
        }
        Command::Compare { config, out, seed } => {
            let cfg = load(&config)?;
            let (csv, summary) = commands::compare(&cfg, seed_for(&cfg, seed))?;
            if let Some(path) = &out {
                std::fs::write(path, csv)?;
            }
            let json = serde_json::to_string_pretty(&summary).expect("summary serializes");
            emit(None, &(json + "\n"))?;
        }
        Command::EvolutionSweep { config, out } => {
            let cfg = match config {
                Some(path) => load(&path)?,
                None => ExperimentConfig::parse(r#"{"version": 1, "params": {"p": 3, "n": 2}}"#)?,
            };
            let csv = commands::evolution_sweep_csv(&cfg)?;
            emit(out.as_deref(), &csv)?;
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("PLAP_LOG", "warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(CommandError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}
