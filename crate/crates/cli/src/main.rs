mod config;
mod experiments;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use pvsplit::Error;
use serde_json::json;

use config::{Experiment, ExperimentConfig};
use output::OutputDir;

const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

/// Reproducible experiments with randomly split point-vortex flows on the torus.
#[derive(Debug, Parser)]
#[command(name = "pvsplit", version)]
struct Cli {
    experiment: Experiment,
    /// JSON experiment configuration.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the seed in the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (overrides `output_dir`).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::InvalidInput(_) => "invalid_input",
        Error::SingularPoint { .. } => "singular_point",
        Error::SingularConfiguration { .. } => "singular_configuration",
        Error::NearCollision { .. } => "near_collision",
        Error::StepLimit { .. } => "step_limit",
        Error::TableAccuracy { .. } => "table_accuracy",
        Error::InvalidTemperature { .. } => "invalid_temperature",
        Error::EmptyShell { .. } => "empty_shell",
        Error::Io(_) => "io",
        Error::Json(_) => "json",
    }
}

fn exit_status(e: &Error) -> u8 {
    match e {
        Error::InvalidInput(_) | Error::InvalidTemperature { .. } => EXIT_CONFIG,
        Error::Io(_) | Error::Json(_) => 1,
        _ => EXIT_NUMERICAL,
    }
}

fn init_threads() -> Result<usize, String> {
    let Ok(raw) = std::env::var("PVSPLIT_THREADS") else {
        return Ok(rayon::current_num_threads());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| format!("PVSPLIT_THREADS must be a positive integer, got {raw:?}"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())?;
    Ok(n)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let threads = match init_threads() {
        Ok(n) => n,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let cfg = match ExperimentConfig::load(&cli.config)
        .and_then(|c| c.resolve(cli.experiment, cli.seed, cli.out.clone()))
    {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let out = match OutputDir::create(cfg.out_dir()) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: cannot create {}: {e}", cfg.out_dir().display());
            return ExitCode::FAILURE;
        }
    };
    if let Err(e) = out.write_json("config.resolved.json", &cfg) {
        eprintln!("error: {e}");
        return ExitCode::FAILURE;
    }
    log::info!(
        "running {} (seed {}, {threads} threads) into {}",
        cli.experiment,
        cfg.seed(),
        cfg.out_dir().display()
    );
    let start = Instant::now();
    let result = experiments::run(&cfg, &out);
    let meta = json!({
        "experiment": cli.experiment,
        "seed": cfg.seed(),
        "threads": threads,
        "version": env!("CARGO_PKG_VERSION"),
        "elapsed_seconds": start.elapsed().as_secs_f64(),
        "completed_unix": std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        "ok": result.is_ok(),
    });
    if let Err(e) = out.write_json("metadata.json", &meta) {
        log::warn!("could not write metadata: {e}");
    }
    match result {
        Ok(summary) => match out.write_json("summary.json", &summary) {
            Ok(path) => {
                println!("{}", path.display());
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::FAILURE
            }
        },
        Err(e) => {
            eprintln!("error: {e}");
            let report = json!({
                "experiment": cli.experiment,
                "seed": cfg.seed(),
                "kind": error_kind(&e),
                "message": e.to_string(),
                "details": details(&e),
            });
            if let Err(w) = out.write_json("error.json", &report) {
                log::warn!("could not write error report: {w}");
            }
            ExitCode::from(exit_status(&e))
        }
    }
}

fn details(e: &Error) -> serde_json::Value {
    match *e {
        Error::SingularPoint { distance } => json!({ "distance": distance }),
        Error::SingularConfiguration { i, j, distance } => {
            json!({ "i": i, "j": j, "distance": distance })
        }
        Error::NearCollision { t, distance } => json!({ "t": t, "distance": distance }),
        Error::StepLimit { t, steps } => json!({ "t": t, "steps": steps }),
        Error::TableAccuracy {
            max_error,
            tolerance,
        } => json!({ "max_error": max_error, "tolerance": tolerance }),
        Error::InvalidTemperature { beta, limit } => json!({ "beta": beta, "limit": limit }),
        Error::EmptyShell {
            energy,
            width,
            attempts,
        } => json!({ "energy": energy, "width": width, "attempts": attempts }),
        _ => serde_json::Value::Null,
    }
}
