//! `fkqsd`: runs particle, Lyapunov, sampler and oracle experiments from a
//! TOML config and writes CSV artifacts plus a `summary.txt`.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::ExperimentConfig;

#[derive(Parser, Debug)]
#[command(name = "fkqsd", version, about = "Killed Feynman-Kac experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Experiment config (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed; overrides `[output] seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (results do not depend on this).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output directory; overrides `[output] directory`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// Independent killed, weighted paths from the start state.
    Simulate,
    /// Principal eigenvalue from the particle system.
    Lambda,
    /// Quasi-stationary histogram and its one-epoch fixed-point check.
    Qsd,
    /// TV decay of a point mass toward the estimated q.s.d.
    Convergence,
    /// Drift scan of a Lyapunov function.
    Lyapunov,
    /// Characteristic-function test of the Lévy sampler.
    SamplerTest,
    /// Grid eigenvalue reference.
    Oracle,
}

/// A failed run, mapped to the process exit code.
#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("{0}")]
    Validation(String),
    #[error(transparent)]
    Core(#[from] fkqsd::Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl RunError {
    fn kind(&self) -> &'static str {
        use fkqsd::Error as E;
        match self {
            RunError::Validation(_) => "validation",
            RunError::Core(E::InvalidSpec(_) | E::DimensionMismatch { .. } | E::InvalidArgument(_) | E::SingularState) => {
                "validation"
            }
            RunError::Core(E::Extinct { .. }) => "extinction",
            RunError::Core(E::NonConvergence(_)) => "oracle_nonconvergence",
            RunError::Core(_) | RunError::Io(_) => "runtime",
        }
    }

    fn exit_code(&self) -> u8 {
        match self.kind() {
            "validation" => 2,
            "extinction" => 3,
            "oracle_nonconvergence" => 4,
            _ => 1,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut out_dir = cli.out.clone();
    let result = load(&cli).and_then(|cfg| {
        out_dir = Some(PathBuf::from(&cfg.output.directory));
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.workers.unwrap_or(0))
            .build()
            .map_err(|e| RunError::Validation(format!("worker pool: {e}")))?;
        pool.install(|| commands::run(cli.command, &cfg))
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let reason = e.to_string().replace('\n', " ");
            eprintln!("error kind={} code={} reason={reason:?}", e.kind(), e.exit_code());
            if let Some(dir) = out_dir {
                let _ = output::write_failure(&dir, e.kind(), e.exit_code(), &reason);
            }
            ExitCode::from(e.exit_code())
        }
    }
}

/// Reads the config and applies the command-line overrides.
fn load(cli: &Cli) -> Result<ExperimentConfig, RunError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| RunError::Validation("--config is required".into()))?;
    let text = std::fs::read_to_string(path)
        .map_err(|e| RunError::Validation(format!("cannot read {}: {e}", path.display())))?;
    let mut cfg = ExperimentConfig::parse(&text)?;
    if let Some(seed) = cli.seed {
        cfg.output.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.output.directory = out.display().to_string();
    }
    if cli.workers == Some(0) {
        return Err(RunError::Validation("--workers must be at least 1".into()));
    }
    Ok(cfg)
}
