//! Experiment runner for modulated-surrogate Bayesian optimization: config
//! loading, seeded sweeps with CSV/JSON trace persistence, comparison
//! tables and posterior grid dumps.

pub mod config;
pub mod dump;
pub mod run;
pub mod summarize;

use std::io;

pub use config::ExperimentConfig;

/// Errors surfaced by the command line, each mapped to an exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("usage error: {0}")]
    Usage(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Usage(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }
}

impl From<modbo::Error> for CliError {
    fn from(e: modbo::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Runtime(format!("i/o: {e}"))
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Runtime(format!("csv: {e}"))
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Worker pool capped by `MODBO_THREADS` (all cores when unset).
pub fn thread_pool() -> CliResult<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("MODBO_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|n| *n > 0)
            .ok_or_else(|| CliError::Config(format!("MODBO_THREADS must be a positive integer, got {v:?}")))?;
        builder = builder.num_threads(n);
    }
    builder
        .build()
        .map_err(|e| CliError::Runtime(format!("thread pool: {e}")))
}

/// One line per catalog entry, in catalog order.
pub fn list_benchmarks() -> Vec<String> {
    modbo::benchmarks::catalog().iter().map(|b| b.listing()).collect()
}
