//! `run`: one trace per (surrogate, repetition).

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use log::{info, warn};
use modbo::bo::{run_bo, RunTrace};
use modbo::samplers::ChainProfile;
use modbo::surrogates::SurrogateKind;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::{thread_pool, CliError, CliResult};

/// Everything about a run that the CSV rows do not carry.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceSidecar {
    pub benchmark: String,
    pub surrogate: SurrogateKind,
    pub repetition: usize,
    pub seed: u64,
    pub trace: RunTrace,
}

pub fn trace_stem(surrogate: SurrogateKind, rep: usize) -> String {
    format!("{}_rep{rep:03}", surrogate.tag())
}

pub fn csv_path(dir: &Path, surrogate: SurrogateKind, rep: usize) -> PathBuf {
    dir.join(format!("{}.csv", trace_stem(surrogate, rep)))
}

pub fn sidecar_path(dir: &Path, surrogate: SurrogateKind, rep: usize) -> PathBuf {
    dir.join(format!("{}.trace.json", trace_stem(surrogate, rep)))
}

/// Header `iter,x_0..x_{Q-1},f_raw,best_so_far`; x in the benchmark's own
/// coordinates.
pub fn write_trace_csv(path: &Path, trace: &RunTrace, q: usize) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["iter".to_string()];
    header.extend((0..q).map(|d| format!("x_{d}")));
    header.extend(["f_raw".to_string(), "best_so_far".to_string()]);
    w.write_record(&header)?;
    for r in &trace.records {
        let mut row = vec![r.iter.to_string()];
        row.extend(r.x_raw.iter().map(|v| v.to_string()));
        row.push(r.f_raw.to_string());
        row.push(r.best_so_far.to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut f = fs::File::create(path)?;
    serde_json::to_writer_pretty(&mut f, value).map_err(|e| CliError::Runtime(format!("json: {e}")))?;
    f.write_all(b"\n")?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunOutcome {
    pub written: Vec<PathBuf>,
    pub aborted: Vec<String>,
}

/// Runs every (surrogate, repetition) pair of the experiment on the worker
/// pool. Each job writes only its own files.
pub fn cmd_run(config: &ExperimentConfig, allow_paper_profile: bool) -> CliResult<RunOutcome> {
    if config.chain_profile == ChainProfile::Paper {
        if !allow_paper_profile {
            return Err(CliError::Config(
                "chain_profile \"paper\" requires --allow-paper-profile".into(),
            ));
        }
        warn!("paper chain profile: each iteration runs 35000 MCMC steps per chain");
    }
    let objective = config.objective()?;
    let q = objective.domain.len();
    fs::create_dir_all(&config.output_dir)?;
    let jobs: Vec<(SurrogateKind, usize)> = (0..config.repetitions)
        .flat_map(|r| config.surrogates.iter().map(move |s| (*s, r)))
        .collect();
    let pool = thread_pool()?;
    let results: Vec<CliResult<(Vec<PathBuf>, Option<String>)>> = pool.install(|| {
        jobs.par_iter()
            .map(|&(surrogate, rep)| {
                let bo = config.bo_config(surrogate, rep);
                info!("{} repetition {rep} (seed {})", surrogate.tag(), bo.seed);
                let trace = run_bo(&objective, &bo)?;
                let csv = csv_path(&config.output_dir, surrogate, rep);
                let side = sidecar_path(&config.output_dir, surrogate, rep);
                write_trace_csv(&csv, &trace, q)?;
                let aborted = (!trace.is_complete()).then(|| trace_stem(surrogate, rep));
                write_json(
                    &side,
                    &TraceSidecar {
                        benchmark: objective.name.clone(),
                        surrogate,
                        repetition: rep,
                        seed: bo.seed,
                        trace,
                    },
                )?;
                Ok((vec![csv, side], aborted))
            })
            .collect()
    });
    let mut out = RunOutcome {
        written: Vec::new(),
        aborted: Vec::new(),
    };
    for r in results {
        let (files, aborted) = r?;
        out.written.extend(files);
        out.aborted.extend(aborted);
    }
    Ok(out)
}
