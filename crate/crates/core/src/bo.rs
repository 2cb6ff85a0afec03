//! The outer optimization loop: initial design, posterior inference per
//! iteration, acquisition maximization and trace recording.

use log::{debug, info};
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::acq_optimizer::{delta_cover_maximize, CoverConfig};
use crate::acquisition::{AcquisitionKind, AcquisitionSpec, FittedEnsemble};
use crate::benchmarks::{Objective, DOMAIN_SLACK};
use crate::rng::{derive_seed, seeded};
use crate::samplers::{infer_posterior, ChainConfig, ChainDiagnostics, PosteriorEnsemble};
use crate::surrogates::{Dataset, SurrogateKind, DEFAULT_LATENT_DIM};
use crate::{Error, Result};

const INIT_TAG: u64 = 1;
const CHAIN_TAG: u64 = 2;
const COVER_TAG: u64 = 3;
const SIGMA_TAG: u64 = 4;

/// How σ_h candidates enter each iteration's ensemble.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SigmaHMode {
    /// One chain per candidate, the M samples split evenly across them.
    #[default]
    Stratified,
    /// One candidate drawn uniformly per iteration, one chain of M samples.
    PerIteration,
}

/// `{0.1·d, 0.01·d, 0}` with `d = √Q`, the unit-cube diagonal.
pub fn default_sigma_h_candidates(q: usize) -> Vec<f64> {
    let d = (q as f64).sqrt();
    vec![0.1 * d, 0.01 * d, 0.0]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BOConfig {
    pub surrogate: SurrogateKind,
    pub acquisition: AcquisitionKind,
    pub budget: usize,
    pub initial_points: usize,
    /// Defaults to [`default_sigma_h_candidates`] when `None`.
    pub sigma_h_candidates: Option<Vec<f64>>,
    pub sigma_h_mode: SigmaHMode,
    pub latent_dim: usize,
    /// The seed inside is ignored; chain seeds derive from `seed`.
    pub chain: ChainConfig,
    /// The seed inside is ignored; cover seeds derive from `seed`.
    pub cover: CoverConfig,
    pub seed: u64,
}

impl BOConfig {
    pub fn new(surrogate: SurrogateKind, budget: usize, seed: u64) -> Self {
        Self {
            surrogate,
            acquisition: AcquisitionKind::Ei,
            budget,
            initial_points: 2,
            sigma_h_candidates: None,
            sigma_h_mode: SigmaHMode::Stratified,
            latent_dim: DEFAULT_LATENT_DIM,
            chain: ChainConfig::desk(0),
            cover: CoverConfig::default(),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.initial_points == 0 {
            return Err(Error::Parameter("initial_points must be >= 1".into()));
        }
        if self.budget < self.initial_points {
            return Err(Error::Parameter(format!(
                "budget {} is smaller than initial_points {}",
                self.budget, self.initial_points
            )));
        }
        if let Some(c) = &self.sigma_h_candidates {
            if c.is_empty() {
                return Err(Error::Parameter("sigma_h_candidates must not be empty".into()));
            }
            if let Some(v) = c.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
                return Err(Error::Parameter(format!("sigma_h candidate {v} must be >= 0")));
            }
        }
        if self.latent_dim == 0 {
            return Err(Error::Parameter("latent_dim must be >= 1".into()));
        }
        self.acquisition.validate()?;
        self.chain.validate()?;
        self.cover.validate()
    }

    pub fn sigma_h_set(&self, q: usize) -> Vec<f64> {
        self.sigma_h_candidates
            .clone()
            .unwrap_or_else(|| default_sigma_h_candidates(q))
    }
}

/// One chain run during an iteration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainRecord {
    /// σ_h of the chain (LGP only).
    pub sigma_h: Option<f64>,
    pub samples: usize,
    pub diagnostics: ChainDiagnostics,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iter: usize,
    pub x_raw: Vec<f64>,
    pub x_unit: Vec<f64>,
    pub f_raw: f64,
    pub best_so_far: f64,
    /// Empty for the initial design.
    pub chains: Vec<ChainRecord>,
    pub dropped_members: usize,
    pub acquisition_value: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "lowercase")]
pub enum RunStatus {
    Complete,
    Aborted { reason: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub records: Vec<IterationRecord>,
    pub initial_points: usize,
    pub seed: u64,
    pub config: BOConfig,
    pub status: RunStatus,
}

impl RunTrace {
    pub fn is_complete(&self) -> bool {
        self.status == RunStatus::Complete
    }

    pub fn best(&self) -> Option<f64> {
        self.records.last().map(|r| r.best_so_far)
    }
}

fn check_domain(domain: &[[f64; 2]]) -> Result<()> {
    if domain.iter().any(|b| !(b[0] < b[1])) {
        return Err(Error::Parameter("domain bounds must satisfy lo < hi".into()));
    }
    Ok(())
}

/// Affine map from the box to the unit cube.
pub fn rescale_to_unit(x: &[f64], domain: &[[f64; 2]]) -> Result<Vec<f64>> {
    check_domain(domain)?;
    if x.len() != domain.len() {
        return Err(Error::Structural(format!(
            "point of length {} for a {}-dimensional domain",
            x.len(),
            domain.len()
        )));
    }
    x.iter()
        .zip(domain)
        .map(|(v, b)| {
            if *v < b[0] - DOMAIN_SLACK || *v > b[1] + DOMAIN_SLACK {
                Err(Error::Domain(format!("{v} outside [{}, {}]", b[0], b[1])))
            } else {
                Ok(((v - b[0]) / (b[1] - b[0])).clamp(0.0, 1.0))
            }
        })
        .collect()
}

/// Affine map from the unit cube to the box.
pub fn rescale_from_unit(u: &[f64], domain: &[[f64; 2]]) -> Result<Vec<f64>> {
    check_domain(domain)?;
    if u.len() != domain.len() {
        return Err(Error::Structural(format!(
            "point of length {} for a {}-dimensional domain",
            u.len(),
            domain.len()
        )));
    }
    u.iter()
        .zip(domain)
        .map(|(v, b)| {
            if *v < -DOMAIN_SLACK || *v > 1.0 + DOMAIN_SLACK {
                Err(Error::Domain(format!("{v} outside [0, 1]")))
            } else {
                Ok((b[0] + v.clamp(0.0, 1.0) * (b[1] - b[0])).clamp(b[0], b[1]))
            }
        })
        .collect()
}

/// Sample counts per σ_h stratum: `M / k` each, the remainder going to the
/// leading strata.
pub fn stratum_sizes(m: usize, k: usize) -> Vec<usize> {
    (0..k).map(|s| m / k + usize::from(s < m % k)).collect()
}

/// Draws the posterior ensemble for iteration `iter`.
pub fn iteration_ensemble(
    config: &BOConfig,
    data: &Dataset,
    iter: usize,
) -> Result<(PosteriorEnsemble, Vec<ChainRecord>)> {
    let chain_for = |stratum: usize, samples: usize| {
        let mut c = config.chain.clone();
        c.num_samples = samples;
        c.seed = derive_seed(config.seed, &[CHAIN_TAG, iter as u64, stratum as u64]);
        c
    };
    let m = config.chain.num_samples;
    let jobs: Vec<(usize, f64, usize)> = if config.surrogate != SurrogateKind::Latent {
        vec![(0, 0.0, m)]
    } else {
        let set = config.sigma_h_set(data.dim());
        match config.sigma_h_mode {
            SigmaHMode::Stratified => stratum_sizes(m, set.len())
                .into_iter()
                .enumerate()
                .filter(|(_, n)| *n > 0)
                .map(|(s, n)| (s, set[s], n))
                .collect(),
            SigmaHMode::PerIteration => {
                let mut rng = seeded(derive_seed(config.seed, &[SIGMA_TAG, iter as u64]));
                let pick = rng.random_range(0..set.len());
                vec![(0, set[pick], m)]
            }
        }
    };
    let results: Vec<Result<PosteriorEnsemble>> = jobs
        .par_iter()
        .map(|&(s, sigma_h, n)| infer_posterior(config.surrogate, data, sigma_h, config.latent_dim, &chain_for(s, n)))
        .collect();
    let mut parts = Vec::with_capacity(results.len());
    let mut records = Vec::with_capacity(results.len());
    for (r, &(_, sigma_h, n)) in results.into_iter().zip(&jobs) {
        let e = r?;
        records.push(ChainRecord {
            sigma_h: (config.surrogate == SurrogateKind::Latent).then_some(sigma_h),
            samples: n,
            diagnostics: e.diagnostics[0].clone(),
        });
        parts.push(e);
    }
    Ok((PosteriorEnsemble::concat(parts), records))
}

/// Runs one optimization to `config.budget` evaluations (minimization).
///
/// An objective failure stops the run and returns the partial trace marked
/// aborted; model failures are returned as errors.
pub fn run_bo(objective: &dyn Objective, config: &BOConfig) -> Result<RunTrace> {
    config.validate()?;
    let domain = objective.domain().to_vec();
    check_domain(&domain)?;
    let q = domain.len();
    let mut trace = RunTrace {
        records: Vec::with_capacity(config.budget),
        initial_points: config.initial_points,
        seed: config.seed,
        config: config.clone(),
        status: RunStatus::Complete,
    };
    let mut xs: Vec<Vec<f64>> = Vec::with_capacity(config.budget);
    let mut fs: Vec<f64> = Vec::with_capacity(config.budget);
    let mut best = f64::INFINITY;

    let mut init_rng = seeded(derive_seed(config.seed, &[INIT_TAG]));
    for iter in 0..config.budget {
        let mut chains = Vec::new();
        let mut dropped = 0;
        let mut acq = None;
        let x_unit: Vec<f64> = if iter < config.initial_points {
            (0..q).map(|_| init_rng.random::<f64>()).collect()
        } else {
            let data = Dataset::new(q, xs.clone(), fs.clone())?;
            let (ensemble, records) = iteration_ensemble(config, &data, iter)?;
            chains = records;
            let fitted = FittedEnsemble::new(&data, &ensemble)?;
            dropped = fitted.dropped();
            let spec = AcquisitionSpec::for_data(config.acquisition, &data)?;
            let mut cover = config.cover.clone();
            cover.seed = derive_seed(config.seed, &[COVER_TAG, iter as u64]);
            let (x, v) = delta_cover_maximize(|x| fitted.acquisition(x, &spec), q, &cover)?;
            acq = Some(v);
            x
        };
        let x_raw = rescale_from_unit(&x_unit, &domain)?;
        let f = match objective.evaluate(&x_raw) {
            Ok(f) => f,
            Err(e) => {
                info!("run aborted at evaluation {iter}: {e}");
                trace.status = RunStatus::Aborted {
                    reason: format!("evaluation {iter}: {e}"),
                };
                return Ok(trace);
            }
        };
        best = best.min(f);
        debug!("evaluation {iter}: f = {f}, best = {best}");
        xs.push(x_unit.clone());
        fs.push(f);
        trace.records.push(IterationRecord {
            iter,
            x_raw,
            x_unit,
            f_raw: f,
            best_so_far: best,
            chains,
            dropped_members: dropped,
            acquisition_value: acq,
        });
    }
    Ok(trace)
}
