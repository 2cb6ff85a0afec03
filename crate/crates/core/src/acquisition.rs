//! Closed-form acquisitions and their average over a posterior ensemble.

use log::warn;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use crate::samplers::PosteriorEnsemble;
use crate::surrogates::{Dataset, FittedSample, PredictiveMoments};
use crate::{Error, Result};

pub const DEFAULT_LCB_WEIGHT: f64 = 2.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum AcquisitionKind {
    Ei,
    Lcb {
        #[serde(default = "default_weight")]
        exploration_weight: f64,
    },
}

fn default_weight() -> f64 {
    DEFAULT_LCB_WEIGHT
}

impl Default for AcquisitionKind {
    fn default() -> Self {
        AcquisitionKind::Ei
    }
}

impl AcquisitionKind {
    pub fn validate(&self) -> Result<()> {
        match self {
            AcquisitionKind::Ei => Ok(()),
            AcquisitionKind::Lcb { exploration_weight } => {
                if exploration_weight.is_finite() && *exploration_weight > 0.0 {
                    Ok(())
                } else {
                    Err(Error::Parameter(format!(
                        "exploration weight must be positive, got {exploration_weight}"
                    )))
                }
            }
        }
    }
}

/// An acquisition together with the incumbent it is evaluated against.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AcquisitionSpec {
    pub kind: AcquisitionKind,
    pub incumbent: f64,
}

impl AcquisitionSpec {
    pub fn new(kind: AcquisitionKind, incumbent: f64) -> Result<Self> {
        kind.validate()?;
        if !incumbent.is_finite() {
            return Err(Error::Parameter(format!("incumbent must be finite, got {incumbent}")));
        }
        Ok(Self { kind, incumbent })
    }

    /// Uses the best standardized observation as the incumbent (0 for an
    /// empty dataset).
    pub fn for_data(kind: AcquisitionKind, data: &Dataset) -> Result<Self> {
        Self::new(kind, data.incumbent().unwrap_or(0.0))
    }

    pub fn score(&self, m: PredictiveMoments) -> f64 {
        match self.kind {
            AcquisitionKind::Ei => ei(m, self.incumbent),
            AcquisitionKind::Lcb { exploration_weight } => lcb_score(m, exploration_weight),
        }
    }
}

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("unit normal")
}

/// Expected improvement below `incumbent`.
pub fn ei(m: PredictiveMoments, incumbent: f64) -> f64 {
    let sigma = m.std_dev();
    let diff = incumbent - m.mean;
    if sigma <= 0.0 {
        return diff.max(0.0);
    }
    let z = diff / sigma;
    let n = std_normal();
    (diff * n.cdf(z) + sigma * n.pdf(z)).max(0.0)
}

/// `weight·σ − μ`; maximizing it minimizes the lower confidence bound.
pub fn lcb_score(m: PredictiveMoments, weight: f64) -> f64 {
    weight * m.std_dev() - m.mean
}

/// Posterior ensemble conditioned on the data, for repeated acquisition
/// queries.
#[derive(Clone, Debug)]
pub struct FittedEnsemble {
    members: Vec<FittedSample>,
    dropped: usize,
}

impl FittedEnsemble {
    /// Factorizes every member; members that fail are dropped and logged.
    pub fn new(data: &Dataset, ensemble: &PosteriorEnsemble) -> Result<Self> {
        if ensemble.is_empty() {
            return Err(Error::Parameter("empty posterior ensemble".into()));
        }
        let mut members = Vec::with_capacity(ensemble.len());
        let mut dropped = 0;
        for (i, s) in ensemble.samples.iter().enumerate() {
            match FittedSample::new(data, s) {
                Ok(f) => members.push(f),
                Err(e) => {
                    warn!("dropping ensemble member {i}: {e}");
                    dropped += 1;
                }
            }
        }
        if members.is_empty() {
            return Err(Error::Sampler(format!("all {dropped} ensemble members failed")));
        }
        Ok(Self { members, dropped })
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn dropped(&self) -> usize {
        self.dropped
    }

    pub fn members(&self) -> &[FittedSample] {
        &self.members
    }

    /// Mean per-member acquisition at `x_star` (assumed inside the unit cube).
    pub fn acquisition(&self, x_star: &[f64], spec: &AcquisitionSpec) -> f64 {
        let mut buf = Vec::new();
        self.acquisition_with(x_star, spec, &mut buf)
    }

    pub fn acquisition_with(&self, x_star: &[f64], spec: &AcquisitionSpec, buf: &mut Vec<f64>) -> f64 {
        let total: f64 = self
            .members
            .iter()
            .map(|m| spec.score(m.predict_with(x_star, buf)))
            .sum();
        total / self.members.len() as f64
    }

    /// Per-member predictive moments at `x_star`.
    pub fn moments(&self, x_star: &[f64]) -> Vec<PredictiveMoments> {
        let mut buf = Vec::new();
        self.members.iter().map(|m| m.predict_with(x_star, &mut buf)).collect()
    }
}

/// Monte-Carlo marginal acquisition: the mean of the per-sample closed-form
/// acquisition at `x_star`, with LGP samples queried at h* = 0.
pub fn marginal_acquisition(
    x_star: &[f64],
    ensemble: &PosteriorEnsemble,
    data: &Dataset,
    spec: &AcquisitionSpec,
) -> Result<f64> {
    if x_star.len() != data.dim() {
        return Err(Error::Structural(format!(
            "query of length {} for a {}-dimensional dataset",
            x_star.len(),
            data.dim()
        )));
    }
    if let Some(v) = x_star.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::Domain(format!("query coordinate {v} outside [0, 1]")));
    }
    Ok(FittedEnsemble::new(data, ensemble)?.acquisition(x_star, spec))
}
