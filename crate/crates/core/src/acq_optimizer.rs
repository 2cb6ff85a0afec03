//! δ-cover sampling: uniform sampling in a box that is recentred at the best
//! point found so far and shrunk by 2^(−1/Q) per side every iteration.

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::rng::seeded;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverConfig {
    #[serde(default = "default_iterations")]
    pub iterations: usize,
    #[serde(default = "default_samples")]
    pub samples_per_iter: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_iterations() -> usize {
    30
}

fn default_samples() -> usize {
    500
}

impl Default for CoverConfig {
    fn default() -> Self {
        Self {
            iterations: default_iterations(),
            samples_per_iter: default_samples(),
            seed: 0,
        }
    }
}

impl CoverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 || self.samples_per_iter == 0 {
            return Err(Error::Parameter(
                "cover iterations and samples_per_iter must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// Per-side shrink factor for dimension `q`.
pub fn shrink_factor(q: usize) -> f64 {
    2f64.powf(-1.0 / q as f64)
}

/// Axis-aligned sampling box inside the unit cube.
#[derive(Clone, Debug, PartialEq)]
pub struct CoverBox {
    pub lo: Vec<f64>,
    pub side: Vec<f64>,
}

impl CoverBox {
    pub fn unit(q: usize) -> Self {
        Self {
            lo: vec![0.0; q],
            side: vec![1.0; q],
        }
    }

    pub fn volume(&self) -> f64 {
        self.side.iter().product()
    }

    /// Shrinks each side and centres the box on `center`, translating it
    /// back inside the unit cube where it would stick out.
    pub fn recentre_and_shrink(&mut self, center: &[f64], factor: f64) {
        for d in 0..self.side.len() {
            let s = (self.side[d] * factor).min(1.0);
            self.side[d] = s;
            self.lo[d] = (center[d] - 0.5 * s).clamp(0.0, 1.0 - s);
        }
    }
}

/// Maximizes `score` over [0,1]^Q. Points are drawn sequentially from the
/// seeded stream and scored in parallel; ties keep the first point drawn.
/// NaN scores rank below every number. Returns the best point and its
/// score.
pub fn delta_cover_maximize<F>(score: F, q: usize, config: &CoverConfig) -> Result<(Vec<f64>, f64)>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    config.validate()?;
    if q == 0 {
        return Err(Error::Parameter("dimension must be >= 1".into()));
    }
    let mut rng = seeded(config.seed);
    let factor = shrink_factor(q);
    let mut bx = CoverBox::unit(q);
    let mut best: Option<(Vec<f64>, f64)> = None;
    let n = config.samples_per_iter;
    let mut points = vec![0.0; n * q];

    for _ in 0..config.iterations {
        for p in points.chunks_mut(q) {
            for d in 0..q {
                let v = bx.lo[d] + rng.random::<f64>() * bx.side[d];
                p[d] = v.clamp(0.0, 1.0);
            }
        }
        let scores: Vec<f64> = points
            .par_chunks(q)
            .map(|p| {
                let s = score(p);
                if s.is_nan() {
                    f64::NEG_INFINITY
                } else {
                    s
                }
            })
            .collect();
        for (i, &s) in scores.iter().enumerate() {
            let better = match &best {
                None => true,
                Some((_, b)) => s > *b,
            };
            if better {
                best = Some((points[i * q..(i + 1) * q].to_vec(), s));
            }
        }
        let (center, _) = best.as_ref().expect("at least one sample per iteration");
        bx.recentre_and_shrink(center, factor);
    }
    Ok(best.expect("at least one iteration"))
}
