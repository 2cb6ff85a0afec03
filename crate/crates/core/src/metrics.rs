//! Gap and regret measures and the paired Wilcoxon signed-rank comparison.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::bo::RunTrace;
use crate::{Error, Result};

/// Significance level for the best-equivalence markers.
pub const SIGNIFICANCE: f64 = 0.05;
/// Largest number of nonzero differences handled by the exact null.
pub const EXACT_MAX_N: usize = 20;

/// `(f_first − f_best) / (f_first − f_opt)` clamped to [0, 1]; a run that
/// starts at the optimum scores 1.
pub fn gap(f_first: f64, f_best: f64, f_opt: f64) -> Result<f64> {
    if f_opt > f_first {
        return Err(Error::Protocol(format!(
            "optimum {f_opt} lies above the initial best {f_first}"
        )));
    }
    if f_first == f_opt {
        return Ok(1.0);
    }
    Ok(((f_first - f_best) / (f_first - f_opt)).clamp(0.0, 1.0))
}

/// Gap of a run: `f_first` is the best of the initial design, `f_best` the
/// best over the whole trace.
pub fn trace_gap(trace: &RunTrace, f_opt: f64) -> Result<f64> {
    let (first, best) = trace_first_and_best(trace)?;
    gap(first, best, f_opt)
}

fn trace_first_and_best(trace: &RunTrace) -> Result<(f64, f64)> {
    let init = trace.initial_points.min(trace.records.len());
    if init == 0 {
        return Err(Error::Protocol("trace has no initial evaluations".into()));
    }
    let first = trace.records[..init].iter().map(|r| r.f_raw).fold(f64::INFINITY, f64::min);
    let best = trace.records.iter().map(|r| r.f_raw).fold(f64::INFINITY, f64::min);
    Ok((first, best))
}

/// `max(0, best_so_far − f_opt)` per step.
pub fn regret_from_best(best_so_far: &[f64], f_opt: f64) -> Vec<f64> {
    best_so_far.iter().map(|b| (b - f_opt).max(0.0)).collect()
}

pub fn regret_curve(trace: &RunTrace, f_opt: f64) -> Vec<f64> {
    let best: Vec<f64> = trace.records.iter().map(|r| r.best_so_far).collect();
    regret_from_best(&best, f_opt)
}

/// Signed-rank statistic of nonzero paired differences. Ranks are doubled
/// so that average ranks of ties stay integral.
#[derive(Clone, Debug, PartialEq)]
pub struct SignedRanks {
    /// Doubled ranks of |d|, one per nonzero difference.
    pub doubled_ranks: Vec<u64>,
    /// Sum of doubled ranks of positive differences.
    pub doubled_w_plus: u64,
}

impl SignedRanks {
    pub fn new(a: &[f64], b: &[f64]) -> Result<Self> {
        if a.len() != b.len() {
            return Err(Error::Structural(format!(
                "paired samples of lengths {} and {}",
                a.len(),
                b.len()
            )));
        }
        if a.is_empty() {
            return Err(Error::Structural("paired samples are empty".into()));
        }
        let mut d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).filter(|v| *v != 0.0).collect();
        if d.iter().any(|v| v.is_nan()) {
            return Err(Error::Parameter("NaN in paired samples".into()));
        }
        d.sort_by(|x, y| x.abs().total_cmp(&y.abs()));
        let n = d.len();
        let mut ranks = vec![0u64; n];
        let mut i = 0;
        while i < n {
            let mut j = i;
            while j + 1 < n && d[j + 1].abs() == d[i].abs() {
                j += 1;
            }
            // Average of ranks i+1..=j+1, doubled.
            let doubled = (i + 1 + j + 1) as u64;
            ranks[i..=j].iter_mut().for_each(|r| *r = doubled);
            i = j + 1;
        }
        let w = d.iter().zip(&ranks).filter(|(v, _)| **v > 0.0).map(|(_, r)| r).sum();
        Ok(Self {
            doubled_ranks: ranks,
            doubled_w_plus: w,
        })
    }

    pub fn n(&self) -> usize {
        self.doubled_ranks.len()
    }

    /// W+ on the ordinary rank scale.
    pub fn w_plus(&self) -> f64 {
        self.doubled_w_plus as f64 / 2.0
    }
}

/// Exact two-sided p-value under the sign-flip null:
/// `2 · min(P(W ≤ w), P(W ≥ w))`, capped at 1.
pub fn wilcoxon_exact(sr: &SignedRanks) -> f64 {
    let n = sr.n();
    if n == 0 {
        return 1.0;
    }
    let total: u64 = sr.doubled_ranks.iter().sum();
    let mut counts = vec![0f64; total as usize + 1];
    counts[0] = 1.0;
    let mut reach = 0usize;
    for &r in &sr.doubled_ranks {
        let r = r as usize;
        for s in (0..=reach).rev() {
            if counts[s] != 0.0 {
                counts[s + r] += counts[s];
            }
        }
        reach += r;
    }
    let all = 2f64.powi(n as i32);
    let w = sr.doubled_w_plus as usize;
    let le: f64 = counts[..=w].iter().sum();
    let ge: f64 = counts[w..].iter().sum();
    (2.0 * le.min(ge) / all).min(1.0)
}

/// Normal approximation with tie-corrected variance and continuity
/// correction.
pub fn wilcoxon_normal(sr: &SignedRanks) -> f64 {
    if sr.n() == 0 {
        return 1.0;
    }
    let ranks: Vec<f64> = sr.doubled_ranks.iter().map(|r| *r as f64 / 2.0).collect();
    let mean = ranks.iter().sum::<f64>() / 2.0;
    let var = ranks.iter().map(|r| r * r).sum::<f64>() / 4.0;
    if var <= 0.0 {
        return 1.0;
    }
    let dev = ((sr.w_plus() - mean).abs() - 0.5).max(0.0);
    let z = dev / var.sqrt();
    let n = Normal::new(0.0, 1.0).expect("unit normal");
    (2.0 * (1.0 - n.cdf(z))).min(1.0)
}

/// Two-sided paired Wilcoxon signed-rank test. Zero differences are
/// dropped; the exact null is used for up to [`EXACT_MAX_N`] nonzero
/// differences.
pub fn wilcoxon_two_sided(a: &[f64], b: &[f64]) -> Result<f64> {
    let sr = SignedRanks::new(a, b)?;
    Ok(if sr.n() <= EXACT_MAX_N {
        wilcoxon_exact(&sr)
    } else {
        wilcoxon_normal(&sr)
    })
}

/// Mean and sample (n − 1) standard deviation; the deviation of a single
/// value is 0.
pub fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let m = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (m, 0.0);
    }
    let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, var.sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricKind {
    Gap,
    Regret,
}

impl MetricKind {
    pub fn higher_is_better(&self) -> bool {
        matches!(self, MetricKind::Gap)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub method: String,
    pub mean: f64,
    pub std: f64,
    /// p-value against the best method (1 for the best itself).
    pub p_value: f64,
    /// Not significantly different from the best.
    pub marked: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub metric: MetricKind,
    pub best: String,
    pub rows: Vec<ComparisonRow>,
}

/// Picks the best mean (highest gap, lowest regret; first in name order on
/// ties) and marks every method whose paired test against it gives
/// p ≥ 0.05.
pub fn mark_equivalent_to_best(values: &BTreeMap<String, Vec<f64>>, metric: MetricKind) -> Result<ComparisonTable> {
    let mut lens = values.values().map(Vec::len);
    let Some(len) = lens.next() else {
        return Err(Error::Protocol("no methods to compare".into()));
    };
    if lens.any(|l| l != len) {
        return Err(Error::Protocol("methods have different repetition counts".into()));
    }
    if len == 0 {
        return Err(Error::Protocol("methods have no repetitions".into()));
    }
    let stats: Vec<(&String, f64, f64)> = values
        .iter()
        .map(|(k, v)| {
            let (m, s) = mean_std(v);
            (k, m, s)
        })
        .collect();
    let better = |a: f64, b: f64| if metric.higher_is_better() { a > b } else { a < b };
    let mut best = 0;
    for i in 1..stats.len() {
        if better(stats[i].1, stats[best].1) {
            best = i;
        }
    }
    let best_name = stats[best].0.clone();
    let best_values = &values[&best_name];
    let rows = stats
        .iter()
        .map(|(name, mean, std)| {
            let p = if **name == best_name {
                1.0
            } else {
                wilcoxon_two_sided(&values[*name], best_values)?
            };
            Ok(ComparisonRow {
                method: (*name).clone(),
                mean: *mean,
                std: *std,
                p_value: p,
                marked: p >= SIGNIFICANCE,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ComparisonTable {
        metric,
        best: best_name,
        rows,
    })
}
