//! Posterior inference over the surrogate parameters: coordinate-wise slice
//! sampling and Hamiltonian Monte Carlo with step-size adaptation.

use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::rng::{seeded, Rng};
use crate::surrogates::{Dataset, Parameterization, SurrogateKind, SurrogateSample};
use crate::{Error, Result};

/// Energy error above which a trajectory counts as divergent.
pub const DIVERGENCE_THRESHOLD: f64 = 1000.0;
/// Maximum number of stepping-out steps per slice update.
pub const MAX_STEP_OUT: usize = 100;
const MAX_SHRINK: usize = 200;
/// Each trajectory uses a step drawn uniformly from ε·(1 ± STEP_JITTER), so
/// that a fixed trajectory length cannot resonate with the target.
pub const STEP_JITTER: f64 = 0.2;
/// Length of the first adaptation window; windows double in length.
const FIRST_WINDOW: usize = 25;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChainProfile {
    Desk,
    Paper,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainConfig {
    pub burn_in: usize,
    pub thinning: usize,
    pub num_samples: usize,
    pub target_accept: f64,
    pub adapt_fraction: f64,
    pub leapfrog_steps: usize,
    pub initial_step_size: f64,
    pub initial_slice_width: f64,
    pub seed: u64,
}

impl ChainConfig {
    /// Burn-in 1500, thinning 10, 30 kept samples.
    pub fn desk(seed: u64) -> Self {
        Self {
            burn_in: 1500,
            thinning: 10,
            num_samples: 30,
            target_accept: 0.75,
            adapt_fraction: 0.8,
            leapfrog_steps: 10,
            initial_step_size: 0.1,
            initial_slice_width: 1.0,
            seed,
        }
    }

    /// Burn-in 30000, thinning 50, 100 kept samples.
    pub fn paper(seed: u64) -> Self {
        Self {
            burn_in: 30_000,
            thinning: 50,
            num_samples: 100,
            ..Self::desk(seed)
        }
    }

    pub fn profile(profile: ChainProfile, seed: u64) -> Self {
        match profile {
            ChainProfile::Desk => Self::desk(seed),
            ChainProfile::Paper => Self::paper(seed),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.thinning == 0 {
            return Err(Error::Parameter("thinning must be >= 1".into()));
        }
        if self.num_samples == 0 {
            return Err(Error::Parameter("num_samples must be >= 1".into()));
        }
        if !(self.target_accept > 0.0 && self.target_accept < 1.0) {
            return Err(Error::Parameter(format!(
                "target_accept must lie in (0, 1), got {}",
                self.target_accept
            )));
        }
        if !(self.adapt_fraction > 0.0 && self.adapt_fraction <= 1.0) {
            return Err(Error::Parameter(format!(
                "adapt_fraction must lie in (0, 1], got {}",
                self.adapt_fraction
            )));
        }
        if self.leapfrog_steps == 0 {
            return Err(Error::Parameter("leapfrog_steps must be >= 1".into()));
        }
        if !(self.initial_step_size > 0.0 && self.initial_step_size.is_finite()) {
            return Err(Error::Parameter("initial_step_size must be positive".into()));
        }
        if !(self.initial_slice_width > 0.0 && self.initial_slice_width.is_finite()) {
            return Err(Error::Parameter("initial_slice_width must be positive".into()));
        }
        Ok(())
    }

    fn total_steps(&self) -> usize {
        self.burn_in + self.thinning * self.num_samples
    }

    fn adapt_steps(&self) -> usize {
        (self.adapt_fraction * self.burn_in as f64).floor() as usize
    }

    fn keeps(&self, step: usize) -> bool {
        step >= self.burn_in && (step - self.burn_in + 1) % self.thinning == 0
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ChainDiagnostics {
    /// Mean acceptance probability after adaptation (always 1 for slice
    /// sampling).
    pub acceptance_rate: f64,
    /// Final HMC step size; `None` for slice sampling.
    pub step_size: Option<f64>,
    pub divergences: usize,
}

/// Kept draws of one chain on the unconstrained scale.
#[derive(Clone, Debug, PartialEq)]
pub struct Chain {
    pub samples: Vec<Vec<f64>>,
    pub diagnostics: ChainDiagnostics,
}

/// Coordinate-wise slice sampling with stepping out and shrinkage. The
/// per-coordinate width starts at `initial_slice_width` and, during
/// burn-in, tracks twice the mean absolute move of that coordinate.
pub fn slice_sample_chain<F>(mut log_density: F, init: &[f64], config: &ChainConfig) -> Result<Chain>
where
    F: FnMut(&[f64]) -> f64,
{
    config.validate()?;
    let mut rng = seeded(config.seed);
    let mut x = init.to_vec();
    let mut lp = log_density(&x);
    if !lp.is_finite() {
        return Err(Error::Sampler(format!("log density at the initial point is {lp}")));
    }
    let k = x.len();
    let mut widths = vec![config.initial_slice_width; k];
    let mut move_sums = vec![0.0; k];
    let mut samples = Vec::with_capacity(config.num_samples);

    for step in 0..config.total_steps() {
        for i in 0..k {
            let x0 = x[i];
            let (xi, lpi) = slice_update(&mut log_density, &mut x, i, lp, widths[i], &mut rng);
            x[i] = xi;
            lp = lpi;
            if step < config.burn_in {
                move_sums[i] += (xi - x0).abs();
                let w = 2.0 * move_sums[i] / (step + 1) as f64;
                if w > 0.0 && w.is_finite() {
                    widths[i] = w;
                }
            }
        }
        if config.keeps(step) {
            samples.push(x.clone());
        }
    }
    Ok(Chain {
        samples,
        diagnostics: ChainDiagnostics {
            acceptance_rate: 1.0,
            step_size: None,
            divergences: 0,
        },
    })
}

fn slice_update<F>(log_density: &mut F, x: &mut [f64], i: usize, lp: f64, w: f64, rng: &mut Rng) -> (f64, f64)
where
    F: FnMut(&[f64]) -> f64,
{
    let x0 = x[i];
    let e: f64 = rng.sample(rand_distr::Exp1);
    let level = lp - e;
    let mut eval = |x: &mut [f64], v: f64| {
        x[i] = v;
        log_density(x)
    };

    let u: f64 = rng.random();
    let mut lo = x0 - w * u;
    let mut hi = lo + w;
    let j = (MAX_STEP_OUT as f64 * rng.random::<f64>()).floor() as usize;
    let mut left_steps = j;
    let mut right_steps = MAX_STEP_OUT - 1 - j;
    while left_steps > 0 && eval(x, lo) > level {
        lo -= w;
        left_steps -= 1;
    }
    while right_steps > 0 && eval(x, hi) > level {
        hi += w;
        right_steps -= 1;
    }

    for _ in 0..MAX_SHRINK {
        let cand = lo + rng.random::<f64>() * (hi - lo);
        let lpc = eval(x, cand);
        if lpc > level {
            return (cand, lpc);
        }
        if cand < x0 {
            lo = cand;
        } else {
            hi = cand;
        }
    }
    x[i] = x0;
    (x0, lp)
}

/// Robbins-Monro update on the log step size:
/// `log ε ← log ε + η_t (accept_prob − target)`, `η_t = 0.05 / (1 + t/100)`.
pub fn adapt_step_size(current: f64, accept_prob: f64, iteration: usize, target: f64) -> f64 {
    let eta = 0.05 / (1.0 + iteration as f64 / 100.0);
    (current.ln() + eta * (accept_prob - target)).exp()
}

/// HMC with identity mass matrix and a fixed number of leapfrog steps. The
/// nominal step size adapts during the first `adapt_fraction` of burn-in
/// and is frozen afterwards.
///
/// `log_density_grad` returns the log density and writes its gradient; an
/// error or a non-finite value marks the trajectory divergent.
pub fn hmc_chain<F>(mut log_density_grad: F, init: &[f64], config: &ChainConfig) -> Result<Chain>
where
    F: FnMut(&[f64], &mut [f64]) -> Result<f64>,
{
    config.validate()?;
    let mut rng = seeded(config.seed);
    let k = init.len();
    let mut x = init.to_vec();
    let mut grad = vec![0.0; k];
    let mut lp = log_density_grad(&x, &mut grad)?;
    if !lp.is_finite() || grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::Sampler(format!("log density at the initial point is {lp}")));
    }

    let mut xn = vec![0.0; k];
    let mut gn = vec![0.0; k];
    let mut p = vec![0.0; k];

    let mut eps = initial_step_size(&mut log_density_grad, &x, &grad, lp, config.initial_step_size, &mut rng);
    let adapt_steps = config.adapt_steps();
    let total = config.total_steps();
    let mut samples = Vec::with_capacity(config.num_samples);
    let mut divergences = 0usize;
    let mut accept_sum = 0.0;
    let mut accept_count = 0usize;
    let mut window_start = 0usize;
    let mut window_len = FIRST_WINDOW;

    for step in 0..total {
        p.iter_mut().for_each(|v| *v = rng.sample(StandardNormal));
        let h0 = -lp + 0.5 * p.iter().map(|v| v * v).sum::<f64>();
        xn.copy_from_slice(&x);
        gn.copy_from_slice(&grad);
        let eps_t = eps * (1.0 + STEP_JITTER * (2.0 * rng.random::<f64>() - 1.0));
        let (ok, lpn) = leapfrog(&mut log_density_grad, &mut xn, &mut gn, &mut p, lp, eps_t, config.leapfrog_steps);
        let h1 = -lpn + 0.5 * p.iter().map(|v| v * v).sum::<f64>();
        let energy_error = h1 - h0;
        let accept_prob = if !ok || !energy_error.is_finite() || energy_error > DIVERGENCE_THRESHOLD {
            divergences += 1;
            0.0
        } else {
            (-energy_error).exp().min(1.0)
        };
        if accept_prob > 0.0 && rng.random::<f64>() < accept_prob {
            x.copy_from_slice(&xn);
            grad.copy_from_slice(&gn);
            lp = lpn;
        }
        if step < adapt_steps {
            eps = adapt_step_size(eps, accept_prob, step - window_start, config.target_accept);
            if step + 1 == window_start + window_len && step + 1 + 2 * window_len <= adapt_steps {
                window_start = step + 1;
                window_len *= 2;
                eps = initial_step_size(&mut log_density_grad, &x, &grad, lp, eps, &mut rng);
            }
        } else {
            accept_sum += accept_prob;
            accept_count += 1;
        }
        if config.keeps(step) {
            samples.push(x.clone());
        }
    }

    if divergences as f64 > 0.9 * total as f64 {
        return Err(Error::Sampler(format!("{divergences} of {total} trajectories diverged")));
    }
    Ok(Chain {
        samples,
        diagnostics: ChainDiagnostics {
            acceptance_rate: if accept_count > 0 {
                accept_sum / accept_count as f64
            } else {
                0.0
            },
            step_size: Some(eps),
            divergences,
        },
    })
}

/// Runs `steps` leapfrog steps in place. Returns false when the density or
/// its gradient stops being finite.
fn leapfrog<F>(f: &mut F, x: &mut [f64], g: &mut [f64], p: &mut [f64], lp: f64, eps: f64, steps: usize) -> (bool, f64)
where
    F: FnMut(&[f64], &mut [f64]) -> Result<f64>,
{
    let mut lpn = lp;
    for _ in 0..steps {
        for d in 0..x.len() {
            p[d] += 0.5 * eps * g[d];
            x[d] += eps * p[d];
        }
        match f(x, g) {
            Ok(v) if v.is_finite() && g.iter().all(|v| v.is_finite()) => lpn = v,
            _ => return (false, lpn),
        }
        for d in 0..x.len() {
            p[d] += 0.5 * eps * g[d];
        }
    }
    (true, lpn)
}

/// Doubles or halves `eps` until the acceptance probability of a single
/// leapfrog step crosses 1/2.
fn initial_step_size<F>(f: &mut F, x: &[f64], grad: &[f64], lp: f64, eps: f64, rng: &mut Rng) -> f64
where
    F: FnMut(&[f64], &mut [f64]) -> Result<f64>,
{
    let k = x.len();
    let mut p: Vec<f64> = (0..k).map(|_| rng.sample(StandardNormal)).collect();
    let p0 = p.clone();
    let kinetic0 = 0.5 * p0.iter().map(|v| v * v).sum::<f64>();
    let mut xn = vec![0.0; k];
    let mut gn = vec![0.0; k];
    let mut accept = |eps: f64, p: &mut Vec<f64>| {
        p.copy_from_slice(&p0);
        xn.copy_from_slice(x);
        gn.copy_from_slice(grad);
        let (ok, lpn) = leapfrog(f, &mut xn, &mut gn, p, lp, eps, 1);
        let kinetic = 0.5 * p.iter().map(|v| v * v).sum::<f64>();
        let log_ratio = lpn - kinetic - lp + kinetic0;
        if ok && log_ratio.is_finite() {
            log_ratio.min(0.0).exp()
        } else {
            0.0
        }
    };
    let mut eps = eps;
    let a0 = accept(eps, &mut p);
    let grow = a0 > 0.5;
    for _ in 0..100 {
        let next = if grow { eps * 2.0 } else { eps / 2.0 };
        let a = accept(next, &mut p);
        if grow && (a <= 0.5 || next > 1e3) {
            break;
        }
        eps = next;
        if !grow && a > 0.5 {
            break;
        }
    }
    eps
}

/// M posterior draws with the diagnostics of the chain(s) that produced them.
#[derive(Clone, Debug, PartialEq)]
pub struct PosteriorEnsemble {
    pub samples: Vec<SurrogateSample>,
    pub diagnostics: Vec<ChainDiagnostics>,
}

impl PosteriorEnsemble {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Concatenates ensembles, keeping order.
    pub fn concat(parts: Vec<PosteriorEnsemble>) -> Self {
        let mut out = PosteriorEnsemble {
            samples: Vec::new(),
            diagnostics: Vec::new(),
        };
        for part in parts {
            out.samples.extend(part.samples);
            out.diagnostics.extend(part.diagnostics);
        }
        out
    }
}

/// Whether a surrogate family is sampled with HMC (otherwise slice sampling).
pub fn uses_hmc(kind: SurrogateKind, sigma_h: f64) -> bool {
    match kind {
        SurrogateKind::Heteroscedastic => true,
        SurrogateKind::Latent => sigma_h > 0.0,
        _ => false,
    }
}

/// Runs one chain for the given surrogate family and returns its kept draws.
/// `sigma_h` and `latent_dim` are ignored for the non-latent families.
pub fn infer_posterior(
    kind: SurrogateKind,
    data: &Dataset,
    sigma_h: f64,
    latent_dim: usize,
    config: &ChainConfig,
) -> Result<PosteriorEnsemble> {
    let param = Parameterization::new(kind, data.len(), latent_dim, sigma_h)?;
    let mut init_rng = seeded(crate::rng::derive_seed(config.seed, &[0x1a17]));
    let init = param.initial_point(&mut init_rng);
    let chain = if uses_hmc(kind, sigma_h) {
        hmc_chain(|z, g| param.log_density_and_grad(data, z, g), &init, config)?
    } else {
        slice_sample_chain(|z| param.log_density(data, z), &init, config)?
    };
    let samples = chain
        .samples
        .iter()
        .map(|z| param.to_sample(z))
        .collect::<Result<Vec<_>>>()?;
    Ok(PosteriorEnsemble {
        samples,
        diagnostics: vec![chain.diagnostics],
    })
}
