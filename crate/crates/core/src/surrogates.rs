//! The four surrogate families: noiseless GP, homoscedastic GP,
//! heteroscedastic GP and the latent-input GP (LGP).
//!
//! Every family shares a zero-mean GP prior with a Matérn 5/2 kernel of unit
//! signal variance over standardized outputs. Positive parameters (the
//! lengthscale and every noise variance) carry LogNormal(0, 1) priors and are
//! sampled on the log scale. Latent inputs carry N(0, σ_h² I) priors.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::kernel::{base_jitter, kernel_matrix, sq_dist, CholeskyFactor, CovMatrix, KernelParams, PointSet};
use crate::{Error, Result};

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

/// Latent dimension used by the LGP unless configured otherwise.
pub const DEFAULT_LATENT_DIM: usize = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SurrogateKind {
    #[serde(rename = "gp")]
    Noiseless,
    #[serde(rename = "homosced")]
    Homoscedastic,
    #[serde(rename = "heterosced")]
    Heteroscedastic,
    #[serde(rename = "lgp")]
    Latent,
}

impl SurrogateKind {
    pub const ALL: [SurrogateKind; 4] = [
        SurrogateKind::Noiseless,
        SurrogateKind::Homoscedastic,
        SurrogateKind::Heteroscedastic,
        SurrogateKind::Latent,
    ];

    pub fn tag(&self) -> &'static str {
        match self {
            SurrogateKind::Noiseless => "gp",
            SurrogateKind::Homoscedastic => "homosced",
            SurrogateKind::Heteroscedastic => "heterosced",
            SurrogateKind::Latent => "lgp",
        }
    }
}

impl fmt::Display for SurrogateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for SurrogateKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gp" | "noiseless" => Ok(SurrogateKind::Noiseless),
            "homosced" | "homoscedastic" => Ok(SurrogateKind::Homoscedastic),
            "heterosced" | "heteroscedastic" => Ok(SurrogateKind::Heteroscedastic),
            "lgp" | "latent" => Ok(SurrogateKind::Latent),
            other => Err(Error::Parameter(format!("unknown surrogate `{other}`"))),
        }
    }
}

/// Output standardization: `f = (f_raw - mean_shift) / scale`.
#[derive(Clone, Debug, PartialEq)]
pub struct Standardization {
    pub f: Vec<f64>,
    pub mean_shift: f64,
    pub scale: f64,
}

impl Standardization {
    pub fn restore(&self, f: f64) -> f64 {
        f * self.scale + self.mean_shift
    }
}

/// Zero mean, unit population standard deviation. Constant (or single)
/// outputs keep scale 1.
pub fn standardize(f_raw: &[f64]) -> Standardization {
    if f_raw.is_empty() {
        return Standardization {
            f: Vec::new(),
            mean_shift: 0.0,
            scale: 1.0,
        };
    }
    let n = f_raw.len() as f64;
    let mean = f_raw.iter().sum::<f64>() / n;
    let var = f_raw.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let sd = var.sqrt();
    let scale = if sd > 0.0 && sd.is_finite() { sd } else { 1.0 };
    Standardization {
        f: f_raw.iter().map(|v| (v - mean) / scale).collect(),
        mean_shift: mean,
        scale,
    }
}

/// Observations in unit-cube coordinates with standardized outputs.
#[derive(Clone, Debug)]
pub struct Dataset {
    dim: usize,
    x: Vec<Vec<f64>>,
    f_raw: Vec<f64>,
    std: Standardization,
}

impl Dataset {
    pub fn new(dim: usize, x: Vec<Vec<f64>>, f_raw: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Structural("input dimension must be >= 1".into()));
        }
        if x.len() != f_raw.len() {
            return Err(Error::Structural(format!(
                "{} inputs but {} outputs",
                x.len(),
                f_raw.len()
            )));
        }
        for row in &x {
            if row.len() != dim {
                return Err(Error::Structural(format!(
                    "input of length {} in a {dim}-dimensional dataset",
                    row.len()
                )));
            }
            if let Some(v) = row.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                return Err(Error::Domain(format!("input coordinate {v} outside [0, 1]")));
            }
        }
        if let Some(v) = f_raw.iter().find(|v| !v.is_finite()) {
            return Err(Error::Parameter(format!("non-finite output {v}")));
        }
        let std = standardize(&f_raw);
        Ok(Self { dim, x, f_raw, std })
    }

    pub fn empty(dim: usize) -> Result<Self> {
        Self::new(dim, Vec::new(), Vec::new())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn x(&self) -> &[Vec<f64>] {
        &self.x
    }

    pub fn f_raw(&self) -> &[f64] {
        &self.f_raw
    }

    /// Standardized outputs.
    pub fn f(&self) -> &[f64] {
        &self.std.f
    }

    pub fn standardization(&self) -> &Standardization {
        &self.std
    }

    /// Best (lowest) standardized observation.
    pub fn incumbent(&self) -> Option<f64> {
        self.std.f.iter().copied().reduce(f64::min)
    }
}

/// Variant-specific part of a posterior draw.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum LatentState {
    Noiseless,
    Homoscedastic { noise_variance: f64 },
    Heteroscedastic { noise_variances: Vec<f64> },
    /// One latent row per observation. `sigma_h == 0` pins `h` at zero.
    Latent { h: Vec<Vec<f64>>, sigma_h: f64 },
}

/// One posterior draw of a surrogate's parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurrogateSample {
    pub kernel: KernelParams,
    pub state: LatentState,
}

impl SurrogateSample {
    pub fn kind(&self) -> SurrogateKind {
        match self.state {
            LatentState::Noiseless => SurrogateKind::Noiseless,
            LatentState::Homoscedastic { .. } => SurrogateKind::Homoscedastic,
            LatentState::Heteroscedastic { .. } => SurrogateKind::Heteroscedastic,
            LatentState::Latent { .. } => SurrogateKind::Latent,
        }
    }

    pub fn sigma_h(&self) -> Option<f64> {
        match self.state {
            LatentState::Latent { sigma_h, .. } => Some(sigma_h),
            _ => None,
        }
    }

    fn check(&self, n: usize) -> Result<()> {
        match &self.state {
            LatentState::Noiseless => Ok(()),
            LatentState::Homoscedastic { noise_variance } => positive("noise variance", *noise_variance),
            LatentState::Heteroscedastic { noise_variances } => {
                if noise_variances.len() != n {
                    return Err(Error::Structural(format!(
                        "{} noise variances for {n} observations",
                        noise_variances.len()
                    )));
                }
                noise_variances.iter().try_for_each(|v| positive("noise variance", *v))
            }
            LatentState::Latent { h, sigma_h } => {
                if h.len() != n {
                    return Err(Error::Structural(format!(
                        "{} latent rows for {n} observations",
                        h.len()
                    )));
                }
                let d = h.first().map_or(0, Vec::len);
                if h.iter().any(|row| row.len() != d) {
                    return Err(Error::Structural("ragged latent matrix".into()));
                }
                if !(sigma_h.is_finite() && *sigma_h >= 0.0) {
                    return Err(Error::Parameter(format!("sigma_h must be >= 0, got {sigma_h}")));
                }
                if h.iter().flatten().any(|v| !v.is_finite()) {
                    return Err(Error::Parameter("non-finite latent input".into()));
                }
                if *sigma_h == 0.0 && h.iter().flatten().any(|&v| v != 0.0) {
                    return Err(Error::Structural("sigma_h = 0 requires every latent input to be 0".into()));
                }
                Ok(())
            }
        }
    }

    fn latent_dim(&self) -> usize {
        match &self.state {
            LatentState::Latent { h, .. } => h.first().map_or(DEFAULT_LATENT_DIM, Vec::len),
            _ => 0,
        }
    }
}

fn positive(what: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::Parameter(format!("{what} must be positive, got {v}")))
    }
}

/// Mean and variance of the noise-free latent function at a query point,
/// in standardized output units.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictiveMoments {
    pub mean: f64,
    pub variance: f64,
}

impl PredictiveMoments {
    pub fn std_dev(&self) -> f64 {
        self.variance.max(0.0).sqrt()
    }
}

fn log_normal_prior(v: f64) -> f64 {
    let z = v.ln();
    -z - 0.5 * z * z - HALF_LN_2PI
}

/// Training inputs, augmented with the sample's latent rows when present.
fn augmented_points(data: &Dataset, sample: &SurrogateSample) -> PointSet {
    let d = sample.latent_dim();
    let dim = data.dim() + d;
    let mut coords = Vec::with_capacity(data.len() * dim);
    for (i, x) in data.x().iter().enumerate() {
        coords.extend_from_slice(x);
        if let LatentState::Latent { h, .. } = &sample.state {
            coords.extend_from_slice(&h[i]);
        }
    }
    PointSet { coords, dim }
}

fn noise_diagonal(n: usize, sample: &SurrogateSample) -> Vec<f64> {
    let jitter = base_jitter(n);
    match &sample.state {
        LatentState::Homoscedastic { noise_variance } => vec![noise_variance + jitter; n],
        LatentState::Heteroscedastic { noise_variances } => {
            noise_variances.iter().map(|v| v + jitter).collect()
        }
        _ => vec![jitter; n],
    }
}

/// Factorized training covariance plus the quantities shared by the
/// density, its gradient and the predictive.
struct Fit {
    points: PointSet,
    factor: CholeskyFactor,
    alpha: Vec<f64>,
}

fn fit(data: &Dataset, sample: &SurrogateSample) -> Result<Fit> {
    let n = data.len();
    let points = augmented_points(data, sample);
    let diag = noise_diagonal(n, sample);
    let k = kernel_matrix(&points, &sample.kernel, &diag);
    let factor = CovMatrix::from_entries(k, base_jitter(n))?.factorize()?;
    let alpha = factor.solve(data.f());
    Ok(Fit { points, factor, alpha })
}

fn gaussian_log_likelihood(data: &Dataset, fit: &Fit) -> f64 {
    let n = data.len() as f64;
    let quad: f64 = data.f().iter().zip(&fit.alpha).map(|(f, a)| f * a).sum();
    -0.5 * quad - 0.5 * fit.factor.log_det() - n * HALF_LN_2PI
}

fn latent_prior(h: &[Vec<f64>], sigma_h: f64) -> f64 {
    if sigma_h == 0.0 {
        return 0.0;
    }
    let var = sigma_h * sigma_h;
    h.iter()
        .flatten()
        .map(|v| -0.5 * (2.0 * PI * var).ln() - v * v / (2.0 * var))
        .sum()
}

/// log p(F | X, ·) + log p(latent state) + log p(θ), with densities taken
/// over the constrained (positive) parameters.
pub fn log_joint(data: &Dataset, sample: &SurrogateSample) -> Result<f64> {
    sample.check(data.len())?;
    if data.is_empty() {
        return Ok(log_normal_prior(sample.kernel.lengthscale()) + state_prior(sample));
    }
    let fit = fit(data, sample)?;
    Ok(gaussian_log_likelihood(data, &fit)
        + log_normal_prior(sample.kernel.lengthscale())
        + state_prior(sample))
}

fn state_prior(sample: &SurrogateSample) -> f64 {
    match &sample.state {
        LatentState::Noiseless => 0.0,
        LatentState::Homoscedastic { noise_variance } => log_normal_prior(*noise_variance),
        LatentState::Heteroscedastic { noise_variances } => {
            noise_variances.iter().map(|v| log_normal_prior(*v)).sum()
        }
        LatentState::Latent { h, sigma_h } => latent_prior(h, *sigma_h),
    }
}

/// Layout of the unconstrained parameter vector of one surrogate family:
/// `[log ℓ, log σ²]` (homoscedastic), `[log ℓ, log σ²_1..N]`
/// (heteroscedastic), `[log ℓ, h_1..h_N]` (LGP with σ_h > 0, rows
/// flattened), or `[log ℓ]` (noiseless, and the LGP with σ_h = 0).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Parameterization {
    pub kind: SurrogateKind,
    pub n: usize,
    pub latent_dim: usize,
    pub sigma_h: f64,
}

impl Parameterization {
    pub fn new(kind: SurrogateKind, n: usize, latent_dim: usize, sigma_h: f64) -> Result<Self> {
        if kind == SurrogateKind::Latent {
            if latent_dim == 0 {
                return Err(Error::Parameter("latent dimension must be >= 1".into()));
            }
            if !(sigma_h.is_finite() && sigma_h >= 0.0) {
                return Err(Error::Parameter(format!("sigma_h must be >= 0, got {sigma_h}")));
            }
        }
        Ok(Self {
            kind,
            n,
            latent_dim,
            sigma_h,
        })
    }

    pub fn for_sample(sample: &SurrogateSample, n: usize) -> Result<Self> {
        Self::new(
            sample.kind(),
            n,
            sample.latent_dim().max(DEFAULT_LATENT_DIM),
            sample.sigma_h().unwrap_or(0.0),
        )
    }

    /// True when the latent inputs are structurally pinned at zero.
    pub fn is_degenerate_latent(&self) -> bool {
        self.kind == SurrogateKind::Latent && self.sigma_h == 0.0
    }

    pub fn dim(&self) -> usize {
        match self.kind {
            SurrogateKind::Noiseless => 1,
            SurrogateKind::Homoscedastic => 2,
            SurrogateKind::Heteroscedastic => 1 + self.n,
            SurrogateKind::Latent if self.sigma_h == 0.0 => 1,
            SurrogateKind::Latent => 1 + self.n * self.latent_dim,
        }
    }

    pub fn to_sample(&self, z: &[f64]) -> Result<SurrogateSample> {
        if z.len() != self.dim() {
            return Err(Error::Structural(format!(
                "parameter vector of length {}, expected {}",
                z.len(),
                self.dim()
            )));
        }
        let kernel = KernelParams::new(z[0].exp())?;
        let state = match self.kind {
            SurrogateKind::Noiseless => LatentState::Noiseless,
            SurrogateKind::Homoscedastic => LatentState::Homoscedastic {
                noise_variance: z[1].exp(),
            },
            SurrogateKind::Heteroscedastic => LatentState::Heteroscedastic {
                noise_variances: z[1..].iter().map(|v| v.exp()).collect(),
            },
            SurrogateKind::Latent => LatentState::Latent {
                h: if self.sigma_h == 0.0 {
                    vec![vec![0.0; self.latent_dim]; self.n]
                } else {
                    z[1..].chunks(self.latent_dim).map(<[f64]>::to_vec).collect()
                },
                sigma_h: self.sigma_h,
            },
        };
        let sample = SurrogateSample { kernel, state };
        sample.check(self.n)?;
        Ok(sample)
    }

    pub fn from_sample(&self, sample: &SurrogateSample) -> Result<Vec<f64>> {
        sample.check(self.n)?;
        if sample.kind() != self.kind {
            return Err(Error::Structural(format!(
                "{} sample under a {} parameterization",
                sample.kind(),
                self.kind
            )));
        }
        let mut z = vec![sample.kernel.lengthscale().ln()];
        match &sample.state {
            LatentState::Noiseless => {}
            LatentState::Homoscedastic { noise_variance } => z.push(noise_variance.ln()),
            LatentState::Heteroscedastic { noise_variances } => {
                z.extend(noise_variances.iter().map(|v| v.ln()))
            }
            LatentState::Latent { h, sigma_h } => {
                if *sigma_h != self.sigma_h {
                    return Err(Error::Structural("sample sigma_h differs from parameterization".into()));
                }
                if *sigma_h > 0.0 {
                    z.extend(h.iter().flatten());
                }
            }
        }
        Ok(z)
    }

    /// Chain starting point: log ℓ = 0, log σ² = −4 (σ = e⁻²), latent
    /// inputs at zero perturbed by N(0, 0.01 σ_h²).
    pub fn initial_point<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut z = vec![0.0; self.dim()];
        match self.kind {
            SurrogateKind::Homoscedastic | SurrogateKind::Heteroscedastic => {
                z[1..].iter_mut().for_each(|v| *v = -4.0)
            }
            SurrogateKind::Latent if self.sigma_h > 0.0 => z[1..].iter_mut().for_each(|v| {
                let e: f64 = rng.sample(StandardNormal);
                *v = 0.1 * self.sigma_h * e;
            }),
            _ => {}
        }
        z
    }

    /// Unconstrained log density (log joint plus the log-transform Jacobian).
    /// Returns −∞ where the covariance cannot be factorized.
    pub fn log_density(&self, data: &Dataset, z: &[f64]) -> f64 {
        let sample = match self.to_sample(z) {
            Ok(s) => s,
            Err(_) => return f64::NEG_INFINITY,
        };
        match log_joint(data, &sample) {
            Ok(lj) => lj + self.log_jacobian(z),
            Err(_) => f64::NEG_INFINITY,
        }
    }

    fn log_jacobian(&self, z: &[f64]) -> f64 {
        match self.kind {
            SurrogateKind::Homoscedastic | SurrogateKind::Heteroscedastic => z.iter().sum(),
            _ => z[0],
        }
    }

    /// Unconstrained log density and its gradient written into `grad`.
    pub fn log_density_and_grad(&self, data: &Dataset, z: &[f64], grad: &mut [f64]) -> Result<f64> {
        let sample = self.to_sample(z)?;
        let value = log_joint_unconstrained_with_grad(data, &sample, self, grad)?;
        Ok(value)
    }
}

/// Log joint on the unconstrained scale, i.e. [`log_joint`] plus the
/// log-transform Jacobian of the positive parameters.
pub fn log_joint_unconstrained(data: &Dataset, sample: &SurrogateSample) -> Result<f64> {
    let p = Parameterization::for_sample(sample, data.len())?;
    let z = p.from_sample(sample)?;
    Ok(log_joint(data, sample)? + p.log_jacobian(&z))
}

/// Gradient of [`log_joint_unconstrained`] with respect to the unconstrained
/// parameter vector laid out as in [`Parameterization`].
pub fn log_joint_grad(data: &Dataset, sample: &SurrogateSample) -> Result<Vec<f64>> {
    let p = Parameterization::for_sample(sample, data.len())?;
    let mut grad = vec![0.0; p.dim()];
    log_joint_unconstrained_with_grad(data, sample, &p, &mut grad)?;
    Ok(grad)
}

fn log_joint_unconstrained_with_grad(
    data: &Dataset,
    sample: &SurrogateSample,
    p: &Parameterization,
    grad: &mut [f64],
) -> Result<f64> {
    sample.check(data.len())?;
    if grad.len() != p.dim() {
        return Err(Error::Structural("gradient buffer has the wrong length".into()));
    }
    let z = p.from_sample(sample)?;
    let log_l = z[0];
    grad.iter_mut().for_each(|g| *g = 0.0);

    if data.is_empty() {
        grad[0] = -log_l;
        return Ok(log_normal_prior(sample.kernel.lengthscale()) + state_prior(sample) + p.log_jacobian(&z));
    }

    let fit = fit(data, sample)?;
    let n = data.len();
    let value = gaussian_log_likelihood(data, &fit)
        + log_normal_prior(sample.kernel.lengthscale())
        + state_prior(sample)
        + p.log_jacobian(&z);

    // W = α αᵀ − K⁻¹, so ∂ log N / ∂θ = ½ tr(W ∂K/∂θ).
    let k_inv: DMatrix<f64> = fit.factor.inverse();
    let alpha = &fit.alpha;
    let w = |i: usize, j: usize| alpha[i] * alpha[j] - k_inv[(i, j)];
    let kernel = &sample.kernel;

    let mut g_log_l = 0.0;
    for i in 0..n {
        for j in 0..i {
            let r = sq_dist(fit.points.row(i), fit.points.row(j)).sqrt();
            g_log_l += w(i, j) * kernel.grad_log_lengthscale(r);
        }
    }
    // LogNormal(0,1) prior plus Jacobian is N(0,1) on log ℓ.
    grad[0] = g_log_l - log_l;

    match &sample.state {
        LatentState::Noiseless => {}
        LatentState::Homoscedastic { noise_variance } => {
            let tr: f64 = (0..n).map(|i| w(i, i)).sum();
            grad[1] = 0.5 * noise_variance * tr - z[1];
        }
        LatentState::Heteroscedastic { noise_variances } => {
            for i in 0..n {
                grad[1 + i] = 0.5 * noise_variances[i] * w(i, i) - z[1 + i];
            }
        }
        LatentState::Latent { h, sigma_h } => {
            if *sigma_h > 0.0 {
                let q = data.dim();
                let d = p.latent_dim;
                let var = sigma_h * sigma_h;
                for i in 0..n {
                    let pi = fit.points.row(i);
                    for j in 0..n {
                        if i == j {
                            continue;
                        }
                        let pj = fit.points.row(j);
                        let r = sq_dist(pi, pj).sqrt();
                        let s = w(i, j) * kernel.grad_r_over_r(r);
                        for c in 0..d {
                            grad[1 + i * d + c] += s * (pi[q + c] - pj[q + c]);
                        }
                    }
                    for c in 0..d {
                        grad[1 + i * d + c] -= h[i][c] / var;
                    }
                }
            }
        }
    }
    Ok(value)
}

/// A posterior sample conditioned on the data, ready for repeated queries.
#[derive(Clone, Debug)]
pub struct FittedSample {
    q: usize,
    latent_dim: usize,
    kernel: KernelParams,
    points: PointSet,
    factor: Option<CholeskyFactor>,
    alpha: Vec<f64>,
}

impl FittedSample {
    pub fn new(data: &Dataset, sample: &SurrogateSample) -> Result<Self> {
        sample.check(data.len())?;
        let latent_dim = sample.latent_dim();
        if data.is_empty() {
            return Ok(Self {
                q: data.dim(),
                latent_dim,
                kernel: sample.kernel,
                points: PointSet {
                    coords: Vec::new(),
                    dim: data.dim() + latent_dim,
                },
                factor: None,
                alpha: Vec::new(),
            });
        }
        let fit = fit(data, sample)?;
        Ok(Self {
            q: data.dim(),
            latent_dim,
            kernel: sample.kernel,
            points: fit.points,
            factor: Some(fit.factor),
            alpha: fit.alpha,
        })
    }

    pub fn dim(&self) -> usize {
        self.q
    }

    /// Predictive moments of the noise-free function at (x*, h* = 0).
    /// `x_star` is assumed to lie in the unit cube.
    pub fn predict(&self, x_star: &[f64]) -> PredictiveMoments {
        let mut buf = Vec::new();
        self.predict_with(x_star, &mut buf)
    }

    /// As [`predict`](Self::predict), reusing `buf` as scratch space.
    pub fn predict_with(&self, x_star: &[f64], buf: &mut Vec<f64>) -> PredictiveMoments {
        let prior_var = self.kernel.signal_variance();
        let Some(factor) = &self.factor else {
            return PredictiveMoments {
                mean: 0.0,
                variance: prior_var,
            };
        };
        let n = self.alpha.len();
        buf.clear();
        let q = self.q;
        for i in 0..n {
            let row = self.points.row(i);
            let mut s: f64 = row[..q].iter().zip(x_star).map(|(a, b)| (a - b) * (a - b)).sum();
            s += row[q..].iter().map(|v| v * v).sum::<f64>();
            buf.push(self.kernel.value(s.sqrt()));
        }
        let mean: f64 = buf.iter().zip(&self.alpha).map(|(k, a)| k * a).sum();
        factor.solve_lower_in_place(buf);
        let explained: f64 = buf.iter().map(|v| v * v).sum();
        PredictiveMoments {
            mean,
            variance: (prior_var - explained).max(0.0),
        }
    }

    pub fn latent_dim(&self) -> usize {
        self.latent_dim
    }
}

/// Predictive moments of the noise-free function at `x_star` under one
/// posterior sample; LGP queries are made at h* = 0.
pub fn predict(data: &Dataset, sample: &SurrogateSample, x_star: &[f64]) -> Result<PredictiveMoments> {
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
    Ok(FittedSample::new(data, sample)?.predict(x_star))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn noiseless(l: f64) -> SurrogateSample {
        SurrogateSample {
            kernel: KernelParams::new(l).unwrap(),
            state: LatentState::Noiseless,
        }
    }

    fn data_1d(xs: &[f64], fs: &[f64]) -> Dataset {
        Dataset::new(1, xs.iter().map(|&x| vec![x]).collect(), fs.to_vec()).unwrap()
    }

    #[test]
    fn standardize_examples() {
        let s = standardize(&[5.0, 5.0, 5.0]);
        assert_eq!((s.f.clone(), s.mean_shift, s.scale), (vec![0.0; 3], 5.0, 1.0));
        let s = standardize(&[0.0, 2.0]);
        assert_eq!((s.f.clone(), s.mean_shift, s.scale), (vec![-1.0, 1.0], 1.0, 1.0));
        let s = standardize(&[3.0]);
        assert_eq!((s.f.clone(), s.mean_shift, s.scale), (vec![0.0], 3.0, 1.0));
    }

    proptest! {
        #[test]
        fn standardize_round_trip(v in proptest::collection::vec(-1e3f64..1e3, 1..30)) {
            let s = standardize(&v);
            for (raw, f) in v.iter().zip(&s.f) {
                prop_assert!((s.restore(*f) - raw).abs() <= 1e-12 * raw.abs().max(1.0));
            }
            if v.len() >= 2 && s.scale != 1.0 {
                let n = v.len() as f64;
                let mean = s.f.iter().sum::<f64>() / n;
                let var = s.f.iter().map(|f| (f - mean) * (f - mean)).sum::<f64>() / n;
                prop_assert!(mean.abs() < 1e-10);
                prop_assert!((var.sqrt() - 1.0).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn single_point_log_joint() {
        let d = data_1d(&[0.5], &[7.0]);
        let lj = log_joint(&d, &noiseless(1.0)).unwrap();
        let expected = -0.5 * (1.0f64 + 1e-10).ln() - 2.0 * HALF_LN_2PI;
        assert!((lj - expected).abs() < 1e-12);
        assert!((lj - (-1.83788)).abs() < 1e-5);
    }

    #[test]
    fn latent_at_origin_matches_noiseless_plus_prior() {
        let d = data_1d(&[0.1, 0.4, 0.8], &[1.0, -0.5, 0.3]);
        let sigma_h = 0.2;
        let lgp = SurrogateSample {
            kernel: KernelParams::new(0.3).unwrap(),
            state: LatentState::Latent {
                h: vec![vec![0.0]; 3],
                sigma_h,
            },
        };
        let prior_const = 3.0 * (-0.5 * (2.0 * PI * sigma_h * sigma_h).ln());
        let a = log_joint(&d, &lgp).unwrap();
        let b = log_joint(&d, &noiseless(0.3)).unwrap();
        assert!((a - b - prior_const).abs() < 1e-12);
    }

    #[test]
    fn homoscedastic_two_point_oracle() {
        let d = data_1d(&[0.2, 0.6], &[1.0, 3.0]);
        let l = 0.4;
        let s2 = 0.3;
        let sample = SurrogateSample {
            kernel: KernelParams::new(l).unwrap(),
            state: LatentState::Homoscedastic { noise_variance: s2 },
        };
        let k01 = {
            let u = 5f64.sqrt() * 0.4 / l;
            (1.0 + u + u * u / 3.0) * (-u).exp()
        };
        let a = 1.0 + s2 + 2e-10;
        let det = a * a - k01 * k01;
        let f = d.f();
        let quad = (a * f[0] * f[0] - 2.0 * k01 * f[0] * f[1] + a * f[1] * f[1]) / det;
        let loglik = -0.5 * quad - 0.5 * det.ln() - (2.0 * PI).ln();
        let lognorm = |v: f64| -v.ln() - 0.5 * v.ln().powi(2) - 0.5 * (2.0 * PI).ln();
        let expected = loglik + lognorm(l) + lognorm(s2);
        assert!((log_joint(&d, &sample).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn zero_sigma_h_with_nonzero_latents_is_structural_error() {
        let d = data_1d(&[0.1, 0.9], &[0.0, 1.0]);
        let s = SurrogateSample {
            kernel: KernelParams::new(0.3).unwrap(),
            state: LatentState::Latent {
                h: vec![vec![0.0], vec![0.5]],
                sigma_h: 0.0,
            },
        };
        assert!(matches!(log_joint(&d, &s), Err(Error::Structural(_))));
    }

    #[test]
    fn symmetric_latent_gradients_are_antisymmetric() {
        let d = data_1d(&[0.3, 0.7], &[1.0, 1.0]);
        let s = SurrogateSample {
            kernel: KernelParams::new(0.5).unwrap(),
            state: LatentState::Latent {
                h: vec![vec![0.05], vec![-0.05]],
                sigma_h: 0.1,
            },
        };
        let g = log_joint_grad(&d, &s).unwrap();
        assert!((g[1] + g[2]).abs() < 1e-12);
        assert!(g[1].abs() > 0.0);
    }

    #[test]
    fn interpolation_and_prior_reversion() {
        let d = data_1d(&[0.2, 0.5, 0.9], &[1.0, -2.0, 0.5]);
        let s = noiseless(0.2);
        let m = predict(&d, &s, &[0.5]).unwrap();
        assert!((m.mean - d.f()[1]).abs() < 1e-6);
        assert!(m.variance <= 3e-10 * (1.0 + 1e-6));

        let d = data_1d(&[0.0, 0.01], &[1.0, 2.0]);
        let m = predict(&d, &noiseless(0.001), &[1.0]).unwrap();
        assert!(m.mean.abs() < 1e-12);
        assert!((m.variance - 1.0).abs() < 1e-12);
    }

    #[test]
    fn far_latent_inputs_ignore_the_data() {
        let d = data_1d(&[0.2, 0.4, 0.6], &[3.0, -1.0, 2.0]);
        let s = SurrogateSample {
            kernel: KernelParams::new(0.1).unwrap(),
            state: LatentState::Latent {
                h: vec![vec![10.0], vec![-10.0], vec![25.0]],
                sigma_h: 5.0,
            },
        };
        for x in [0.2, 0.4, 0.55] {
            let m = predict(&d, &s, &[x]).unwrap();
            assert!(m.mean.abs() < 1e-10);
            assert!((m.variance - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn predict_rejects_out_of_cube_queries() {
        let d = data_1d(&[0.2], &[1.0]);
        assert!(matches!(predict(&d, &noiseless(0.3), &[1.2]), Err(Error::Domain(_))));
        assert!(matches!(predict(&d, &noiseless(0.3), &[0.2, 0.1]), Err(Error::Structural(_))));
    }

    #[test]
    fn parameterization_round_trip() {
        let mut rng = crate::rng::seeded(1);
        for kind in SurrogateKind::ALL {
            let p = Parameterization::new(kind, 4, 1, 0.1).unwrap();
            let z0 = p.initial_point(&mut rng);
            let s = p.to_sample(&z0).unwrap();
            assert_eq!(s.kind(), kind);
            let z1 = p.from_sample(&s).unwrap();
            for (a, b) in z0.iter().zip(&z1) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn variance_shrinks_when_data_added() {
        let s = noiseless(0.25);
        let small = data_1d(&[0.1, 0.7], &[0.3, -0.4]);
        let big = data_1d(&[0.1, 0.7, 0.45], &[0.3, -0.4, 1.0]);
        for i in 0..=20 {
            let x = i as f64 / 20.0;
            let a = predict(&small, &s, &[x]).unwrap().variance;
            let b = predict(&big, &s, &[x]).unwrap().variance;
            assert!(b <= a + 1e-9);
        }
    }
}
