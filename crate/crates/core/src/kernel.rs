//! Matérn 5/2 kernel over the augmented input space X×H, covariance assembly
//! and a jitter-escalating Cholesky factorization.
//!
//! A single isotropic lengthscale is shared by every observed and latent
//! coordinate, so moving a point by δ along a latent axis reduces its
//! covariances exactly as much as moving it by δ along an observed axis.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

const SQRT5: f64 = 2.236_067_977_499_79;

/// Largest diagonal jitter tried before a factorization is declared failed.
pub const MAX_JITTER: f64 = 1e-4;

/// Starting jitter for an `n`-point covariance matrix.
pub fn base_jitter(n: usize) -> f64 {
    1e-10 * n.max(1) as f64
}

/// A point of the product space X×H: unit-cube coordinates `x` followed by
/// latent coordinates `h`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AugmentedInput {
    pub x: Vec<f64>,
    pub h: Vec<f64>,
}

impl AugmentedInput {
    pub fn new(x: Vec<f64>, h: Vec<f64>) -> Result<Self> {
        if let Some(v) = x.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::Domain(format!(
                "observed coordinate {v} outside the unit cube"
            )));
        }
        if h.iter().any(|v| !v.is_finite()) {
            return Err(Error::Parameter("non-finite latent coordinate".into()));
        }
        Ok(Self { x, h })
    }

    /// Point with the latent part pinned at the origin.
    pub fn at_latent_origin(x: Vec<f64>, latent_dim: usize) -> Result<Self> {
        Self::new(x, vec![0.0; latent_dim])
    }

    pub fn observed_dim(&self) -> usize {
        self.x.len()
    }

    pub fn latent_dim(&self) -> usize {
        self.h.len()
    }

    pub fn coords(&self) -> impl Iterator<Item = f64> + '_ {
        self.x.iter().chain(self.h.iter()).copied()
    }

    pub fn distance(&self, other: &AugmentedInput) -> f64 {
        self.coords()
            .zip(other.coords())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

/// Kernel hyperparameters. The signal variance is 1 unless overridden.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelParams {
    lengthscale: f64,
    signal_variance: f64,
}

impl KernelParams {
    pub fn new(lengthscale: f64) -> Result<Self> {
        Self::with_signal_variance(lengthscale, 1.0)
    }

    pub fn with_signal_variance(lengthscale: f64, signal_variance: f64) -> Result<Self> {
        if !(lengthscale.is_finite() && lengthscale > 0.0) {
            return Err(Error::Parameter(format!(
                "lengthscale must be positive and finite, got {lengthscale}"
            )));
        }
        if !(signal_variance.is_finite() && signal_variance > 0.0) {
            return Err(Error::Parameter(format!(
                "signal variance must be positive and finite, got {signal_variance}"
            )));
        }
        Ok(Self {
            lengthscale,
            signal_variance,
        })
    }

    pub fn lengthscale(&self) -> f64 {
        self.lengthscale
    }

    pub fn signal_variance(&self) -> f64 {
        self.signal_variance
    }

    #[inline]
    pub(crate) fn value(&self, r: f64) -> f64 {
        let u = SQRT5 * r / self.lengthscale;
        self.signal_variance * (1.0 + u + u * u / 3.0) * (-u).exp()
    }

    /// (dk/dr)/r, finite at r = 0.
    #[inline]
    pub(crate) fn grad_r_over_r(&self, r: f64) -> f64 {
        let l2 = self.lengthscale * self.lengthscale;
        let u = SQRT5 * r / self.lengthscale;
        -(5.0 * self.signal_variance / (3.0 * l2)) * (1.0 + u) * (-u).exp()
    }

    /// dk / d(log lengthscale).
    #[inline]
    pub(crate) fn grad_log_lengthscale(&self, r: f64) -> f64 {
        let u = SQRT5 * r / self.lengthscale;
        self.signal_variance * (u * u / 3.0) * (1.0 + u) * (-u).exp()
    }
}

/// Matérn 5/2 covariance at distance `r`.
pub fn matern52(r: f64, params: &KernelParams) -> Result<f64> {
    if !r.is_finite() || r < 0.0 {
        return Err(Error::Parameter(format!(
            "distance must be finite and nonnegative, got {r}"
        )));
    }
    Ok(params.value(r))
}

/// Gradient of k(p_i, p_j) with respect to the coordinates of `p_i`
/// (observed coordinates first, then latent ones).
pub fn kernel_grad_wrt_input(
    p_i: &AugmentedInput,
    p_j: &AugmentedInput,
    params: &KernelParams,
) -> Result<Vec<f64>> {
    check_same_shape(p_i, p_j)?;
    let r = p_i.distance(p_j);
    let scale = params.grad_r_over_r(r);
    Ok(p_i
        .coords()
        .zip(p_j.coords())
        .map(|(a, b)| scale * (a - b))
        .collect())
}

fn check_same_shape(a: &AugmentedInput, b: &AugmentedInput) -> Result<()> {
    if a.observed_dim() != b.observed_dim() || a.latent_dim() != b.latent_dim() {
        return Err(Error::Structural(format!(
            "point shapes differ: ({}, {}) vs ({}, {})",
            a.observed_dim(),
            a.latent_dim(),
            b.observed_dim(),
            b.latent_dim()
        )));
    }
    Ok(())
}

/// Points stored row-major in a flat buffer; the hot-path representation.
#[derive(Clone, Debug)]
pub(crate) struct PointSet {
    pub coords: Vec<f64>,
    pub dim: usize,
}

impl PointSet {
    pub fn len(&self) -> usize {
        if self.dim == 0 {
            0
        } else {
            self.coords.len() / self.dim
        }
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }
}

#[inline]
pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Symmetric kernel matrix on `points` with `diag` added to the diagonal.
pub(crate) fn kernel_matrix(points: &PointSet, params: &KernelParams, diag: &[f64]) -> DMatrix<f64> {
    let n = points.len();
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        k[(i, i)] = params.signal_variance + diag[i];
        for j in 0..i {
            let v = params.value(sq_dist(points.row(i), points.row(j)).sqrt());
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    k
}

/// Covariance matrix together with the jitter already on its diagonal.
#[derive(Clone, Debug)]
pub struct CovMatrix {
    entries: DMatrix<f64>,
    jitter: f64,
}

impl CovMatrix {
    /// Wraps `entries`, which must already carry `jitter` on the diagonal.
    pub fn from_entries(entries: DMatrix<f64>, jitter: f64) -> Result<Self> {
        if !entries.is_square() {
            return Err(Error::Structural("covariance matrix must be square".into()));
        }
        if !(jitter >= 0.0) {
            return Err(Error::Parameter(format!("jitter must be >= 0, got {jitter}")));
        }
        Ok(Self { entries, jitter })
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    /// Cholesky factorization. A positive jitter is escalated by ×10 up to
    /// [`MAX_JITTER`] on failure; a zero jitter is tried exactly once.
    pub fn factorize(&self) -> Result<CholeskyFactor> {
        let mut jitter = self.jitter;
        loop {
            let mut m = self.entries.clone();
            let extra = jitter - self.jitter;
            if extra > 0.0 {
                for i in 0..m.nrows() {
                    m[(i, i)] += extra;
                }
            }
            if let Some(f) = CholeskyFactor::try_new(m, jitter) {
                return Ok(f);
            }
            let next = jitter * 10.0;
            if jitter <= 0.0 || next > MAX_JITTER * (1.0 + 1e-12) {
                return Err(Error::Factorization { jitter });
            }
            jitter = next;
        }
    }
}

/// Covariance matrix of `points` under `params`, plus `jitter` on the diagonal.
pub fn cov_matrix(points: &[AugmentedInput], params: &KernelParams, jitter: f64) -> Result<CovMatrix> {
    if !(jitter >= 0.0) {
        return Err(Error::Parameter(format!("jitter must be >= 0, got {jitter}")));
    }
    if let Some(first) = points.first() {
        for p in &points[1..] {
            check_same_shape(first, p)?;
        }
    }
    let dim = points.first().map_or(0, |p| p.observed_dim() + p.latent_dim());
    let set = PointSet {
        coords: points.iter().flat_map(|p| p.coords()).collect(),
        dim,
    };
    let n = points.len();
    let entries = if dim == 0 {
        DMatrix::from_element(n, n, params.signal_variance) + DMatrix::identity(n, n) * jitter
    } else {
        kernel_matrix(&set, params, &vec![jitter; n])
    };
    CovMatrix::from_entries(entries, jitter)
}

/// Solves K·out = rhs through the Cholesky factor of `k`.
pub fn cholesky_solve(k: &CovMatrix, rhs: &[f64]) -> Result<Vec<f64>> {
    if rhs.len() != k.n() {
        return Err(Error::Structural(format!(
            "rhs has length {}, matrix is {}x{}",
            rhs.len(),
            k.n(),
            k.n()
        )));
    }
    let factor = k.factorize()?;
    Ok(factor.solve(rhs))
}

/// Lower Cholesky factor of a jittered covariance matrix.
#[derive(Clone, Debug)]
pub struct CholeskyFactor {
    chol: Cholesky<f64, Dyn>,
    // Row-major copy of L for forward substitution.
    lower_rows: Vec<f64>,
    n: usize,
    jitter: f64,
}

impl CholeskyFactor {
    fn try_new(m: DMatrix<f64>, jitter: f64) -> Option<Self> {
        let n = m.nrows();
        let chol = m.cholesky()?;
        let l = chol.l_dirty();
        let mut lower_rows = vec![0.0; n * n];
        for i in 0..n {
            let d = l[(i, i)];
            if !(d.is_finite() && d > 0.0) {
                return None;
            }
            for j in 0..=i {
                lower_rows[i * n + j] = l[(i, j)];
            }
        }
        if lower_rows.iter().any(|v| !v.is_finite()) {
            return None;
        }
        Some(Self {
            chol,
            lower_rows,
            n,
            jitter,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Jitter actually used, after any escalation.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let b = DVector::from_column_slice(rhs);
        self.chol.solve(&b).as_slice().to_vec()
    }

    /// In-place forward substitution L·v = b.
    pub fn solve_lower_in_place(&self, b: &mut [f64]) {
        let n = self.n;
        for i in 0..n {
            let row = &self.lower_rows[i * n..i * n + i + 1];
            let mut s = b[i];
            for j in 0..i {
                s -= row[j] * b[j];
            }
            b[i] = s / row[i];
        }
    }

    pub fn log_det(&self) -> f64 {
        (0..self.n)
            .map(|i| self.lower_rows[i * self.n + i].ln())
            .sum::<f64>()
            * 2.0
    }

    pub fn inverse(&self) -> DMatrix<f64> {
        self.chol.inverse()
    }

    pub fn lower(&self) -> DMatrix<f64> {
        self.chol.l()
    }
}
