//! Independent reference implementations used as test oracles. Nothing here
//! calls into the library's linear algebra.
#![allow(dead_code)]

use std::f64::consts::PI;

/// Matérn 5/2 with unit signal variance, written out directly.
pub fn matern(r: f64, l: f64) -> f64 {
    let u = 5f64.sqrt() * r / l;
    (1.0 + u + u * u / 3.0) * (-u).exp()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Gauss-Jordan inverse with partial pivoting.
pub fn inverse(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            r
        })
        .collect();
    for c in 0..n {
        let p = (c..n)
            .max_by(|&i, &j| m[i][c].abs().partial_cmp(&m[j][c].abs()).unwrap())
            .unwrap();
        m.swap(c, p);
        let d = m[c][c];
        for v in m[c].iter_mut() {
            *v /= d;
        }
        for i in 0..n {
            if i != c {
                let f = m[i][c];
                if f != 0.0 {
                    for j in 0..2 * n {
                        m[i][j] -= f * m[c][j];
                    }
                }
            }
        }
    }
    m.into_iter().map(|r| r[n..].to_vec()).collect()
}

pub fn determinant(a: &[Vec<f64>]) -> f64 {
    let n = a.len();
    let mut m = a.to_vec();
    let mut det = 1.0;
    for c in 0..n {
        let p = (c..n)
            .max_by(|&i, &j| m[i][c].abs().partial_cmp(&m[j][c].abs()).unwrap())
            .unwrap();
        if p != c {
            m.swap(c, p);
            det = -det;
        }
        det *= m[c][c];
        for i in c + 1..n {
            let f = m[i][c] / m[c][c];
            for j in c..n {
                m[i][j] -= f * m[c][j];
            }
        }
    }
    det
}

pub fn mat_vec(a: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    a.iter().map(|r| r.iter().zip(v).map(|(x, y)| x * y).sum()).collect()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Dense GP conditional: training inputs `pts`, per-point diagonal
/// additions `diag`, standardized targets `f`, query `q`.
pub fn dense_predict(pts: &[Vec<f64>], diag: &[f64], f: &[f64], l: f64, q: &[f64]) -> (f64, f64) {
    let n = pts.len();
    let k: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| matern(dist(&pts[i], &pts[j]), l) + if i == j { diag[i] } else { 0.0 })
                .collect()
        })
        .collect();
    let kinv = inverse(&k);
    let ks: Vec<f64> = pts.iter().map(|p| matern(dist(p, q), l)).collect();
    let alpha = mat_vec(&kinv, f);
    let mean = dot(&ks, &alpha);
    let var = 1.0 - dot(&ks, &mat_vec(&kinv, &ks));
    (mean, var.max(0.0))
}

/// Dense log N(f | 0, K).
pub fn dense_log_normal(k: &[Vec<f64>], f: &[f64]) -> f64 {
    let n = f.len() as f64;
    let kinv = inverse(k);
    -0.5 * dot(f, &mat_vec(&kinv, f)) - 0.5 * determinant(k).ln() - 0.5 * n * (2.0 * PI).ln()
}

/// Population standardization, written independently.
pub fn standardize(f: &[f64]) -> Vec<f64> {
    let n = f.len() as f64;
    let m = f.iter().sum::<f64>() / n;
    let sd = (f.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n).sqrt();
    let s = if sd > 0.0 { sd } else { 1.0 };
    f.iter().map(|v| (v - m) / s).collect()
}

/// Central finite-difference gradient.
pub fn fd_grad(f: impl Fn(&[f64]) -> f64, z: &[f64], h: f64) -> Vec<f64> {
    (0..z.len())
        .map(|i| {
            let mut up = z.to_vec();
            let mut dn = z.to_vec();
            up[i] += h;
            dn[i] -= h;
            (f(&up) - f(&dn)) / (2.0 * h)
        })
        .collect()
}

/// Two-sided signed-rank p-value by enumerating all 2^n sign patterns of
/// the nonzero differences.
pub fn brute_force_wilcoxon(a: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).filter(|v| *v != 0.0).collect();
    let n = d.len();
    if n == 0 {
        return 1.0;
    }
    // Average ranks of |d|, computed by counting.
    let ranks: Vec<f64> = d
        .iter()
        .map(|v| {
            let less = d.iter().filter(|w| w.abs() < v.abs()).count() as f64;
            let equal = d.iter().filter(|w| w.abs() == v.abs()).count() as f64;
            less + (equal + 1.0) / 2.0
        })
        .collect();
    let observed: f64 = d.iter().zip(&ranks).filter(|(v, _)| **v > 0.0).map(|(_, r)| r).sum();
    let (mut le, mut ge) = (0u64, 0u64);
    for mask in 0u64..(1u64 << n) {
        let w: f64 = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| ranks[i]).sum();
        if w <= observed + 1e-9 {
            le += 1;
        }
        if w >= observed - 1e-9 {
            ge += 1;
        }
    }
    let total = (1u64 << n) as f64;
    (2.0 * le.min(ge) as f64 / total).min(1.0)
}

/// Monte-Carlo estimate of E[max(incumbent − f, 0)] for f ~ N(mu, sigma²).
pub fn mc_expected_improvement(mu: f64, sigma: f64, incumbent: f64, draws: &[f64]) -> f64 {
    draws.iter().map(|z| (incumbent - (mu + sigma * z)).max(0.0)).sum::<f64>() / draws.len() as f64
}

/// Kolmogorov-Smirnov statistic of `samples` against `cdf`.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut s = samples.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, x)| {
            let c = cdf(*x);
            (c - i as f64 / n).abs().max(((i + 1) as f64 / n - c).abs())
        })
        .fold(0.0, f64::max)
}

/// Standard normal cdf via the complementary error function series.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / 2f64.sqrt())
}

fn erfc(x: f64) -> f64 {
    // Numerical Recipes erfcc, relative error < 1.2e-7.
    let z = x.abs();
    let t = 1.0 / (1.0 + 0.5 * z);
    let r = t
        * (-z * z - 1.265_512_23
            + t * (1.000_023_68
                + t * (0.374_091_96
                    + t * (0.096_784_18
                        + t * (-0.186_288_06
                            + t * (0.278_868_07
                                + t * (-1.135_203_98 + t * (1.488_515_87 + t * (-0.822_152_23 + t * 0.170_872_77)))))))))
            .exp();
    if x >= 0.0 {
        r
    } else {
        2.0 - r
    }
}

use modbo::kernel::KernelParams;
use modbo::surrogates::{Dataset, LatentState, SurrogateKind, SurrogateSample};
use rand::Rng;

/// A random dataset with 1..=5 points in 1..=3 dimensions and a random
/// posterior sample of the given family on it.
pub fn random_instance<R: Rng>(rng: &mut R, kind: SurrogateKind, sigma_h: Option<f64>) -> (Dataset, SurrogateSample) {
    let q = rng.random_range(1..=3);
    let n = rng.random_range(1..=5);
    let x: Vec<Vec<f64>> = (0..n).map(|_| (0..q).map(|_| rng.random::<f64>()).collect()).collect();
    let f: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
    let data = Dataset::new(q, x, f).unwrap();
    let l = 10f64.powf(rng.random_range(-1.3..-0.2));
    let state = match kind {
        SurrogateKind::Noiseless => LatentState::Noiseless,
        SurrogateKind::Homoscedastic => LatentState::Homoscedastic {
            noise_variance: 10f64.powf(rng.random_range(-3.0..0.0)),
        },
        SurrogateKind::Heteroscedastic => LatentState::Heteroscedastic {
            noise_variances: (0..n).map(|_| 10f64.powf(rng.random_range(-3.0..0.0))).collect(),
        },
        SurrogateKind::Latent => {
            let s = sigma_h.unwrap_or_else(|| rng.random_range(0.05..0.5));
            LatentState::Latent {
                h: (0..n)
                    .map(|_| vec![if s > 0.0 { rng.random_range(-2.0 * s..2.0 * s) } else { 0.0 }])
                    .collect(),
                sigma_h: s,
            }
        }
    };
    (
        data,
        SurrogateSample {
            kernel: KernelParams::new(l).unwrap(),
            state,
        },
    )
}

/// Training inputs (augmented for the LGP) and diagonal additions the
/// library is documented to use: jitter 1e-10·N plus the noise.
pub fn oracle_training(data: &Dataset, s: &SurrogateSample) -> (Vec<Vec<f64>>, Vec<f64>) {
    let n = data.len();
    let jitter = 1e-10 * n as f64;
    let mut pts: Vec<Vec<f64>> = data.x().to_vec();
    let diag: Vec<f64> = match &s.state {
        LatentState::Noiseless => vec![jitter; n],
        LatentState::Homoscedastic { noise_variance } => vec![jitter + noise_variance; n],
        LatentState::Heteroscedastic { noise_variances } => noise_variances.iter().map(|v| v + jitter).collect(),
        LatentState::Latent { h, .. } => {
            for (p, hr) in pts.iter_mut().zip(h) {
                p.extend_from_slice(hr);
            }
            vec![jitter; n]
        }
    };
    (pts, diag)
}

/// Query point as seen by the oracle: latent coordinates at 0.
pub fn oracle_query(x: &[f64], s: &SurrogateSample) -> Vec<f64> {
    let mut q = x.to_vec();
    if let LatentState::Latent { h, .. } = &s.state {
        q.extend(std::iter::repeat(0.0).take(h.first().map_or(1, Vec::len)));
    }
    q
}

/// Log joint computed densely: log N(F | 0, K) plus priors.
pub fn dense_log_joint(data: &Dataset, s: &SurrogateSample) -> f64 {
    let (pts, diag) = oracle_training(data, s);
    let l = s.kernel.lengthscale();
    let n = pts.len();
    let k: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| matern(dist(&pts[i], &pts[j]), l) + if i == j { diag[i] } else { 0.0 })
                .collect()
        })
        .collect();
    let lognormal = |v: f64| -v.ln() - 0.5 * v.ln().powi(2) - 0.5 * (2.0 * PI).ln();
    let mut total = dense_log_normal(&k, &standardize(data.f_raw())) + lognormal(l);
    match &s.state {
        LatentState::Noiseless => {}
        LatentState::Homoscedastic { noise_variance } => total += lognormal(*noise_variance),
        LatentState::Heteroscedastic { noise_variances } => total += noise_variances.iter().map(|v| lognormal(*v)).sum::<f64>(),
        LatentState::Latent { h, sigma_h } => {
            if *sigma_h > 0.0 {
                let var = sigma_h * sigma_h;
                total += h.iter().flatten().map(|v| -0.5 * (2.0 * PI * var).ln() - v * v / (2.0 * var)).sum::<f64>();
            }
        }
    }
    total
}

/// Smallest pairwise distance between training inputs (∞ for one point).
pub fn min_separation(data: &Dataset) -> f64 {
    let x = data.x();
    let mut m = f64::INFINITY;
    for i in 0..x.len() {
        for j in i + 1..x.len() {
            m = m.min(dist(&x[i], &x[j]));
        }
    }
    m
}

/// Like `random_instance`, but redraws until no two inputs are closer than
/// a tenth of the lengthscale, which keeps cond(K) bounded.
pub fn well_separated_instance<R: Rng>(rng: &mut R, kind: SurrogateKind) -> (Dataset, SurrogateSample) {
    loop {
        let (d, s) = random_instance(rng, kind, None);
        if min_separation(&d) >= 0.1 * s.kernel.lengthscale() {
            return (d, s);
        }
    }
}
