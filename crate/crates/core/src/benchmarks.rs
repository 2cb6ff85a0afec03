//! Synthetic objective suite and the corruption functions used to add
//! nonsmooth oscillatory structure to a base objective.

use std::f64::consts::{E, PI, TAU};
use std::fmt;
use std::sync::Arc;

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::rng::seeded;
use crate::{Error, Result};

/// Slack allowed when checking that a point lies inside a domain.
pub const DOMAIN_SLACK: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Property {
    None,
    Boring,
    Oscillatory,
    Complicated,
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Property::None => "none",
            Property::Boring => "boring",
            Property::Oscillatory => "oscillatory",
            Property::Complicated => "complicated",
        })
    }
}

pub type Evaluator = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Anything the optimization loop can evaluate.
pub trait Objective: Sync {
    fn domain(&self) -> &[[f64; 2]];

    fn evaluate(&self, x: &[f64]) -> Result<f64>;

    fn dim(&self) -> usize {
        self.domain().len()
    }
}

#[derive(Clone)]
pub struct Benchmark {
    pub name: String,
    pub domain: Vec<[f64; 2]>,
    pub known_min: f64,
    pub known_max: f64,
    pub properties: Vec<Property>,
    evaluator: Evaluator,
}

impl fmt::Debug for Benchmark {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Benchmark")
            .field("name", &self.name)
            .field("domain", &self.domain)
            .field("known_min", &self.known_min)
            .field("known_max", &self.known_max)
            .field("properties", &self.properties)
            .finish()
    }
}

impl Benchmark {
    pub fn new<F>(
        name: impl Into<String>,
        domain: Vec<[f64; 2]>,
        known_min: f64,
        known_max: f64,
        properties: Vec<Property>,
        f: F,
    ) -> Result<Self>
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        if domain.is_empty() {
            return Err(Error::Parameter("benchmark domain must have at least one dimension".into()));
        }
        if let Some(b) = domain.iter().find(|b| !(b[0] < b[1]) || !b[0].is_finite() || !b[1].is_finite()) {
            return Err(Error::Parameter(format!("invalid bounds [{}, {}]", b[0], b[1])));
        }
        if !(known_min <= known_max) {
            return Err(Error::Parameter(format!(
                "known_min {known_min} exceeds known_max {known_max}"
            )));
        }
        Ok(Self {
            name: name.into(),
            domain,
            known_min,
            known_max,
            properties,
            evaluator: Arc::new(f),
        })
    }

    pub fn dim(&self) -> usize {
        self.domain.len()
    }

    pub fn with_known_extrema(mut self, known_min: f64, known_max: f64) -> Self {
        self.known_min = known_min;
        self.known_max = known_max;
        self
    }

    /// Evaluates without checking the domain.
    pub fn eval_unchecked(&self, x: &[f64]) -> f64 {
        (self.evaluator)(x)
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(&self.domain)
                .all(|(v, b)| *v >= b[0] - DOMAIN_SLACK && *v <= b[1] + DOMAIN_SLACK)
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::Structural(format!(
                "{} expects {} coordinates, got {}",
                self.name,
                self.dim(),
                x.len()
            )));
        }
        if !self.contains(x) {
            return Err(Error::Domain(format!("{:?} lies outside the {} domain", x, self.name)));
        }
        Ok(self.eval_unchecked(x))
    }

    /// One catalog line: name, dimension, domain, known extrema, properties.
    pub fn listing(&self) -> String {
        let props: Vec<String> = self.properties.iter().map(ToString::to_string).collect();
        format!(
            "{}, {}, {}, min {}, max {}, {}",
            self.name,
            self.dim(),
            format_domain(&self.domain),
            self.known_min,
            self.known_max,
            props.join(" ")
        )
    }
}

impl Objective for Benchmark {
    fn domain(&self) -> &[[f64; 2]] {
        &self.domain
    }

    fn evaluate(&self, x: &[f64]) -> Result<f64> {
        let v = self.eval(x)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Objective(format!("{} returned {v} at {x:?}", self.name)))
        }
    }
}

/// `[[lo,hi],...]`, or `[lo,hi]^Q` when every dimension shares its bounds.
pub fn format_domain(domain: &[[f64; 2]]) -> String {
    let first = domain[0];
    if domain.len() == 1 {
        return format!("[{},{}]", first[0], first[1]);
    }
    if domain.iter().all(|b| *b == first) {
        return format!("[{},{}]^{}", first[0], first[1], domain.len());
    }
    let parts: Vec<String> = domain.iter().map(|b| format!("[{},{}]", b[0], b[1])).collect();
    format!("[{}]", parts.join(","))
}

/// +1 when `t mod 2π ∈ [0, π)`, −1 otherwise.
pub fn square_wave(t: f64) -> f64 {
    if t.rem_euclid(TAU) < PI {
        1.0
    } else {
        -1.0
    }
}

/// `2·frac(t / 2π) − 1`, in [−1, 1).
pub fn sawtooth(t: f64) -> f64 {
    2.0 * (t / TAU).rem_euclid(1.0) - 1.0
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorruptionParams {
    pub a: [f64; 4],
}

impl CorruptionParams {
    pub const SMALL: CorruptionParams = CorruptionParams {
        a: [-0.03, 0.05, 0.08, 0.03],
    };
    pub const LARGE: CorruptionParams = CorruptionParams {
        a: [-0.03, 0.20, 0.16, 0.06],
    };
    pub const ZERO: CorruptionParams = CorruptionParams { a: [0.0; 4] };

    pub fn amplitude_bound(&self) -> f64 {
        self.a.iter().map(|v| v.abs()).sum()
    }
}

fn corruption_unchecked(x: f64, p: &CorruptionParams) -> f64 {
    let sq = square_wave(8.0 * PI * x);
    let gate = sq * (0.5 + 0.5 * sq);
    if gate == 0.0 {
        return 0.0;
    }
    let s = p.a[0] * sawtooth(0.3 * PI + 30.0 * PI * x)
        + p.a[1] * sawtooth(20.0 * PI * x)
        + p.a[2] * sawtooth(PI + 60.0 * PI * x)
        + p.a[3] * sawtooth(0.5 * PI + 80.0 * PI * x);
    gate * s
}

/// Square-wave-gated sum of four sawtooths on [0, 1].
pub fn corruption(x: f64, p: &CorruptionParams) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!("corruption input {x} outside [0, 1]")));
    }
    Ok(corruption_unchecked(x, p))
}

/// `base(v) + (f_max − f_min) · max_d corruption(normalized v_d)`. Known
/// extrema of the result are estimated from 10⁵ uniform samples.
pub fn corrupt(base: &Benchmark, f_min: f64, f_max: f64, params: CorruptionParams) -> Benchmark {
    let mut out = corrupt_named(base, f_min, f_max, params, base.known_min, base.known_max);
    let mut props = base.properties.clone();
    props.retain(|p| *p != Property::None);
    for p in [Property::Complicated, Property::Oscillatory] {
        if !props.contains(&p) {
            props.push(p);
        }
    }
    out.properties = props;
    let (lo, hi) = estimate_extrema(&out, 100_000, 0);
    out.known_min = lo;
    out.known_max = hi;
    out
}

/// Minimum and maximum over `n_samples` uniform draws in the domain.
pub fn estimate_extrema(b: &Benchmark, n_samples: usize, seed: u64) -> (f64, f64) {
    const CHUNK: usize = 65_536;
    let q = b.dim();
    let mut rng = seeded(seed);
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut pts = Vec::with_capacity(CHUNK * q);
    let mut remaining = n_samples.max(1);
    while remaining > 0 {
        let m = remaining.min(CHUNK);
        pts.clear();
        for _ in 0..m {
            for bd in &b.domain {
                pts.push(bd[0] + rng.random::<f64>() * (bd[1] - bd[0]));
            }
        }
        let (l, h) = pts
            .par_chunks(q)
            .map(|x| {
                let v = b.eval_unchecked(x);
                (v, v)
            })
            .reduce(
                || (f64::INFINITY, f64::NEG_INFINITY),
                |a, c| (a.0.min(c.0), a.1.max(c.1)),
            );
        lo = lo.min(l);
        hi = hi.max(h);
        remaining -= m;
    }
    (lo, hi)
}

fn branin01(x: &[f64]) -> f64 {
    let (x1, x2) = (x[0], x[1]);
    let t = x2 - 5.1 / (4.0 * PI * PI) * x1 * x1 + 5.0 / PI * x1 - 6.0;
    t * t + 10.0 * (1.0 - 1.0 / (8.0 * PI)) * x1.cos() + 10.0
}

fn branin02(x: &[f64]) -> f64 {
    let (x1, x2) = (x[0], x[1]);
    let t = x2 - 5.1 / (4.0 * PI * PI) * x1 * x1 + 5.0 * x1 / PI - 6.0;
    t * t + 10.0 * (1.0 - 1.0 / (8.0 * PI)) * x1.cos() * x2.cos() + (x1 * x1 + x2 * x2 + 1.0).ln() + 10.0
}

fn beale(x: &[f64]) -> f64 {
    let (a, b) = (x[0], x[1]);
    (1.5 - a + a * b).powi(2) + (2.25 - a + a * b * b).powi(2) + (2.625 - a + a * b * b * b).powi(2)
}

const HARTMANN_A: [[f64; 6]; 4] = [
    [10.0, 3.0, 17.0, 3.5, 1.7, 8.0],
    [0.05, 10.0, 17.0, 0.1, 8.0, 14.0],
    [3.0, 3.5, 1.7, 10.0, 17.0, 8.0],
    [17.0, 8.0, 0.05, 10.0, 0.1, 14.0],
];
const HARTMANN_P: [[f64; 6]; 4] = [
    [0.1312, 0.1696, 0.5569, 0.0124, 0.8283, 0.5886],
    [0.2329, 0.4135, 0.8307, 0.3736, 0.1004, 0.9991],
    [0.2348, 0.1451, 0.3522, 0.2883, 0.3047, 0.6650],
    [0.4047, 0.8828, 0.8732, 0.5743, 0.1091, 0.0381],
];
const HARTMANN_C: [f64; 4] = [1.0, 1.2, 3.0, 3.2];

fn hartmann6(x: &[f64]) -> f64 {
    -(0..4)
        .map(|i| {
            let s: f64 = (0..6).map(|j| HARTMANN_A[i][j] * (x[j] - HARTMANN_P[i][j]).powi(2)).sum();
            HARTMANN_C[i] * (-s).exp()
        })
        .sum::<f64>()
}

fn griewank(x: &[f64]) -> f64 {
    let s: f64 = x.iter().map(|v| v * v).sum::<f64>() / 4000.0;
    let p: f64 = x
        .iter()
        .enumerate()
        .map(|(i, v)| (v / ((i + 1) as f64).sqrt()).cos())
        .product();
    1.0 + s - p
}

fn shubert01(x: &[f64]) -> f64 {
    x.iter()
        .map(|v| (1..=5).map(|j| j as f64 * ((j as f64 + 1.0) * v + j as f64).cos()).sum::<f64>())
        .product()
}

fn levy13(x: &[f64]) -> f64 {
    let (x1, x2) = (x[0], x[1]);
    (3.0 * PI * x1).sin().powi(2)
        + (x1 - 1.0).powi(2) * (1.0 + (3.0 * PI * x2).sin().powi(2))
        + (x2 - 1.0).powi(2) * (1.0 + (2.0 * PI * x2).sin().powi(2))
}

fn ackley(x: &[f64]) -> f64 {
    let q = x.len() as f64;
    let s2: f64 = x.iter().map(|v| v * v).sum::<f64>() / q;
    let sc: f64 = x.iter().map(|v| (TAU * v).cos()).sum::<f64>() / q;
    -20.0 * (-0.2 * s2.sqrt()).exp() - sc.exp() + 20.0 + E
}

fn cross_in_tray(x: &[f64]) -> f64 {
    let (x1, x2) = (x[0], x[1]);
    let r = (x1 * x1 + x2 * x2).sqrt();
    -0.0001 * ((x1.sin() * x2.sin() * (100.0 - r / PI).abs().exp()).abs() + 1.0).powf(0.1)
}

fn holder_table(x: &[f64]) -> f64 {
    let (x1, x2) = (x[0], x[1]);
    let r = (x1 * x1 + x2 * x2).sqrt();
    -(x1.sin() * x2.cos() * (1.0 - r / PI).abs().exp()).abs()
}

fn exponential(x: &[f64]) -> f64 {
    -(-0.5 * x.iter().map(|v| v * v).sum::<f64>()).exp()
}

const WEIERSTRASS_KMAX: i32 = 20;

fn weierstrass(x: &[f64]) -> f64 {
    let q = x.len() as f64;
    let c: f64 = (0..=WEIERSTRASS_KMAX).map(|k| 0.5f64.powi(k) * (PI * 3f64.powi(k)).cos()).sum();
    x.iter()
        .map(|v| {
            (0..=WEIERSTRASS_KMAX)
                .map(|k| 0.5f64.powi(k) * (TAU * 3f64.powi(k) * (v + 0.5)).cos())
                .sum::<f64>()
                - q * c
        })
        .sum()
}

fn deflected_corrugated_spring(x: &[f64]) -> f64 {
    let a: f64 = x.iter().map(|v| (v - 5.0).powi(2)).sum();
    -(5.0 * a.sqrt()).cos() + 0.1 * a
}

fn cosine_mixture(x: &[f64]) -> f64 {
    -0.1 * x.iter().map(|v| (5.0 * PI * v).cos()).sum::<f64>() + x.iter().map(|v| v * v).sum::<f64>()
}

fn drop_wave(x: &[f64]) -> f64 {
    let s: f64 = x.iter().map(|v| v * v).sum();
    -(1.0 + (12.0 * s.sqrt()).cos()) / (0.5 * s + 2.0)
}

fn cube(q: usize, lo: f64, hi: f64) -> Vec<[f64; 2]> {
    vec![[lo, hi]; q]
}

/// Catalog names in listing order.
pub const CATALOG: [&str; 19] = [
    "Branin01",
    "Branin02",
    "Beale",
    "Hartmann",
    "Griewank",
    "Shubert01",
    "Levy13",
    "CosineMixture",
    "DropWave",
    "DeflectedCorrugatedSpring",
    "Weierstrass",
    "CrossInTray",
    "HolderTable",
    "Ackley",
    "Ackley6",
    "Exponential",
    "CorruptedHolderTable",
    "CorruptedExponential",
    "Ackley1D",
];

/// Entries that appear in the published result tables.
pub const RESULT_BENCHMARKS: [&str; 15] = [
    "Branin01",
    "Branin02",
    "Beale",
    "Hartmann",
    "Griewank",
    "Shubert01",
    "Levy13",
    "DeflectedCorrugatedSpring",
    "Weierstrass",
    "CrossInTray",
    "HolderTable",
    "Ackley",
    "Ackley6",
    "CorruptedHolderTable",
    "CorruptedExponential",
];

const HOLDER_MIN: f64 = -19.208_502_567_767_3;
const EXPONENTIAL_MAX: f64 = -0.140_858_420_921_045;

fn normalize_name(s: &str) -> String {
    s.chars()
        .filter(|c| c.is_ascii_alphanumeric())
        .map(|c| c.to_ascii_lowercase())
        .collect()
}

fn canonical_name(name: &str) -> Option<&'static str> {
    let key = normalize_name(name);
    let alias = match key.as_str() {
        "hartmann6" => Some("Hartmann"),
        "shubert" => Some("Shubert01"),
        "levy" => Some("Levy13"),
        "ackley2" | "ackley2d" => Some("Ackley"),
        "ackley6d" => Some("Ackley6"),
        "ackley1" => Some("Ackley1D"),
        "branin" => Some("Branin01"),
        "dcs" => Some("DeflectedCorrugatedSpring"),
        "exponential8" => Some("Exponential"),
        _ => None,
    };
    alias.or_else(|| CATALOG.iter().copied().find(|n| normalize_name(n) == key))
}

/// Looks up a catalog entry by name (case- and punctuation-insensitive).
pub fn benchmark(name: &str) -> Result<Benchmark> {
    use Property::*;
    let canonical = canonical_name(name).ok_or_else(|| Error::UnknownBenchmark(name.to_string()))?;
    let b = match canonical {
        "Branin01" => Benchmark::new(
            canonical,
            vec![[-5.0, 10.0], [0.0, 15.0]],
            0.397_887_357_729_738,
            308.129_096_012_82,
            vec![None],
            branin01,
        ),
        "Branin02" => Benchmark::new(canonical, cube(2, -5.0, 15.0), 5.558_914_403_893_9, 506.98, vec![None], branin02),
        "Beale" => Benchmark::new(canonical, cube(2, -4.5, 4.5), 0.0, 181_853.613_281_25, vec![Boring], beale),
        "Hartmann" => Benchmark::new(canonical, cube(6, 0.0, 1.0), -3.322_368_011_415_51, 0.0, vec![Boring], hartmann6),
        "Griewank" => Benchmark::new(canonical, cube(2, -50.0, 20.0), 0.0, 3.19, vec![Oscillatory], griewank),
        "Shubert01" => Benchmark::new(
            canonical,
            cube(2, -10.0, 10.0),
            -186.730_908_831_024,
            210.45,
            vec![Oscillatory],
            shubert01,
        ),
        "Levy13" => Benchmark::new(canonical, cube(2, -10.0, 10.0), 0.0, 454.13, vec![Oscillatory], levy13),
        "CosineMixture" => Benchmark::new(canonical, cube(10, -1.0, 1.0), -1.0, 11.0, vec![Oscillatory], cosine_mixture),
        "DropWave" => Benchmark::new(canonical, cube(10, -2.0, 5.12), -1.0, 0.0, vec![Oscillatory], drop_wave),
        "DeflectedCorrugatedSpring" => Benchmark::new(
            canonical,
            cube(10, 0.0, 7.5),
            -1.0,
            25.87,
            vec![Oscillatory],
            deflected_corrugated_spring,
        ),
        "Weierstrass" => Benchmark::new(canonical, cube(8, -0.5, 0.2), 112.0, 144.0, vec![Complicated], weierstrass),
        "CrossInTray" => Benchmark::new(
            canonical,
            cube(2, -10.0, 10.0),
            -2.062_611_870_822_74,
            -0.26,
            vec![Complicated, Oscillatory],
            cross_in_tray,
        ),
        "HolderTable" => Benchmark::new(
            canonical,
            cube(2, -10.0, 10.0),
            HOLDER_MIN,
            0.0,
            vec![Complicated, Oscillatory],
            holder_table,
        ),
        "Ackley" => Benchmark::new(canonical, cube(2, -10.0, 30.0), 0.0, 22.27, vec![Complicated, Oscillatory], ackley),
        "Ackley6" => Benchmark::new(canonical, cube(6, -10.0, 30.0), 0.0, 22.27, vec![Complicated, Oscillatory], ackley),
        "Ackley1D" => Benchmark::new(canonical, cube(1, -10.0, 30.0), 0.0, 22.2956, vec![Complicated, Oscillatory], ackley),
        "Exponential" => Benchmark::new(canonical, cube(8, -0.7, 0.2), -1.0, EXPONENTIAL_MAX, vec![None], exponential),
        "CorruptedHolderTable" => {
            let base = benchmark("HolderTable")?;
            return Ok(corrupt_named(&base, HOLDER_MIN, 0.0, CorruptionParams::SMALL, -20.99, 3.46));
        }
        "CorruptedExponential" => {
            let base = benchmark("Exponential")?;
            return Ok(corrupt_named(&base, -1.0, EXPONENTIAL_MAX, CorruptionParams::LARGE, -0.99, -0.04));
        }
        _ => unreachable!("catalog names are exhaustive"),
    }?;
    Ok(b)
}

fn corrupt_named(
    base: &Benchmark,
    f_min: f64,
    f_max: f64,
    params: CorruptionParams,
    known_min: f64,
    known_max: f64,
) -> Benchmark {
    let range = f_max - f_min;
    let domain = base.domain.clone();
    let inner = base.evaluator.clone();
    let f = move |x: &[f64]| {
        let c = x
            .iter()
            .zip(&domain)
            .map(|(v, b)| corruption_unchecked(((v - b[0]) / (b[1] - b[0])).clamp(0.0, 1.0), &params))
            .fold(f64::NEG_INFINITY, f64::max);
        inner(x) + range * c
    };
    Benchmark {
        name: format!("Corrupted{}", base.name),
        domain: base.domain.clone(),
        known_min,
        known_max,
        properties: vec![Property::Complicated, Property::Oscillatory],
        evaluator: Arc::new(f),
    }
}

/// Every catalog entry, in listing order.
pub fn catalog() -> Vec<Benchmark> {
    CATALOG
        .iter()
        .map(|n| benchmark(n).expect("catalog entries construct"))
        .collect()
}

/// Evaluates a catalog entry by name.
pub fn eval_benchmark(name: &str, x: &[f64]) -> Result<f64> {
    benchmark(name)?.eval(x)
}
