//! `posterior-dump`: marginal predictive moments and acquisition on a 1-D grid.

use std::path::Path;

use modbo::acquisition::{AcquisitionKind, AcquisitionSpec, FittedEnsemble};
use modbo::benchmarks::{benchmark, Benchmark};
use modbo::bo::{rescale_from_unit, rescale_to_unit};
use modbo::rng::derive_seed;
use modbo::samplers::{infer_posterior, ChainConfig};
use modbo::surrogates::{Dataset, SurrogateKind};
use serde::Serialize;

use crate::{CliError, CliResult};

const DUMP_TAG: u64 = 0xd0;

#[derive(Clone, Debug, PartialEq)]
pub struct DumpRequest {
    pub benchmark: String,
    pub surrogate: SurrogateKind,
    pub sigma_h: f64,
    pub grid: usize,
    pub acquisition: AcquisitionKind,
    pub chain: ChainConfig,
    pub latent_dim: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GridRow {
    pub x: f64,
    pub mean: f64,
    pub std: f64,
    pub acquisition: f64,
}

/// Reads `x,f` rows (with a header) in the benchmark's coordinates.
pub fn read_dataset(path: &Path, bench: &Benchmark) -> CliResult<Dataset> {
    let mut r = csv::Reader::from_path(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    let mut xs = Vec::new();
    let mut fs = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let bad = |what: &str| CliError::Usage(format!("{} row {}: {what}", path.display(), i + 2));
        if rec.len() != 2 {
            return Err(bad("expected two columns x,f"));
        }
        let x: f64 = rec[0].trim().parse().map_err(|_| bad("x is not a number"))?;
        let f: f64 = rec[1].trim().parse().map_err(|_| bad("f is not a number"))?;
        xs.push(rescale_to_unit(&[x], &bench.domain).map_err(|e| bad(&e.to_string()))?);
        fs.push(f);
    }
    Dataset::new(1, xs, fs).map_err(|e| CliError::Usage(e.to_string()))
}

/// Grid rows in ascending x. Moments are those of the ensemble mixture at
/// h* = 0, on the scale of the observations.
pub fn posterior_grid(req: &DumpRequest, data: &Dataset) -> CliResult<Vec<GridRow>> {
    let bench = benchmark(&req.benchmark).map_err(|e| CliError::Usage(e.to_string()))?;
    if bench.dim() != 1 {
        return Err(CliError::Usage(format!(
            "{} is {}-dimensional; posterior-dump needs a 1-D benchmark",
            bench.name,
            bench.dim()
        )));
    }
    if req.grid < 2 {
        return Err(CliError::Usage("grid must have at least 2 points".into()));
    }
    let mut chain = req.chain.clone();
    chain.seed = derive_seed(req.chain.seed, &[DUMP_TAG]);
    let ensemble = infer_posterior(req.surrogate, data, req.sigma_h, req.latent_dim, &chain)?;
    let fitted = FittedEnsemble::new(data, &ensemble)?;
    let spec = AcquisitionSpec::for_data(req.acquisition, data)?;
    let st = data.standardization();
    let mut rows = Vec::with_capacity(req.grid);
    for i in 0..req.grid {
        let u = i as f64 / (req.grid - 1) as f64;
        let moments = fitted.moments(&[u]);
        let m = moments.len() as f64;
        let mean = moments.iter().map(|p| p.mean).sum::<f64>() / m;
        let var = moments.iter().map(|p| p.variance + (p.mean - mean).powi(2)).sum::<f64>() / m;
        rows.push(GridRow {
            x: rescale_from_unit(&[u], &bench.domain)?[0],
            mean: st.restore(mean),
            std: var.max(0.0).sqrt() * st.scale,
            acquisition: fitted.acquisition(&[u], &spec),
        });
    }
    Ok(rows)
}

pub fn write_grid<W: std::io::Write>(out: W, rows: &[GridRow]) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Grid average of |d mean / dx| by forward differences, in unit-cube x.
/// Lower means a smoother posterior mean.
pub fn mean_roughness(rows: &[GridRow]) -> f64 {
    let h = 1.0 / (rows.len() - 1) as f64;
    rows.windows(2).map(|w| ((w[1].mean - w[0].mean) / h).abs()).sum::<f64>() / (rows.len() - 1) as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn req(surrogate: SurrogateKind, sigma_h: f64) -> DumpRequest {
        DumpRequest {
            benchmark: "Ackley1D".into(),
            surrogate,
            sigma_h,
            grid: 21,
            acquisition: AcquisitionKind::Ei,
            chain: ChainConfig {
                burn_in: 100,
                thinning: 2,
                num_samples: 10,
                ..ChainConfig::desk(4)
            },
            latent_dim: 1,
        }
    }

    #[test]
    fn empty_dataset_gives_prior() {
        let rows = posterior_grid(&req(SurrogateKind::Noiseless, 0.0), &Dataset::empty(1).unwrap()).unwrap();
        assert_eq!(rows.len(), 21);
        for r in &rows {
            assert!(r.mean.abs() < 1e-12 && (r.std - 1.0).abs() < 1e-9);
        }
        assert!(rows.windows(2).all(|w| w[0].x < w[1].x));
        assert_eq!((rows[0].x, rows[20].x), (-10.0, 30.0));
    }

    #[test]
    fn rejects_multi_dim_benchmark() {
        let mut r = req(SurrogateKind::Noiseless, 0.0);
        r.benchmark = "Branin01".into();
        let e = posterior_grid(&r, &Dataset::empty(1).unwrap()).unwrap_err();
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn roughness_of_linear_mean() {
        let rows: Vec<GridRow> = (0..11)
            .map(|i| GridRow {
                x: i as f64,
                mean: 3.0 * i as f64 / 10.0,
                std: 1.0,
                acquisition: 0.0,
            })
            .collect();
        assert!((mean_roughness(&rows) - 3.0).abs() < 1e-12);
    }
}
