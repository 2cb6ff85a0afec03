use modbo::benchmarks::Objective;
use modbo::bo::{run_bo, BOConfig};
use modbo::surrogates::SurrogateKind;
use modbo::Result;

struct Quadratic;

impl Objective for Quadratic {
    fn domain(&self) -> &[[f64; 2]] {
        &[[-2.0, 3.0]]
    }

    fn evaluate(&self, x: &[f64]) -> Result<f64> {
        Ok((x[0] - 0.7).powi(2) + 1.0)
    }
}

#[test]
fn one_dim_quadratic_is_solved() {
    for seed in 0..5 {
        let cfg = BOConfig::new(SurrogateKind::Noiseless, 15, seed);
        let trace = run_bo(&Quadratic, &cfg).unwrap();
        assert!(trace.is_complete());
        assert_eq!(trace.records.len(), 15);
        let best = trace
            .records
            .iter()
            .min_by(|a, b| a.f_raw.total_cmp(&b.f_raw))
            .unwrap();
        assert!((best.x_raw[0] - 0.7).abs() < 1e-2, "seed {seed}: {:?}", best.x_raw);
        assert_eq!(trace.best(), Some(best.f_raw));
    }
}

#[test]
fn best_so_far_is_running_minimum() {
    let trace = run_bo(&Quadratic, &BOConfig::new(SurrogateKind::Homoscedastic, 8, 3)).unwrap();
    let mut m = f64::INFINITY;
    for r in &trace.records {
        m = m.min(r.f_raw);
        assert_eq!(r.best_so_far, m);
    }
}
