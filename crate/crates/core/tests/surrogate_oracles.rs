mod common;

use common::*;
use modbo::rng::seeded;
use modbo::surrogates::{
    log_joint, log_joint_grad, predict, LatentState, Parameterization, SurrogateKind, SurrogateSample,
};
use rand::Rng;

#[test]
fn predictive_matches_dense_inverse() {
    let mut rng = seeded(100);
    let mut worst: f64 = 0.0;
    for i in 0..200 {
        let kind = SurrogateKind::ALL[i % 4];
        let (data, s) = random_instance(&mut rng, kind, None);
        let (pts, diag) = oracle_training(&data, &s);
        for _ in 0..5 {
            let x: Vec<f64> = (0..data.dim()).map(|_| rng.random::<f64>()).collect();
            let m = predict(&data, &s, &x).unwrap();
            let (mean, var) = dense_predict(&pts, &diag, data.f(), s.kernel.lengthscale(), &oracle_query(&x, &s));
            worst = worst.max((m.mean - mean).abs()).max((m.variance - var).abs());
        }
    }
    assert!(worst < 1e-8, "max abs error {worst}");
}

#[test]
fn log_joint_matches_dense_evaluation() {
    let mut rng = seeded(101);
    for i in 0..200 {
        let kind = SurrogateKind::ALL[i % 4];
        let (data, s) = random_instance(&mut rng, kind, None);
        let a = log_joint(&data, &s).unwrap();
        let b = dense_log_joint(&data, &s);
        assert!((a - b).abs() < 1e-6 * b.abs().max(1.0), "{kind}: {a} vs {b}");
    }
}

#[test]
fn zero_sigma_latent_equals_noiseless() {
    let mut rng = seeded(102);
    for _ in 0..100 {
        let (data, lgp) = random_instance(&mut rng, SurrogateKind::Latent, Some(0.0));
        let gp = SurrogateSample {
            kernel: lgp.kernel,
            state: LatentState::Noiseless,
        };
        for _ in 0..5 {
            let x: Vec<f64> = (0..data.dim()).map(|_| rng.random::<f64>()).collect();
            let a = predict(&data, &lgp, &x).unwrap();
            let b = predict(&data, &gp, &x).unwrap();
            assert!((a.mean - b.mean).abs() <= 1e-10 && (a.variance - b.variance).abs() <= 1e-10);
        }
        assert_eq!(log_joint(&data, &lgp).unwrap(), log_joint(&data, &gp).unwrap());
    }
}

#[test]
fn tiny_homoscedastic_noise_approaches_noiseless() {
    let mut rng = seeded(103);
    for _ in 0..100 {
        let (data, gp) = well_separated_instance(&mut rng, SurrogateKind::Noiseless);
        let homo = SurrogateSample {
            kernel: gp.kernel,
            state: LatentState::Homoscedastic { noise_variance: 1e-12 },
        };
        for _ in 0..5 {
            let x: Vec<f64> = (0..data.dim()).map(|_| rng.random::<f64>()).collect();
            let a = predict(&data, &homo, &x).unwrap();
            let b = predict(&data, &gp, &x).unwrap();
            assert!((a.mean - b.mean).abs() <= 1e-5 && (a.variance - b.variance).abs() <= 1e-5);
        }
    }
}

#[test]
fn noise_gap_shrinks_linearly_on_ill_conditioned_data() {
    // Two nearly coincident inputs: the gap is governed by cond(K)·σ², so it
    // can exceed 1e-5 at σ² = 1e-12 but must still vanish as σ² does.
    let data = modbo::surrogates::Dataset::new(1, vec![vec![0.5067], vec![0.5039], vec![0.78]], vec![0.3, 0.1, -1.0]).unwrap();
    let gp = SurrogateSample {
        kernel: modbo::kernel::KernelParams::new(0.38).unwrap(),
        state: LatentState::Noiseless,
    };
    let gap = |v: f64| {
        let homo = SurrogateSample {
            kernel: gp.kernel,
            state: LatentState::Homoscedastic { noise_variance: v },
        };
        let a = predict(&data, &homo, &[0.2]).unwrap();
        let b = predict(&data, &gp, &[0.2]).unwrap();
        (a.mean - b.mean).abs().max((a.variance - b.variance).abs())
    };
    let (g1, g2) = (gap(1e-10), gap(1e-12));
    assert!(g2 < g1 && g2 < 0.05 * g1, "{g1} {g2}");
}

/// |analytic − numeric| ≤ 1e-4 · max(1, |numeric|) for every component.
fn check_gradients(kind: SurrogateKind, seed: u64) -> f64 {
    let mut rng = seeded(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let (data, s) = random_instance(&mut rng, kind, None);
        let p = Parameterization::for_sample(&s, data.len()).unwrap();
        let z = p.from_sample(&s).unwrap();
        let g = log_joint_grad(&data, &s).unwrap();
        let fd = fd_grad(|z| p.log_density(&data, z), &z, 1e-5);
        for (a, b) in g.iter().zip(&fd) {
            worst = worst.max((a - b).abs() / b.abs().max(1.0));
        }
    }
    worst
}

#[test]
fn gradients_match_finite_differences() {
    for (i, kind) in SurrogateKind::ALL.into_iter().enumerate() {
        let worst = check_gradients(kind, 200 + i as u64);
        assert!(worst < 1e-4, "{kind}: {worst}");
    }
}

#[test]
fn homoscedastic_noise_gradient_near_identity_kernel() {
    // Points far apart relative to the lengthscale: K ≈ (1 + σ²) I.
    let data = modbo::surrogates::Dataset::new(1, vec![vec![0.0], vec![0.5], vec![1.0]], vec![1.0, -2.0, 0.4]).unwrap();
    let s = SurrogateSample {
        kernel: modbo::kernel::KernelParams::new(0.01).unwrap(),
        state: LatentState::Homoscedastic { noise_variance: 0.3 },
    };
    let p = Parameterization::for_sample(&s, 3).unwrap();
    let z = p.from_sample(&s).unwrap();
    let g = log_joint_grad(&data, &s).unwrap();
    let fd = fd_grad(|z| p.log_density(&data, z), &z, 1e-5);
    assert!((g[1] - fd[1]).abs() < 1e-6);
    // Closed form: ½σ²(Σf²/(1+σ²)² − N/(1+σ²)) − log σ².
    let v = 1.0 + 0.3 + 3e-10;
    let ff: f64 = data.f().iter().map(|f| f * f).sum();
    let expected = 0.5 * 0.3 * (ff / (v * v) - 3.0 / v) - 0.3f64.ln();
    assert!((g[1] - expected).abs() < 1e-8);
}
