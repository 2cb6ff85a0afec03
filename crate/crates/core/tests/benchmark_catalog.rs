use modbo::benchmarks::{benchmark, catalog, estimate_extrema, CorruptionParams, RESULT_BENCHMARKS};

// The stored extrema are rounded published values, so sampled extrema may
// overshoot them slightly; 2% of the range is allowed.
#[test]
fn sampled_extrema_stay_inside_known_extrema() {
    for b in catalog().into_iter().filter(|b| !b.name.starts_with("Corrupted")) {
        let (lo, hi) = estimate_extrema(&b, 20_000, 7);
        let slack = 0.02 * (b.known_max - b.known_min);
        assert!(lo >= b.known_min - slack, "{}: sampled min {lo} below {}", b.name, b.known_min);
        assert!(hi <= b.known_max + slack, "{}: sampled max {hi} above {}", b.name, b.known_max);
    }
}

// Corrupted entries are bounded by base extrema ± range · amplitude bound.
#[test]
fn corrupted_values_within_amplitude_envelope() {
    for (name, base, params) in [
        ("CorruptedHolderTable", "HolderTable", CorruptionParams::SMALL),
        ("CorruptedExponential", "Exponential", CorruptionParams::LARGE),
    ] {
        let c = benchmark(name).unwrap();
        let b = benchmark(base).unwrap();
        let pad = (b.known_max - b.known_min) * params.amplitude_bound();
        let (lo, hi) = estimate_extrema(&c, 20_000, 8);
        assert!(lo >= b.known_min - pad && hi <= b.known_max + pad, "{name}: ({lo}, {hi})");
    }
}

#[test]
fn result_benchmarks_resolve_with_loose_names() {
    for name in RESULT_BENCHMARKS {
        let loose = name.to_lowercase().replace("01", "_01");
        let b = benchmark(&loose).or_else(|_| benchmark(&name.to_lowercase())).unwrap();
        assert_eq!(b.name, name);
    }
}

#[test]
fn literature_minimizers() {
    // Minimizers from the standard global-optimization test-function
    // literature, evaluated through the public lookup.
    let cases: [(&str, &[f64], f64, f64); 8] = [
        ("Branin01", &[std::f64::consts::PI, 2.275], 0.397_887, 1e-6),
        ("Beale", &[3.0, 0.5], 0.0, 1e-12),
        ("Hartmann", &[0.201_69, 0.150_011, 0.476_874, 0.275_332, 0.311_652, 0.657_3], -3.322_37, 1e-5),
        ("HolderTable", &[8.055_02, 9.664_59], -19.208_5, 1e-4),
        ("CrossInTray", &[1.349_406_6, 1.349_406_6], -2.062_61, 1e-5),
        ("DropWave", &[0.0, 0.0], -1.0, 1e-12),
        ("Levy13", &[1.0, 1.0], 0.0, 1e-12),
        ("Ackley", &[0.0, 0.0], 0.0, 1e-12),
    ];
    for (name, x, f, tol) in cases {
        let b = benchmark(name).unwrap();
        let x: Vec<f64> = if x.len() == b.dim() { x.to_vec() } else { vec![x[0]; b.dim()] };
        let v = b.eval(&x).unwrap();
        assert!((v - f).abs() < tol, "{name}: {v} vs {f}");
    }
}
