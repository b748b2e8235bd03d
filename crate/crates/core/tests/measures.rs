use std::f64::consts::{FRAC_PI_2, PI};

use approx::assert_relative_eq;
use cauchy_gap::measures::{normalization, omega_moment, sample, sq_norm_cdf};
use cauchy_gap::quadrature::{integrate_radial, QuadratureSpec};
use cauchy_gap::special::gauss_legendre;
use cauchy_gap::MeasureParams;
use proptest::prelude::*;

/// ∫ℝⁿ (1+|x|²)^(−β) dx by r = tan θ, on panels graded geometrically toward
/// θ = π/2 where the integrand is only Hölder continuous.
fn unnormalized_mass(n: usize, beta: f64) -> f64 {
    let sphere = [2.0, 2.0 * PI, 4.0 * PI, 2.0 * PI * PI][n - 1];
    let (x, w) = gauss_legendre(24);
    let g = |t: f64| t.sin().powi(n as i32 - 1) * t.cos().powf(2.0 * beta - n as f64 - 1.0);
    let mut edges = vec![0.0];
    for k in (1..=60).rev() {
        edges.push(FRAC_PI_2 * (1.0 - 0.5f64.powi(k)));
    }
    edges.insert(1, FRAC_PI_2 * 0.25);
    edges.push(FRAC_PI_2);
    edges.sort_by(f64::total_cmp);
    let mut total = 0.0;
    for pair in edges.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
        total += x
            .iter()
            .zip(&w)
            .map(|(xi, wi)| wi * h * g(c + h * xi))
            .sum::<f64>();
    }
    sphere * total
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn normalization_matches_direct_quadrature(n in 1usize..=4, offset in 0.5f64..19.0) {
        let beta = n as f64 / 2.0 + offset;
        prop_assume!(beta <= 20.0);
        let q = MeasureParams::new(n, beta).unwrap();
        let z = normalization(&q);
        let direct = unnormalized_mass(n, beta);
        prop_assert!((z - direct).abs() <= 1e-10 * z, "n={n} beta={beta}: {z} vs {direct}");
    }

    #[test]
    fn omega_moments_compose_and_match_quadrature(
        n in 1usize..=4,
        offset in 0.3f64..6.0,
        g1 in -0.1f64..1.5,
        g2 in -0.1f64..1.5,
    ) {
        let q = MeasureParams::new(n, n as f64 / 2.0 + offset).unwrap();
        let direct = omega_moment(g1 + g2, &q).unwrap();
        let shifted = q.with_beta(q.beta() + g1).unwrap();
        let composed = omega_moment(g1, &q).unwrap() * omega_moment(g2, &shifted).unwrap();
        prop_assert!((direct - composed).abs() <= 1e-12 * direct);

        // ∫ω^(−γ)dμ_β as a ratio of two directly integrated masses.
        let quad = unnormalized_mass(n, q.beta() + g1 + g2) / unnormalized_mass(n, q.beta());
        prop_assert!((quad - direct).abs() <= 1e-10 * direct, "{quad} vs {direct}");
    }

    #[test]
    fn sampling_is_deterministic(n in 1usize..=4, offset in 0.2f64..5.0, seed in any::<u64>()) {
        let q = MeasureParams::new(n, n as f64 / 2.0 + offset).unwrap();
        let a = sample(&q, 9000, seed).unwrap();
        let b = sample(&q, 9000, seed).unwrap();
        prop_assert_eq!(a.as_flat(), b.as_flat());
    }
}

#[test]
fn kolmogorov_smirnov_against_radial_cdf() {
    // 1% critical value of the one-sample KS statistic is 1.63/√N; the
    // 0.1% value is 1.95/√N.
    let count = 100_000;
    let critical = 1.95 / (count as f64).sqrt();
    for (n, beta, seed) in [(1, 0.8, 1), (2, 1.5, 2), (3, 4.0, 3), (4, 2.3, 4)] {
        let q = MeasureParams::new(n, beta).unwrap();
        let d = sample(&q, count, seed).unwrap().ks_sq_norm(&q);
        assert!(d < critical, "n={n} beta={beta}: D = {d}");
    }
}

#[test]
fn radial_cdf_matches_quadrature_of_density() {
    let q = MeasureParams::new(3, 2.2).unwrap();
    for s in [0.1f64, 1.0, 4.0, 25.0] {
        let spec = QuadratureSpec {
            truncation: Some(s.sqrt()),
            nodes: 64,
            panels: 4,
            ..QuadratureSpec::default()
        };
        let mass = integrate_radial(&|_| 1.0, &q, &spec).unwrap();
        assert_relative_eq!(sq_norm_cdf(s, &q), mass, max_relative = 1e-10);
    }
}

#[test]
fn sample_csv_round_trips() {
    let q = MeasureParams::new(2, 3.0).unwrap();
    let batch = sample(&q, 50, 9).unwrap();
    let mut buf = Vec::new();
    batch.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let parsed: Vec<f64> = text
        .lines()
        .skip(1)
        .flat_map(|l| {
            l.split(',')
                .map(|v| v.parse::<f64>().unwrap())
                .collect::<Vec<_>>()
        })
        .collect();
    assert_eq!(parsed, batch.as_flat());
}
