use proptest::prelude::*;
use qfin_core::distributions::{discretize_normal, loader_circuit, DiscretizedDistribution};

fn assert_readback(d: &DiscretizedDistribution) {
    let s = loader_circuit(d).run().unwrap();
    for (a, p) in s.amplitudes().iter().zip(&d.probabilities) {
        assert!(a.im.abs() < 1e-12 && a.re >= -1e-12, "amplitude {a}");
        assert!((a.norm_sqr() - p).abs() < 1e-9, "{} vs {p}", a.norm_sqr());
    }
}

#[test]
fn normal_on_four_points_matches_density_oracle() {
    // Frozen from a reference normal density: φ(−2), φ(−2/3), φ(2/3), φ(2), renormalised.
    let want = [0.07228887523293864, 0.4277111247670614, 0.4277111247670614, 0.07228887523293864];
    let d = discretize_normal(0.0, 1.0, 2, -2.0, 2.0).unwrap();
    for (p, w) in d.probabilities.iter().zip(want) {
        assert!((p - w).abs() < 1e-14);
    }
    // Same ratios straight from exp(−z²/2).
    let ratio = (-2.0f64 * 2.0 / 2.0).exp() / (-(2.0f64 / 3.0).powi(2) / 2.0).exp();
    assert!((d.probabilities[0] / d.probabilities[1] - ratio).abs() < 1e-12);
    assert!((d.value(3) - 2.0).abs() < 1e-15 && (d.value(1) + 2.0 / 3.0).abs() < 1e-15);
    assert_readback(&d);
}

#[test]
fn shifted_and_scaled_normal() {
    let d = discretize_normal(1.0, 2.0, 3, -3.0, 5.0).unwrap();
    assert!((d.probabilities.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    assert!((d.mean() - 1.0).abs() < 1e-12);
    assert_readback(&d);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn loader_readback_fidelity(n in 1usize..=6, weights in prop::collection::vec(0.0f64..1.0, 64), zeros in prop::collection::vec(any::<bool>(), 64)) {
        let p: Vec<f64> = weights[..1 << n]
            .iter()
            .zip(&zeros)
            .map(|(w, z)| if *z { 0.0 } else { *w })
            .collect();
        prop_assume!(p.iter().sum::<f64>() > 0.0);
        let d = DiscretizedDistribution::new(n, p, (1.0, 0.0)).unwrap();
        prop_assert!((d.probabilities.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_readback(&d);
    }

    #[test]
    fn discretized_normal_sums_to_one(mean in -2.0f64..2.0, sd in 0.1f64..3.0, n in 1usize..=8, width in 0.5f64..8.0) {
        let d = discretize_normal(mean, sd, n, mean - width, mean + width).unwrap();
        prop_assert!(d.probabilities.iter().all(|p| *p >= 0.0));
        prop_assert!((d.probabilities.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}
