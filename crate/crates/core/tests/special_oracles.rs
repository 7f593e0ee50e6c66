mod common;

use abslope::rng;
use abslope::sampler::{gamma_inclusion_prob, sample_theta, sample_truncated_gamma};
use abslope::slobe::{expected_theta, truncated_gamma_mean};
use abslope::special::{gamma_p, gamma_q, normal_cdf, normal_pdf, normal_quantile, UnitTruncatedGamma};
use abslope::{bh_lambda, LambdaSequence};
use common::truncated_gamma_mean_quad;
use proptest::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::gamma::gamma_lr;

fn quantile_grid() -> Vec<f64> {
    let mut u: Vec<f64> = (1..10_000).map(|k| k as f64 / 10_000.0).collect();
    u.extend((1..=300).map(|e| 10f64.powi(-e)));
    u.extend((1..=15).map(|e| 1.0 - 10f64.powi(-e)));
    u
}

#[test]
fn normal_quantile_matches_reference() {
    let reference = Normal::new(0.0, 1.0).unwrap();
    for u in quantile_grid() {
        let got = normal_quantile(u).unwrap();
        let want = reference.inverse_cdf(u);
        assert!((got - want).abs() < 1e-9, "u={u:e}: {got} vs {want}");
    }
}

#[test]
fn normal_quantile_inverts_cdf() {
    for k in 0..=1600 {
        let x = -8.0 + k as f64 * 0.01;
        // for x > 0, Φ(x) is rounded near 1 with absolute error up to ε/2,
        // which moves the quantile by about ε/(2φ(x))
        let slack = if x > 0.0 { f64::EPSILON / (2.0 * normal_pdf(x)) } else { 0.0 };
        let err = (normal_quantile(normal_cdf(x)).unwrap() - x).abs();
        assert!(err < 1e-9 + slack, "x={x}: {err}");
    }
}

#[test]
fn normal_quantile_rejects_endpoints() {
    assert!(normal_quantile(0.0).is_err());
    assert!(normal_quantile(1.0).is_err());
    assert!(normal_quantile(f64::NAN).is_err());
}

#[test]
fn incomplete_gamma_matches_reference() {
    let shapes = [0.1, 0.5, 1.0, 1.5, 2.0, 3.0, 5.0, 7.5, 10.0, 20.0, 50.0, 100.0, 250.0];
    for &a in &shapes {
        assert_eq!(gamma_p(a, 0.0).unwrap(), 0.0);
        for k in 1..=2000 {
            let x = k as f64 * 0.15;
            let want = gamma_lr(a, x);
            let p = gamma_p(a, x).unwrap();
            let q = gamma_q(a, x).unwrap();
            assert!((p - want).abs() < 1e-9, "P({a}, {x}): {p} vs {want}");
            assert!((q - (1.0 - want)).abs() < 1e-9, "Q({a}, {x})");
        }
    }
}

#[test]
fn incomplete_gamma_rejects_bad_shape() {
    assert!(gamma_p(0.0, 1.0).is_err());
    assert!(gamma_p(1.0, -1.0).is_err());
}

#[test]
fn expected_c_matches_quadrature() {
    for shape in 1..=10 {
        for rate in [0.0, 0.1, 1.0, 5.0, 50.0] {
            let got = truncated_gamma_mean(shape as f64, rate).unwrap();
            let want = truncated_gamma_mean_quad(shape as f64, rate);
            assert!((got - want).abs() < 1e-9, "shape={shape} rate={rate}: {got} vs {want}");
            assert!(got > 0.0 && got < 1.0);
        }
    }
}

#[test]
fn truncated_gamma_mean_limits() {
    assert!((truncated_gamma_mean(1.0, 0.0).unwrap() - 0.5).abs() < 1e-15);
    assert!((truncated_gamma_mean(2.0, 0.0).unwrap() - 2.0 / 3.0).abs() < 1e-15);
}

#[test]
fn truncated_gamma_draws_have_the_right_mean() {
    // covers the rejection path (mass on [0,1] near one) and the inverse-cdf path
    for (shape, rate) in [(1.0, 0.0), (3.0, 5.0), (2.0, 40.0), (30.0, 2.0), (12.0, 60.0)] {
        let law = UnitTruncatedGamma::new(shape, rate).unwrap();
        let mean = law.mean();
        let second = truncated_gamma_mean_quad(shape + 1.0, rate) * mean;
        let sd = (second - mean * mean).sqrt();
        let mut r = rng::stream(31, &[shape.to_bits(), rate.to_bits()]);
        let n = 100_000;
        let draws: Vec<f64> = (0..n).map(|_| sample_truncated_gamma(shape, rate, &mut r).unwrap()).collect();
        assert!(draws.iter().all(|d| (0.0..=1.0).contains(d)));
        let m = draws.iter().sum::<f64>() / n as f64;
        assert!((m - mean).abs() < 3.0 * sd / (n as f64).sqrt(), "shape={shape} rate={rate}: {m} vs {mean}");
    }
}

#[test]
fn inclusion_probability_closed_form() {
    // θ=0.1, c=0.5, λ|β|/σ = 4
    let got = gamma_inclusion_prob(2.0, 2.0, 1.0, 0.5, 0.1);
    let want = 0.05 * (-2.0f64).exp() / (0.9 * (-4.0f64).exp() + 0.05 * (-2.0f64).exp());
    assert!((got - want).abs() < 1e-14);
    assert!((got - 0.2910).abs() < 1e-4);
}

#[test]
fn inclusion_probability_is_stable_in_the_tails() {
    let p = gamma_inclusion_prob(1e6, 3.0, 1e-3, 0.01, 0.1);
    assert!(p > 0.0 && p <= 1.0);
    let q = gamma_inclusion_prob(0.0, 3.0, 1.0, 1e-300, 0.5);
    assert!(q > 0.0 && q < 1e-200);
}

#[test]
fn theta_draws_follow_the_beta_posterior() {
    let gamma = vec![1.0, 0.0, 1.0, 0.0, 0.0];
    let (a, b): (f64, f64) = (2.0, 3.0);
    let (al, be) = (a + 2.0, b + 3.0);
    let mean = al / (al + be);
    let sd = (al * be / ((al + be).powi(2) * (al + be + 1.0))).sqrt();
    let mut r = rng::stream(32, &[]);
    let n = 100_000;
    let m = (0..n).map(|_| sample_theta(&gamma, a, b, &mut r).unwrap()).sum::<f64>() / n as f64;
    assert!((m - mean).abs() < 3.0 * sd / (n as f64).sqrt());
    assert!((expected_theta(&gamma, a, b, 5) - (a + 2.0) / (a + b + 5.0)).abs() < 1e-15);
}

#[test]
fn bh_sequence_values() {
    let l = bh_lambda(100, 0.1).unwrap();
    assert!((l.as_slice()[0] - 3.2905).abs() < 1e-4);
    let reference = Normal::new(0.0, 1.0).unwrap();
    for (j, v) in l.as_slice().iter().enumerate() {
        let want = reference.inverse_cdf(1.0 - (j + 1) as f64 * 0.1 / 200.0);
        assert!((v - want).abs() < 1e-9);
    }
    assert!(bh_lambda(10, 0.0).is_err());
    assert!(bh_lambda(10, 1.0).is_err());
    assert!(bh_lambda(0, 0.1).is_err());
}

#[test]
fn lambda_sequence_validation() {
    assert!(LambdaSequence::new(vec![1.0, 2.0]).is_err());
    assert!(LambdaSequence::new(vec![1.0, -0.5]).is_err());
    assert!(LambdaSequence::new(vec![f64::NAN]).is_err());
    assert!(LambdaSequence::new(vec![2.0, 2.0, 0.0]).is_ok());
}

proptest! {
    #[test]
    fn bh_sequence_is_strictly_decreasing(p in 2usize..300, q in 0.001..0.999f64) {
        let l = bh_lambda(p, q).unwrap();
        prop_assert!(l.as_slice().windows(2).all(|w| w[0] > w[1]));
    }

    #[test]
    fn truncated_gamma_quantile_inverts_cdf(shape in 1.0..60.0f64, rate in 0.0..80.0f64, u in 0.001..0.999f64) {
        let law = UnitTruncatedGamma::new(shape, rate).unwrap();
        let x = law.quantile(u);
        prop_assert!((0.0..=1.0).contains(&x));
        prop_assert!((law.cdf(x) - u).abs() < 1e-9);
    }

    #[test]
    fn truncated_gamma_mean_is_inside_unit_interval(shape in 1.0..500.0f64, rate in 0.0..1000.0f64) {
        let m = truncated_gamma_mean(shape, rate).unwrap();
        prop_assert!(m > 0.0 && m < 1.0);
    }

    #[test]
    fn inclusion_probability_bounds(beta in -20.0..20.0f64, pen in 0.0..5.0f64, sigma in 0.01..5.0f64,
                                    c in 0.001..1.0f64, theta in 0.001..0.999f64) {
        let p = gamma_inclusion_prob(beta, pen, sigma, c, theta);
        prop_assert!(p > 0.0 && p < 1.0);
        let flat = gamma_inclusion_prob(beta, pen, sigma, 1.0, theta);
        prop_assert!((flat - theta).abs() < 1e-12);
    }
}
