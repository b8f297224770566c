mod common;

use deconwave::estimators::{coefficient_noise_variance, empirical_alpha, empirical_beta};
use deconwave::meyer::{coefficient, max_support_freq, AtomKind};
use deconwave::model::{simulate_replication, ChannelSet};
use deconwave::signals::TestFunction;

const REPLICATIONS: u64 = 20_000;

fn draws(kind: AtomKind, j: u32, k: u64, d: u32, channels: &ChannelSet, eps: f64, seed: u64) -> (Vec<f64>, f64, f64) {
    let f_hat = TestFunction::Parabolas.fourier(max_support_freq(kind, j));
    let truth = coefficient(&f_hat, j, k, kind, d);
    assert!(truth.im.abs() < 1e-12 * truth.norm().max(1.0));
    let var = coefficient_noise_variance(channels, eps, j, k, kind, d).unwrap();
    let xs = (0..REPLICATIONS)
        .map(|r| {
            let obs = simulate_replication(&f_hat, channels, eps, seed, r).unwrap();
            let c = match kind {
                AtomKind::Father => empirical_alpha(&obs, channels, j, k, d).unwrap(),
                AtomKind::Mother => empirical_beta(&obs, channels, j, k, d).unwrap(),
            };
            assert!(c.im.abs() < 1e-9 * c.norm().max(1.0), "estimator of a real coefficient is real");
            c.re
        })
        .collect();
    (xs, truth.re, var)
}

fn check(xs: &[f64], truth: f64, var: f64) {
    let (mean, sample_var, skew, kurt) = common::moments(xs);
    let se = (var / xs.len() as f64).sqrt();
    assert!((mean - truth).abs() < 4.0 * se, "mean {mean} vs {truth} (se {se})");
    assert!((sample_var / var - 1.0).abs() < 0.05, "variance {sample_var} vs {var}");
    assert!(skew.abs() < 0.05, "skewness {skew}");
    assert!(kurt.abs() < 0.1, "excess kurtosis {kurt}");
}

#[test]
fn detail_coefficient_of_first_derivative_is_gaussian() {
    let channels = ChannelSet::laplacian_sigmas(&[0.3, 0.8, 1.5]).unwrap();
    let (xs, truth, var) = draws(AtomKind::Mother, 3, 2, 1, &channels, 0.05, 17);
    check(&xs, truth, var);
}

#[test]
fn approximation_coefficient_is_gaussian() {
    let channels = ChannelSet::laplacian_sigmas(&[0.5, 2.0]).unwrap();
    let (xs, truth, var) = draws(AtomKind::Father, 2, 1, 0, &channels, 0.2, 5);
    check(&xs, truth, var);
}

#[test]
fn variance_shrinks_like_inverse_channel_count() {
    // n identical channels: the variance is exactly 1/n that of one channel
    let one = ChannelSet::laplacian_sigmas(&[0.7]).unwrap();
    let many = ChannelSet::laplacian_sigmas(&[0.7; 6]).unwrap();
    for d in 0..3 {
        let a = coefficient_noise_variance(&one, 0.1, 4, 3, AtomKind::Mother, d).unwrap();
        let b = coefficient_noise_variance(&many, 0.1, 4, 3, AtomKind::Mother, d).unwrap();
        assert!((a / b - 6.0).abs() < 1e-12, "d={d}: ratio {}", a / b);
    }
}
