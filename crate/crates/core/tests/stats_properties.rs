use breuer_major::numeric::normal_cdf;
use breuer_major::simulate::replication_rng;
use breuer_major::stats::{bootstrap_ci, kolmogorov, quantile_sorted, tv_estimate, BinRule};
use proptest::prelude::*;
use rand::Rng;
use rand_distr::StandardNormal;

/// `Phi^{-1}` by bisection on the library CDF.
fn normal_quantile(p: f64) -> f64 {
    let (mut lo, mut hi) = (-10.0, 10.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if normal_cdf(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn kolmogorov_of_midpoint_quantiles_is_half_a_step() {
    let n = 500;
    let samples: Vec<f64> = (0..n).map(|i| normal_quantile((i as f64 + 0.5) / n as f64)).collect();
    let ks = kolmogorov(&samples).unwrap();
    assert!((ks.value - 0.5 / n as f64).abs() < 1e-9);
}

#[test]
fn tv_of_normal_samples_is_small_and_covered() {
    let mut rng = replication_rng(8, 0);
    let samples: Vec<f64> = (0..20_000).map(|_| rng.sample(StandardNormal)).collect();
    let tv = tv_estimate(&samples, BinRule::FreedmanDiaconis, 200, 9).unwrap();
    assert!(tv.value - (tv.ci_width() + tv.bias_bound) <= 0.0);
    assert!(tv.ci_low <= tv.value && tv.value <= tv.ci_high);
}

#[test]
fn tv_sees_a_shift() {
    // TV(N(1/2, 1), N(0, 1)) = 2 Phi(1/4) - 1.
    let mut rng = replication_rng(10, 0);
    let samples: Vec<f64> = (0..50_000).map(|_| 0.5 + rng.sample::<f64, _>(StandardNormal)).collect();
    let tv = tv_estimate(&samples, BinRule::FreedmanDiaconis, 200, 11).unwrap();
    let exact = 2.0 * normal_cdf(0.25) - 1.0;
    assert!(tv.ci_low - tv.bias_bound <= exact && exact <= tv.ci_high + tv.bias_bound);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn quantiles_are_monotone(mut xs in prop::collection::vec(-5.0f64..5.0, 2..100), p in 0.0f64..1.0, dp in 0.0f64..1.0) {
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let q = quantile_sorted(&xs, p);
        prop_assert!(q <= quantile_sorted(&xs, (p + dp).min(1.0)));
        prop_assert!(xs[0] <= q && q <= xs[xs.len() - 1]);
    }

    #[test]
    fn bootstrap_interval_brackets_the_mean(seed in any::<u64>()) {
        let mut rng = replication_rng(seed, 0);
        let xs: Vec<f64> = (0..400).map(|_| rng.sample(StandardNormal)).collect();
        let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
        let (lo, hi) = bootstrap_ci(mean, &xs, 300, seed).unwrap();
        prop_assert!(lo <= mean(&xs) && mean(&xs) <= hi);
    }
}
