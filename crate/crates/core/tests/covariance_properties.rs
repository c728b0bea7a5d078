use breuer_major::bounds::{
    convolution_envelope_rank1, convolution_envelope_rank2, msg_sum_rank1, msg_sum_rank2, SumMode,
};
use breuer_major::covariance::{lb_sum, sigma_n, toeplitz_dense, validate_psd};
use breuer_major::simulate::{toeplitz_apply_dense, ToeplitzOperator};
use breuer_major::{CovarianceModel, ExpansionConfig, SubordinatedFunction};
use proptest::prelude::*;

fn models() -> Vec<CovarianceModel> {
    ["white", "exp:0.5", "exp:0.9", "pow:0.8", "pow:0.3", "fgn:0.7", "fgn:0.3"]
        .iter()
        .map(|s| CovarianceModel::parse(s).unwrap())
        .collect()
}

#[test]
fn sigma_n_of_h2_matches_double_sum() {
    // Var(sum H2(X_k)) = 2 sum_{i,j} rho(i-j)^2.
    let f = SubordinatedFunction::from_catalog("hermite:2", &ExpansionConfig::default()).unwrap();
    for m in models() {
        for n in [1, 7, 64] {
            let mut direct = 0.0;
            for i in 0..n as i64 {
                for j in 0..n as i64 {
                    direct += 2.0 * m.rho(i - j).powi(2);
                }
            }
            let s = sigma_n(f.expansion(), &m, n).unwrap();
            assert!((s - direct / n as f64).abs() < 1e-12 * direct.max(1.0), "{m:?} n={n}");
        }
    }
}

#[test]
fn catalog_models_are_positive_definite() {
    for m in models() {
        assert!(validate_psd(&m, 128).unwrap(), "{m:?}");
        let t = toeplitz_dense(&m, 3);
        assert_eq!(t[(0, 2)], m.rho(2));
    }
}

#[test]
fn exact_sums_sit_below_their_envelopes() {
    for m in models() {
        for n in [2, 17, 256] {
            let r1 = msg_sum_rank1(&m, n, SumMode::Fast).unwrap();
            let r2 = msg_sum_rank2(&m, n, SumMode::Fast).unwrap();
            assert!(r1 <= convolution_envelope_rank1(&m, n).unwrap() * (1.0 + 1e-12));
            assert!(r2 <= convolution_envelope_rank2(&m, n).unwrap() * (1.0 + 1e-12));
            assert!(r2 <= r1 * (1.0 + 1e-12));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn toeplitz_fft_matches_dense(
        lags in prop::collection::vec(-1.0f64..1.0, 1..200),
        seed in any::<u64>(),
    ) {
        let n = lags.len();
        let x: Vec<f64> = (0..n).map(|i| ((seed.wrapping_add(i as u64) % 1000) as f64 / 500.0) - 1.0).collect();
        let fast = ToeplitzOperator::new(&lags).apply(&x);
        let dense = toeplitz_apply_dense(&lags, &x);
        let scale: f64 = lags.iter().map(|v| v.abs()).sum::<f64>().max(1.0);
        for (a, b) in fast.iter().zip(&dense) {
            prop_assert!((a - b).abs() <= 1e-12 * scale * n as f64);
        }
    }

    #[test]
    fn lb_sum_grows_with_n_and_shrinks_with_b(
        model_index in 0usize..7,
        n in 1usize..3000,
        b in 1.0f64..2.0,
        db in 0.0f64..1.0,
    ) {
        let m = &models()[model_index];
        let here = lb_sum(m, n, b).unwrap();
        prop_assert!(lb_sum(m, n + 1, b).unwrap() >= here);
        prop_assert!(lb_sum(m, n, (b + db).min(2.0)).unwrap() <= here * (1.0 + 1e-12));
        prop_assert!(here >= 1.0);
    }
}
