use approx::assert_relative_eq;
use breuer_major::hermite::{
    factorial, hermite_eval, product_expectation, product_formula_rank_one, shift, WeakDerivative,
};
use breuer_major::{ExpansionConfig, HermiteExpansion, SubordinatedFunction};
use proptest::prelude::*;

fn poly_spec(coeffs: &[f64]) -> String {
    let body: Vec<String> = coeffs.iter().map(|c| c.to_string()).collect();
    format!("poly:{}", body.join(","))
}

/// Centers a monomial-coefficient polynomial using E[X^k] = (k-1)!! for even k.
fn centered(mut coeffs: Vec<f64>) -> Vec<f64> {
    let mean: f64 = coeffs
        .iter()
        .enumerate()
        .filter(|(k, _)| k % 2 == 0)
        .map(|(k, c)| c * (1..k).step_by(2).map(|j| j as f64).product::<f64>())
        .sum();
    coeffs[0] -= mean;
    coeffs
}

#[test]
fn hermite_recurrence_and_parity() {
    for p in 0..=12 {
        for x in [-2.5, -0.3, 0.0, 1.1, 3.7] {
            let v = hermite_eval(p, x).unwrap();
            assert_relative_eq!(v, (-1f64).powi(p as i32) * hermite_eval(p, -x).unwrap(), max_relative = 1e-14);
            if p >= 1 {
                let next = x * v - p as f64 * hermite_eval(p - 1, x).unwrap();
                assert_relative_eq!(hermite_eval(p + 1, x).unwrap(), next, epsilon = 1e-9, max_relative = 1e-12);
            }
        }
    }
}

#[test]
fn product_formula_reproduces_pointwise_products() {
    // He_p(x) He_q(x) = sum_r r! C(p,r) C(q,r) He_{p+q-2r}(x) at rho = 1.
    for p in 0..=6 {
        for q in 0..=6 {
            let terms = product_formula_rank_one(p, q, 1.0).unwrap();
            for x in [-1.7, 0.4, 2.2] {
                let lhs = hermite_eval(p, x).unwrap() * hermite_eval(q, x).unwrap();
                let rhs: f64 = terms.iter().map(|t| t.coefficient * hermite_eval(t.order, x).unwrap()).sum();
                assert_relative_eq!(lhs, rhs, epsilon = 1e-9, max_relative = 1e-11);
            }
        }
    }
}

#[test]
fn shift_lowers_every_index() {
    let e = HermiteExpansion::from_coeffs(vec![0.0, 0.0, 0.5, 0.0, -0.25], None, 1e-12);
    let s = shift(&e);
    assert_eq!(s.coeffs()[..4], [0.0, 0.5, 0.0, -0.25]);
    assert_eq!(s.rank(), Some(1));
}

#[test]
fn user_function_matches_its_catalog_twin() {
    let cfg = ExpansionConfig::default();
    let twin = SubordinatedFunction::from_catalog("abs_centered", &cfg).unwrap();
    let c = (2.0 / std::f64::consts::PI).sqrt();
    let own = SubordinatedFunction::new(
        "abs",
        move |x: f64| x.abs() - c,
        WeakDerivative::Exact(std::sync::Arc::new(|x: f64| x.signum())),
        vec![0.0],
        &cfg,
    )
    .unwrap();
    for (a, b) in own.expansion().coeffs().iter().zip(twin.expansion().coeffs()) {
        assert!((a - b).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn expectation_is_diagonal(p in 0usize..8, q in 0usize..8, rho in -1.0f64..1.0) {
        let e = product_expectation(p, q, rho).unwrap();
        let expected = if p == q { factorial(p) * rho.powi(p as i32) } else { 0.0 };
        prop_assert!((e - expected).abs() <= 1e-10 * factorial(p.max(q)));
    }

    #[test]
    fn reflection_flips_odd_coefficients(raw in prop::collection::vec(-2.0f64..2.0, 2..6)) {
        let cfg = ExpansionConfig::default();
        let coeffs = centered(raw);
        let reflected: Vec<f64> = coeffs.iter().enumerate().map(|(k, c)| if k % 2 == 1 { -c } else { *c }).collect();
        let f = SubordinatedFunction::from_catalog(&poly_spec(&coeffs), &cfg).unwrap();
        let g = SubordinatedFunction::from_catalog(&poly_spec(&reflected), &cfg).unwrap();
        for (l, (a, b)) in f.expansion().coeffs().iter().zip(g.expansion().coeffs()).enumerate() {
            let sign = if l % 2 == 1 { -1.0 } else { 1.0 };
            prop_assert!((a - sign * b).abs() <= 1e-9 * (1.0 + a.abs()));
        }
        prop_assert_eq!(f.expansion().rank(), g.expansion().rank());
    }

    #[test]
    fn adding_a_higher_chaos_keeps_the_rank(p in 1usize..5, extra in 1usize..4, w in 0.1f64..3.0) {
        let mut coeffs = vec![0.0; p + extra + 1];
        coeffs[p] = 1.0;
        let base = HermiteExpansion::from_coeffs(coeffs.clone(), None, 1e-12);
        coeffs[p + extra] = w;
        let more = HermiteExpansion::from_coeffs(coeffs, None, 1e-12);
        prop_assert_eq!(base.rank(), Some(p));
        prop_assert_eq!(more.rank(), Some(p));
    }
}
