//! Probabilists' Hermite polynomials and related combinatorics.

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Largest order accepted by the public evaluators.
pub const MAX_ORDER: usize = 64;

/// Evaluates `He_order(x)` by the three-term recurrence
/// `He_{l+1}(x) = x He_l(x) - l He_{l-1}(x)`.
pub fn hermite_eval(order: usize, x: f64) -> Result<f64> {
    if order > MAX_ORDER {
        return Err(Error::OrderOverflow {
            order,
            max: MAX_ORDER,
        });
    }
    let (mut prev, mut cur) = (1.0, x);
    if order == 0 {
        return Ok(prev);
    }
    for l in 1..order {
        let next = x * cur - l as f64 * prev;
        prev = cur;
        cur = next;
    }
    Ok(cur)
}

/// Fills `out[l] = He_l(x)` for `l = 0..out.len()`.
#[cfg(test)]
fn hermite_values(x: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    out[0] = 1.0;
    if out.len() > 1 {
        out[1] = x;
    }
    for l in 1..out.len().saturating_sub(1) {
        out[l + 1] = x * out[l] - l as f64 * out[l - 1];
    }
}

/// Fills `out[l] = He_l(x) / sqrt(l!)`, the orthonormal Hermite functions
/// under the standard Gaussian measure. Stable for orders in the hundreds.
pub(crate) fn orthonormal_values(x: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    out[0] = 1.0;
    if out.len() > 1 {
        out[1] = x;
    }
    for l in 1..out.len().saturating_sub(1) {
        let lf = l as f64;
        out[l + 1] = (x * out[l] - lf.sqrt() * out[l - 1]) / (lf + 1.0).sqrt();
    }
}

/// Evaluates `sum_l coeffs[l] He_l(x)` without allocating.
pub(crate) fn hermite_series(coeffs: &[f64], x: f64) -> f64 {
    match coeffs.len() {
        0 => 0.0,
        1 => coeffs[0],
        _ => {
            let (mut prev, mut cur) = (1.0, x);
            let mut acc = coeffs[0] + coeffs[1] * x;
            for (l, &c) in coeffs.iter().enumerate().skip(2) {
                let next = x * cur - (l - 1) as f64 * prev;
                prev = cur;
                cur = next;
                acc += c * cur;
            }
            acc
        }
    }
}

/// `n!`, exact in integer arithmetic up to 20 and through the log-gamma
/// function above.
pub fn factorial(n: usize) -> f64 {
    if n <= 20 {
        (1..=n as u64).product::<u64>() as f64
    } else {
        ln_factorial(n).exp()
    }
}

pub fn ln_factorial(n: usize) -> f64 {
    if n <= 20 {
        ((1..=n as u64).product::<u64>() as f64).ln()
    } else {
        ln_gamma(n as f64 + 1.0)
    }
}

pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc.round()
}

/// One chaos component of a product of two Hermite polynomials in
/// correlated unit-variance Gaussians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChaosTerm {
    pub order: usize,
    pub coefficient: f64,
}

/// Chaos decomposition of `H_p(W(h)) H_q(W(g))` for unit vectors with
/// `<h, g> = rho`.
///
/// Returns one term per contraction index `r = 0..=min(p, q)`, in that order:
/// the order is `p + q - 2r` and the coefficient `r! C(p,r) C(q,r) rho^r`
/// multiplies `I_{p+q-2r}(h^{p-r} (x) g^{q-r})` (symmetrized). The only
/// term with order zero is the expectation `p! rho^p`, present iff `p == q`.
pub fn product_formula_rank_one(p: usize, q: usize, rho: f64) -> Result<Vec<ChaosTerm>> {
    if p > MAX_ORDER || q > MAX_ORDER {
        return Err(Error::OrderOverflow {
            order: p.max(q),
            max: MAX_ORDER,
        });
    }
    if !(-1.0..=1.0).contains(&rho) {
        return Err(Error::InvalidArgument(format!(
            "correlation {rho} outside [-1, 1]"
        )));
    }
    Ok((0..=p.min(q))
        .map(|r| ChaosTerm {
            order: p + q - 2 * r,
            coefficient: factorial(r) * binomial(p, r) * binomial(q, r) * rho.powi(r as i32),
        })
        .collect())
}

/// The expectation `E[H_p(X) H_q(Y)]` read off the product formula.
pub fn product_expectation(p: usize, q: usize, rho: f64) -> Result<f64> {
    Ok(product_formula_rank_one(p, q, rho)?
        .into_iter()
        .find(|t| t.order == 0)
        .map_or(0.0, |t| t.coefficient))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn low_orders() {
        assert_eq!(hermite_eval(0, 3.7).unwrap(), 1.0);
        assert_eq!(hermite_eval(2, 0.0).unwrap(), -1.0);
        // x^3 - 3x at 2
        assert_eq!(hermite_eval(3, 2.0).unwrap(), 2.0);
        // x^4 - 6x^2 + 3 at 1.5
        assert!((hermite_eval(4, 1.5).unwrap() - (5.0625 - 13.5 + 3.0)).abs() < 1e-14);
    }

    #[test]
    fn order_overflow_is_an_error() {
        assert!(matches!(
            hermite_eval(MAX_ORDER + 1, 0.3),
            Err(Error::OrderOverflow { .. })
        ));
        assert!(hermite_eval(MAX_ORDER, 0.3).is_ok());
    }

    #[test]
    fn series_matches_pointwise_sum() {
        let coeffs = [0.1, -0.4, 0.25, 0.0, 0.03, -0.002];
        for &x in &[-2.5, -0.3, 0.0, 1.1, 3.9] {
            let direct: f64 = coeffs
                .iter()
                .enumerate()
                .map(|(l, c)| c * hermite_eval(l, x).unwrap())
                .sum();
            assert!((hermite_series(&coeffs, x) - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn orthonormal_values_are_scaled_hermite() {
        let mut he = [0.0; 30];
        let mut on = [0.0; 30];
        hermite_values(1.7, &mut he);
        orthonormal_values(1.7, &mut on);
        for l in 0..30 {
            let expect = he[l] / factorial(l).sqrt();
            assert!((on[l] - expect).abs() <= 1e-12 * expect.abs().max(1.0));
        }
    }

    #[test]
    fn factorial_switches_to_log_space_smoothly() {
        assert_eq!(factorial(0), 1.0);
        assert_eq!(factorial(20), 2432902008176640000.0);
        let f21 = factorial(21);
        assert!((f21 / (21.0 * factorial(20)) - 1.0).abs() < 1e-13);
        assert!(factorial(64).is_finite());
    }

    #[test]
    fn product_formula_small_cases() {
        let terms = product_formula_rank_one(1, 1, 0.3).unwrap();
        assert_eq!(terms.len(), 2);
        assert_eq!(terms[0].order, 2);
        assert_eq!(terms[0].coefficient, 1.0);
        assert_eq!(terms[1].order, 0);
        assert!((terms[1].coefficient - 0.3).abs() < 1e-16);

        assert_eq!(product_expectation(1, 2, 0.7).unwrap(), 0.0);
        assert!((product_expectation(2, 2, 0.5).unwrap() - 0.5).abs() < 1e-15);
    }
}
