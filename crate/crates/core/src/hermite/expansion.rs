use std::fmt;

use serde::{Serialize, Serializer};

use super::poly::{factorial, hermite_series, orthonormal_values, MAX_ORDER};
use super::quadrature::GaussianRule;
use crate::error::{Error, Result};
use crate::numeric::CompensatedSum;

/// Tuning knobs for [`expand`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpansionConfig {
    /// Truncation order `L`.
    pub truncation: usize,
    /// Gauss-Hermite order for smooth functions.
    pub quad_order: usize,
    /// Relative threshold separating active coefficients from noise.
    pub rank_tol: f64,
    /// Tail mass above `tail_accept * E[phi^2]` raises the tail warning.
    pub tail_accept: f64,
}

impl Default for ExpansionConfig {
    fn default() -> Self {
        Self {
            truncation: 40,
            quad_order: 200,
            rank_tol: 1e-9,
            tail_accept: 1e-6,
        }
    }
}

/// Minimal gap between active Hermite indices at or above the rank.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sparsity {
    Finite(usize),
    Infinite,
}

impl Sparsity {
    pub fn is_at_least(self, k: usize) -> bool {
        match self {
            Sparsity::Finite(s) => s >= k,
            Sparsity::Infinite => true,
        }
    }
}

impl fmt::Display for Sparsity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sparsity::Finite(k) => write!(f, "{k}"),
            Sparsity::Infinite => write!(f, "inf"),
        }
    }
}

impl Serialize for Sparsity {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Sparsity::Finite(k) => s.serialize_u64(*k as u64),
            Sparsity::Infinite => s.serialize_str("inf"),
        }
    }
}

/// Truncated Hermite expansion `phi ~ sum_{l <= L} a_l He_l` with metadata.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HermiteExpansion {
    coeffs: Vec<f64>,
    rank: Option<usize>,
    sparsity: Sparsity,
    /// Estimated `sum_{l > L} a_l^2 l!`.
    tail_mass: f64,
    /// `sum_{1 <= l <= L} a_l^2 l!`; the constant term is kept out.
    l2_norm_sq: f64,
    /// `E[phi^2]` as integrated directly.
    second_moment: f64,
    rank_tol: f64,
    tail_warning: bool,
}

impl HermiteExpansion {
    /// Builds an expansion from explicit coefficients. `second_moment`
    /// defaults to the truncated Parseval sum (zero tail).
    pub fn from_coeffs(coeffs: Vec<f64>, second_moment: Option<f64>, rank_tol: f64) -> Self {
        let l2_norm_sq = coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(l, a)| a * a * factorial(l))
            .collect::<CompensatedSum>()
            .value();
        let a0 = coeffs.first().copied().unwrap_or(0.0);
        let second_moment = second_moment.unwrap_or(l2_norm_sq + a0 * a0);
        let tail_mass = (second_moment - a0 * a0 - l2_norm_sq).max(0.0);
        let mut e = Self {
            coeffs,
            rank: None,
            sparsity: Sparsity::Infinite,
            tail_mass,
            l2_norm_sq,
            second_moment,
            rank_tol,
            tail_warning: false,
        };
        e.refresh_structure();
        e
    }

    fn refresh_structure(&mut self) {
        let active = self.active_indices();
        self.rank = active.first().copied();
        self.sparsity = active
            .windows(2)
            .map(|w| w[1] - w[0])
            .min()
            .map_or(Sparsity::Infinite, Sparsity::Finite);
    }

    fn is_active(&self, l: usize) -> bool {
        self.l2_norm_sq > 0.0
            && self.coeffs[l].abs() * factorial(l).sqrt() > self.rank_tol * self.l2_norm_sq.sqrt()
    }

    /// Indices `l >= 1` whose normalized coefficient clears the threshold.
    pub fn active_indices(&self) -> Vec<usize> {
        (1..self.coeffs.len()).filter(|&l| self.is_active(l)).collect()
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeff(&self, l: usize) -> f64 {
        self.coeffs.get(l).copied().unwrap_or(0.0)
    }

    pub fn truncation_order(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn rank(&self) -> Option<usize> {
        self.rank
    }

    pub fn sparsity(&self) -> Sparsity {
        self.sparsity
    }

    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    pub fn l2_norm_sq(&self) -> f64 {
        self.l2_norm_sq
    }

    pub fn second_moment(&self) -> f64 {
        self.second_moment
    }

    /// `Var(phi(X)) = E[phi^2] - a_0^2`, tail included.
    pub fn variance(&self) -> f64 {
        self.l2_norm_sq + self.tail_mass
    }

    pub fn tail_warning(&self) -> bool {
        self.tail_warning
    }

    pub fn rank_tol(&self) -> f64 {
        self.rank_tol
    }

    /// Evaluates the truncated series at `x`.
    pub fn eval(&self, x: f64) -> f64 {
        hermite_series(&self.coeffs, x)
    }
}

/// Expands `phi` against the given rule: `a_l = E[phi He_l] / l!`.
pub fn expand_with_rule<F>(phi: F, rule: &GaussianRule, cfg: &ExpansionConfig) -> Result<HermiteExpansion>
where
    F: Fn(f64) -> f64,
{
    let order = cfg.truncation;
    if order == 0 || order > MAX_ORDER {
        return Err(Error::InvalidArgument(format!(
            "truncation order {order} must lie in 1..={MAX_ORDER}"
        )));
    }
    let mut projections = vec![CompensatedSum::new(); order + 1];
    let mut second = CompensatedSum::new();
    let mut h = vec![0.0; order + 1];
    for (&x, &w) in rule.nodes().iter().zip(rule.weights()) {
        if w == 0.0 {
            continue;
        }
        let v = phi(x);
        if !v.is_finite() {
            return Err(Error::NotSquareIntegrable(format!("phi({x}) = {v}")));
        }
        orthonormal_values(x, &mut h);
        for (acc, hl) in projections.iter_mut().zip(&h) {
            acc.add(w * v * hl);
        }
        second.add(w * v * v);
    }
    let second_moment = second.value();
    if !second_moment.is_finite() {
        return Err(Error::NotSquareIntegrable(format!("E[phi^2] = {second_moment}")));
    }
    let coeffs = projections
        .iter()
        .enumerate()
        .map(|(l, p)| p.value() / factorial(l).sqrt())
        .collect();
    let mut e = HermiteExpansion::from_coeffs(coeffs, Some(second_moment), cfg.rank_tol);
    e.tail_warning = e.tail_mass > cfg.tail_accept * second_moment;
    Ok(e)
}

/// Expands `phi`, integrating with Gauss-Hermite when `breakpoints` is
/// empty and with the piecewise rule otherwise.
pub fn expand<F>(phi: F, breakpoints: &[f64], cfg: &ExpansionConfig) -> Result<HermiteExpansion>
where
    F: Fn(f64) -> f64,
{
    if breakpoints.is_empty() && cfg.quad_order < 2 * cfg.truncation {
        return Err(Error::InvalidArgument(format!(
            "quadrature order {} must be at least twice the truncation order {}",
            cfg.quad_order, cfg.truncation
        )));
    }
    let rule = GaussianRule::for_breakpoints(cfg.quad_order, breakpoints)?;
    expand_with_rule(phi, &rule, cfg)
}

/// Hermite rank `d`: the smallest active index `l >= 1`.
pub fn hermite_rank(e: &HermiteExpansion) -> Result<usize> {
    e.rank().ok_or(Error::DegenerateFunction)
}

/// Minimal gap between active indices (`+inf` with a single active index).
pub fn sparsity(e: &HermiteExpansion) -> Result<Sparsity> {
    hermite_rank(e)?;
    Ok(e.sparsity())
}

/// The shift map: `sum_l a_l He_l  ->  sum_{l >= 1} a_l He_{l-1}`.
///
/// The tail estimate of the image is the input tail divided by `L + 1`,
/// which bounds `sum_{l > L} a_l^2 (l-1)!`.
pub fn shift(e: &HermiteExpansion) -> HermiteExpansion {
    let coeffs: Vec<f64> = if e.coeffs.len() <= 1 {
        vec![0.0]
    } else {
        e.coeffs[1..].to_vec()
    };
    let tail = e.tail_mass / (e.truncation_order() + 1) as f64;
    let partial = coeffs
        .iter()
        .enumerate()
        .map(|(l, a)| a * a * factorial(l))
        .sum::<f64>();
    let mut out = HermiteExpansion::from_coeffs(coeffs, Some(partial + tail), e.rank_tol);
    out.tail_warning = e.tail_warning;
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hermite::poly::hermite_eval;

    fn h(q: usize) -> impl Fn(f64) -> f64 {
        move |x| hermite_eval(q, x).unwrap()
    }

    #[test]
    fn hermite_two_has_a_single_coefficient() {
        let e = expand(h(2), &[], &ExpansionConfig::default()).unwrap();
        for (l, a) in e.coeffs().iter().enumerate() {
            let expect = if l == 2 { 1.0 } else { 0.0 };
            assert!((a - expect).abs() < 1e-10, "a_{l} = {a}");
        }
        assert_eq!(hermite_rank(&e).unwrap(), 2);
        assert_eq!(sparsity(&e).unwrap(), Sparsity::Infinite);
        assert!(!e.tail_warning());
    }

    #[test]
    fn adjacent_indices_are_one_sparse() {
        let e = HermiteExpansion::from_coeffs(vec![0.0, 1.0, 1.0], None, 1e-9);
        assert_eq!(e.rank(), Some(1));
        assert_eq!(e.sparsity(), Sparsity::Finite(1));
    }

    #[test]
    fn zero_expansion_is_degenerate() {
        let e = HermiteExpansion::from_coeffs(vec![0.0; 5], None, 1e-9);
        assert!(matches!(hermite_rank(&e), Err(Error::DegenerateFunction)));
        assert!(matches!(sparsity(&e), Err(Error::DegenerateFunction)));
        let s = shift(&e);
        assert!(s.coeffs().iter().all(|&a| a == 0.0));
    }

    #[test]
    fn shift_of_single_term() {
        let e = HermiteExpansion::from_coeffs(vec![0.0, 0.0, 0.0, 1.0], None, 1e-9);
        let s = shift(&e);
        assert_eq!(s.coeffs(), &[0.0, 0.0, 1.0]);
        assert_eq!(s.rank(), Some(2));
    }

    #[test]
    fn shift_of_rank_one_has_constant_term() {
        let e = HermiteExpansion::from_coeffs(vec![0.0, 0.5, 0.0, 0.2], None, 1e-9);
        let s = shift(&e);
        assert_eq!(s.coeff(0), 0.5);
    }

    #[test]
    fn quadrature_order_precondition() {
        let cfg = ExpansionConfig {
            quad_order: 50,
            ..ExpansionConfig::default()
        };
        assert!(matches!(expand(h(1), &[], &cfg), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn non_finite_values_are_rejected() {
        let r = expand(|x| (x * x * x).exp(), &[], &ExpansionConfig::default());
        assert!(matches!(r, Err(Error::NotSquareIntegrable(_))));
    }
}
