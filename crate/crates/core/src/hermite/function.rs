use std::fmt;
use std::sync::{Arc, OnceLock};

use super::expansion::{expand, shift, ExpansionConfig, HermiteExpansion};
use super::mehler::{MehlerRules, Phi1Table};
use super::poly::hermite_eval;
use super::quadrature::GaussianRule;
use crate::error::{Error, Result};

type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Step of the central-difference fallback for the weak derivative.
pub const FD_STEP: f64 = 1e-6;

/// Absolute tolerance on `E[phi(X)]`, scaled by `max(1, sd(phi))`.
pub const CENTERING_TOL: f64 = 1e-8;

/// How `phi'` is obtained.
#[derive(Clone)]
pub enum WeakDerivative {
    /// Caller-supplied `phi'`, any version equal almost everywhere.
    Exact(RealFn),
    /// Central finite difference with step [`FD_STEP`]. Wrong at isolated
    /// kinks, which is harmless under Gaussian-a.e. semantics.
    FiniteDifference,
    /// `phi` has a jump; its distributional derivative is not a function.
    Singular,
}

impl fmt::Debug for WeakDerivative {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WeakDerivative::Exact(_) => f.write_str("Exact"),
            WeakDerivative::FiniteDifference => f.write_str("FiniteDifference"),
            WeakDerivative::Singular => f.write_str("Singular"),
        }
    }
}

/// A centered `phi` in `L^2(gamma)` with its derivative and expansion.
#[derive(Clone)]
pub struct SubordinatedFunction {
    label: String,
    eval: RealFn,
    derivative: WeakDerivative,
    breakpoints: Vec<f64>,
    expansion: HermiteExpansion,
    shifted: HermiteExpansion,
    quad_order: usize,
    phi1_table: Arc<OnceLock<Option<Phi1Table>>>,
}

impl fmt::Debug for SubordinatedFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SubordinatedFunction")
            .field("label", &self.label)
            .field("derivative", &self.derivative)
            .field("breakpoints", &self.breakpoints)
            .field("expansion", &self.expansion)
            .finish()
    }
}

impl SubordinatedFunction {
    /// Wraps `phi`, expands it and checks that it is centered.
    ///
    /// `breakpoints` lists the points where `phi` is not smooth; quadrature
    /// panels are split there.
    pub fn new(
        label: impl Into<String>,
        eval: impl Fn(f64) -> f64 + Send + Sync + 'static,
        derivative: WeakDerivative,
        breakpoints: Vec<f64>,
        cfg: &ExpansionConfig,
    ) -> Result<Self> {
        let eval: RealFn = Arc::new(eval);
        let expansion = expand(|x| eval(x), &breakpoints, cfg)?;
        let mean = expansion.coeff(0);
        let tol = CENTERING_TOL * expansion.variance().sqrt().max(1.0);
        if mean.abs() > tol {
            return Err(Error::NotCentered { mean });
        }
        let shifted = shift(&expansion);
        Ok(Self {
            label: label.into(),
            eval,
            derivative,
            breakpoints,
            expansion,
            shifted,
            quad_order: cfg.quad_order,
            phi1_table: Arc::new(OnceLock::new()),
        })
    }

    /// Looks up a catalog entry: `hermite:q`, `abs_centered`, `sign`,
    /// `poly:c0,c1,...` (monomial coefficients) or `cos_centered`.
    pub fn from_catalog(spec: &str, cfg: &ExpansionConfig) -> Result<Self> {
        let spec = spec.trim();
        let (name, arg) = match spec.split_once(':') {
            Some((n, a)) => (n.trim(), Some(a.trim())),
            None => (spec, None),
        };
        match (name, arg) {
            ("hermite", Some(q)) => {
                let q: usize = q
                    .parse()
                    .map_err(|_| Error::InvalidArgument(format!("bad Hermite order `{q}`")))?;
                if q == 0 {
                    return Err(Error::InvalidArgument(
                        "hermite:0 is constant and cannot be centered".into(),
                    ));
                }
                hermite_eval(q, 0.0)?;
                Self::new(
                    spec,
                    move |x| hermite_eval(q, x).unwrap(),
                    WeakDerivative::Exact(Arc::new(move |x| q as f64 * hermite_eval(q - 1, x).unwrap())),
                    Vec::new(),
                    cfg,
                )
            }
            ("abs_centered", None) => {
                let m = (2.0 / std::f64::consts::PI).sqrt();
                Self::new(
                    spec,
                    move |x| x.abs() - m,
                    WeakDerivative::Exact(Arc::new(sign)),
                    vec![0.0],
                    cfg,
                )
            }
            ("sign", None) => Self::new(spec, sign, WeakDerivative::Singular, vec![0.0], cfg),
            ("cos_centered", None) => {
                let m = (-0.5f64).exp();
                Self::new(
                    spec,
                    move |x| x.cos() - m,
                    WeakDerivative::Exact(Arc::new(|x: f64| -x.sin())),
                    Vec::new(),
                    cfg,
                )
            }
            ("poly", Some(list)) => {
                let coeffs = list
                    .split(',')
                    .map(|c| {
                        c.trim()
                            .parse::<f64>()
                            .map_err(|_| Error::InvalidArgument(format!("bad coefficient `{c}`")))
                    })
                    .collect::<Result<Vec<f64>>>()?;
                let deriv: Vec<f64> = coeffs
                    .iter()
                    .enumerate()
                    .skip(1)
                    .map(|(i, c)| i as f64 * c)
                    .collect();
                Self::new(
                    spec,
                    move |x| horner(&coeffs, x),
                    WeakDerivative::Exact(Arc::new(move |x| horner(&deriv, x))),
                    Vec::new(),
                    cfg,
                )
            }
            _ => Err(Error::InvalidArgument(format!("unknown function `{spec}`"))),
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.eval)(x)
    }

    /// `phi'(x)` as declared; `None` when `phi` has a jump.
    pub fn derivative(&self, x: f64) -> Option<f64> {
        match &self.derivative {
            WeakDerivative::Exact(d) => Some(d(x)),
            WeakDerivative::FiniteDifference => {
                Some(((self.eval)(x + FD_STEP) - (self.eval)(x - FD_STEP)) / (2.0 * FD_STEP))
            }
            WeakDerivative::Singular => None,
        }
    }

    pub fn has_weak_derivative(&self) -> bool {
        !matches!(self.derivative, WeakDerivative::Singular)
    }

    /// `phi_1(x) = sum_{l >= 1} a_l He_{l-1}(x)` from the truncated expansion.
    pub fn phi1(&self, x: f64) -> f64 {
        self.shifted.eval(x)
    }

    /// `phi_1(x)` without truncation bias, from a table built on first use
    /// out of `phi'` and by direct quadrature for `|x| > 10`. Falls back to
    /// [`Self::phi1`] when `phi` has a jump.
    pub fn phi1_exact(&self, x: f64) -> f64 {
        let table = self.phi1_table.get_or_init(|| {
            if !self.has_weak_derivative() {
                return None;
            }
            let d = |y: f64| self.derivative(y).unwrap();
            Phi1Table::build(&d, &self.breakpoints).ok()
        });
        match table {
            Some(t) => t.eval(x).unwrap_or_else(|| {
                self.phi1_direct(&[x])
                    .map(|v| v[0])
                    .unwrap_or_else(|_| self.phi1(x))
            }),
            None => self.phi1(x),
        }
    }

    /// `phi_1` at each point by direct quadrature of
    /// `int_0^1 E[phi'(u x + sqrt(1 - u^2) Y)] du`; no table, no truncation.
    pub fn phi1_direct(&self, xs: &[f64]) -> Result<Vec<f64>> {
        if !self.has_weak_derivative() {
            return Err(Error::NotInSobolev(format!(
                "`{}` has a jump, so phi' is not a function",
                self.label()
            )));
        }
        let rules = MehlerRules::new()?;
        let d = |y: f64| self.derivative(y).unwrap();
        xs.iter().map(|&x| rules.phi1(&d, &self.breakpoints, x)).collect()
    }

    pub fn expansion(&self) -> &HermiteExpansion {
        &self.expansion
    }

    pub fn shifted(&self) -> &HermiteExpansion {
        &self.shifted
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn quad_order(&self) -> usize {
        self.quad_order
    }

    /// Quadrature rule suited to this function's regularity.
    pub fn rule(&self, quad_order: usize) -> Result<Arc<GaussianRule>> {
        GaussianRule::for_breakpoints(quad_order, &self.breakpoints)
    }
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

/// `C(phi) = E[phi'(X)^4]^{1/4} E[phi_1(X)^4]^{1/4}`.
pub fn c_phi(f: &SubordinatedFunction, quad_order: usize) -> Result<f64> {
    if !f.has_weak_derivative() {
        return Err(Error::NotInSobolev(format!(
            "`{}` has a jump, so phi' is not a function",
            f.label()
        )));
    }
    // The truncated series for phi_1 converges in L^2 but not necessarily in
    // L^4 (|x| has coefficients decaying too slowly against ||He_l||_4), so
    // phi_1 is evaluated from phi' directly.
    let rule = f.rule(quad_order)?;
    let d4 = rule.integrate(|x| f.derivative(x).unwrap().powi(4));
    let phi1 = f.phi1_direct(rule.nodes())?;
    let s4: f64 = rule.weights().iter().zip(&phi1).map(|(w, v)| w * v.powi(4)).sum();
    if !d4.is_finite() || !s4.is_finite() {
        return Err(Error::NotInSobolev(format!(
            "fourth moments E[phi'^4] = {d4}, E[phi_1^4] = {s4}"
        )));
    }
    Ok(d4.powf(0.25) * s4.powf(0.25))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> ExpansionConfig {
        ExpansionConfig::default()
    }

    #[test]
    fn c_phi_of_linear_function_is_one() {
        let f = SubordinatedFunction::from_catalog("hermite:1", &cfg()).unwrap();
        assert!((c_phi(&f, 200).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn c_phi_of_h2_is_sqrt_12() {
        // phi' = 2x, phi_1 = x: (16 * 3)^{1/4} * 3^{1/4}
        let f = SubordinatedFunction::from_catalog("hermite:2", &cfg()).unwrap();
        assert!((c_phi(&f, 200).unwrap() - 12f64.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn c_phi_of_abs_ignores_truncation() {
        // E[phi_1^4]^{1/4} with phi_1(x) = int_0^1 erf(u x / sqrt(2 (1 - u^2))) du,
        // 20-digit adaptive quadrature; phi' = sign contributes a factor 1.
        let reference = 0.467733301699811;
        for l in [10, 40] {
            let cfg = ExpansionConfig { truncation: l, ..cfg() };
            let f = SubordinatedFunction::from_catalog("abs_centered", &cfg).unwrap();
            assert!((c_phi(&f, 200).unwrap() - reference).abs() < 1e-8);
        }
    }

    #[test]
    fn sign_is_outside_the_sobolev_class() {
        let f = SubordinatedFunction::from_catalog("sign", &cfg()).unwrap();
        assert!(matches!(c_phi(&f, 200), Err(Error::NotInSobolev(_))));
        assert_eq!(f.expansion().rank(), Some(1));
    }

    #[test]
    fn uncentered_polynomial_is_rejected() {
        let r = SubordinatedFunction::from_catalog("poly:0,0,1", &cfg());
        assert!(matches!(r, Err(Error::NotCentered { .. })));
        let f = SubordinatedFunction::from_catalog("poly:-1,0,1", &cfg()).unwrap();
        assert!((f.expansion().coeff(2) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unknown_catalog_names() {
        for bad in ["hermite:x", "hermite:0", "tanh", "poly:1,a", "abs_centered:3"] {
            assert!(SubordinatedFunction::from_catalog(bad, &cfg()).is_err(), "{bad}");
        }
    }

    #[test]
    fn exact_phi1_agrees_with_series_for_smooth_functions() {
        let f = SubordinatedFunction::from_catalog("cos_centered", &cfg()).unwrap();
        for &x in &[-4.0, -1.1, 0.0, 0.3, 2.9] {
            assert!((f.phi1_exact(x) - f.phi1(x)).abs() < 1e-9, "x = {x}");
        }
        let g = SubordinatedFunction::from_catalog("hermite:3", &cfg()).unwrap();
        assert!((g.phi1_exact(1.5) - (1.5f64 * 1.5 - 1.0)).abs() < 1e-9);
    }

    #[test]
    fn finite_difference_fallback_matches_exact_derivative() {
        let f = SubordinatedFunction::new(
            "cos fd",
            |x: f64| x.cos() - (-0.5f64).exp(),
            WeakDerivative::FiniteDifference,
            Vec::new(),
            &cfg(),
        )
        .unwrap();
        let g = SubordinatedFunction::from_catalog("cos_centered", &cfg()).unwrap();
        for &x in &[-2.0, -0.1, 0.7, 3.0] {
            assert!((f.derivative(x).unwrap() - g.derivative(x).unwrap()).abs() < 1e-8);
        }
        assert!((c_phi(&f, 200).unwrap() - c_phi(&g, 200).unwrap()).abs() < 1e-7);
    }
}
