use nalgebra::DMatrix;
use serde::Serialize;

use super::pair::{inv_sqrt_and_sqrt, SubspacePair};
use super::quadrature::{expectation_with_factor, gaussian_expectation, gaussian_factor, multi_indices};
use crate::error::{Error, Result};
use crate::hermite::{factorial, hermite_eval, GaussianRule};
use crate::numeric::CompensatedSum;

/// Allowed `|E[F]|`, relative to `max(1, sd(F))`.
pub const GEBELEIN_CENTERING_TOL: f64 = 1e-8;
/// Allowed normalized projection onto chaoses below the declared rank.
pub const RANK_PROJECTION_TOL: f64 = 1e-7;
pub const HOLDS_TOL: f64 = 1e-6;
pub const TIGHT_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GebeleinCheck {
    /// `|E[F1 F2]|`.
    pub lhs: f64,
    /// `theta^p sqrt(Var F1 Var F2)`.
    pub rhs: f64,
    pub holds: bool,
    pub tight: bool,
    pub theta: f64,
    pub rank: usize,
    pub var1: f64,
    pub var2: f64,
}

impl GebeleinCheck {
    pub fn slack(&self) -> f64 {
        self.rhs - self.lhs
    }
}

fn ensure_centered(mean: f64, var: f64) -> Result<()> {
    if mean.abs() > GEBELEIN_CENTERING_TOL * var.max(0.0).sqrt().max(1.0) {
        return Err(Error::NotCentered { mean });
    }
    Ok(())
}

fn multi_hermite(alpha: &[usize], xi: &[f64]) -> f64 {
    alpha
        .iter()
        .zip(xi)
        .map(|(&a, &x)| hermite_eval(a, x).expect("multi-index order within range"))
        .product()
}

/// Verifies that `F(W)`, `W ~ N(0, G)`, has no component in the chaoses of
/// degree `1..rank`. In whitened coordinates `W = G^{1/2} xi` these chaoses
/// are spanned by the products `He_alpha(xi)`, `|alpha| < rank`.
fn verify_rank<F>(f: &F, g: &DMatrix<f64>, rank: usize, sd: f64, order: usize) -> Result<()>
where
    F: Fn(&[f64]) -> f64,
{
    let d = g.nrows();
    let (_, root) = inv_sqrt_and_sqrt(g);
    let identity = DMatrix::identity(d, d);
    let mut w = vec![0.0; d];
    for degree in 1..rank {
        for alpha in multi_indices(d, degree) {
            let norm = alpha.iter().map(|&a| factorial(a)).product::<f64>().sqrt();
            let proj = expectation_with_factor(
                &identity,
                |xi| {
                    for (r, wr) in w.iter_mut().enumerate() {
                        *wr = (0..d).map(|c| root[(r, c)] * xi[c]).sum();
                    }
                    f(&w) * multi_hermite(&alpha, xi)
                },
                order,
            )? / norm;
            if proj.abs() > RANK_PROJECTION_TOL * sd.max(1.0) {
                return Err(Error::RankContradicted {
                    declared: rank,
                    degree,
                    value: proj,
                });
            }
        }
    }
    Ok(())
}

/// Checks `|E[F1(W1) F2(W2)]| <= theta^p sqrt(Var F1 Var F2)` where `W1`,
/// `W2` are the coordinate vectors of the pair, `F1` is centered with
/// Hermite rank at least `p` and `F2` is centered.
///
/// The declared rank is verified by quadrature before the inequality is
/// evaluated; all expectations use the tensor Gauss-Hermite rule of order
/// `quad_order` per axis, so polynomial functionals are handled exactly once
/// the order exceeds half their total degree.
pub fn check_gebelein<F1, F2>(
    f1: F1,
    p: usize,
    f2: F2,
    pair: &SubspacePair,
    quad_order: usize,
) -> Result<GebeleinCheck>
where
    F1: Fn(&[f64]) -> f64,
    F2: Fn(&[f64]) -> f64,
{
    if p == 0 {
        return Err(Error::InvalidArgument("declared rank must be at least 1".into()));
    }
    let d1 = pair.d1();
    let mean1 = gaussian_expectation(pair.g1(), &f1, quad_order)?;
    let mean2 = gaussian_expectation(pair.g2(), &f2, quad_order)?;
    let var1 = gaussian_expectation(pair.g1(), |x| f1(x).powi(2), quad_order)? - mean1 * mean1;
    let var2 = gaussian_expectation(pair.g2(), |x| f2(x).powi(2), quad_order)? - mean2 * mean2;
    ensure_centered(mean1, var1)?;
    ensure_centered(mean2, var2)?;
    verify_rank(&f1, pair.g1(), p, var1.max(0.0).sqrt(), quad_order)?;

    let factor = gaussian_factor(&pair.full_gram());
    let cross = expectation_with_factor(&factor, |x| f1(&x[..d1]) * f2(&x[d1..]), quad_order)?;
    let lhs = cross.abs();
    let rhs = pair.theta().powi(p as i32) * (var1.max(0.0) * var2.max(0.0)).sqrt();
    Ok(GebeleinCheck {
        lhs,
        rhs,
        holds: lhs <= rhs + HOLDS_TOL,
        tight: rhs - lhs <= TIGHT_TOL,
        theta: pair.theta(),
        rank: p,
        var1,
        var2,
    })
}

/// The scalar case: `X`, `Y` standard with correlation `theta` in `[-1, 1]`,
/// `|E[F(X) G(Y)]| <= |theta|^p sqrt(Var F Var G)`.
pub fn check_rigid<F, G>(f: F, g: G, theta: f64, p: usize, quad_order: usize) -> Result<GebeleinCheck>
where
    F: Fn(f64) -> f64,
    G: Fn(f64) -> f64,
{
    check_rigid_with_breakpoints(f, &[], g, &[], theta, p, quad_order)
}

/// [`check_rigid`] for functions with kinks or jumps at known points. The
/// cross moment is computed as `E[F(X) E[G(theta X + s Z) | X]]`,
/// `s = sqrt(1 - theta^2)`, with composite rules split at the breakpoints of
/// each factor (moved to `(b - theta x) / s` for the inner integral).
pub fn check_rigid_with_breakpoints<F, G>(
    f: F,
    f_breaks: &[f64],
    g: G,
    g_breaks: &[f64],
    theta: f64,
    p: usize,
    quad_order: usize,
) -> Result<GebeleinCheck>
where
    F: Fn(f64) -> f64,
    G: Fn(f64) -> f64,
{
    if !(-1.0..=1.0).contains(&theta) {
        return Err(Error::InvalidArgument(format!("correlation {theta} outside [-1, 1]")));
    }
    if p == 0 {
        return Err(Error::InvalidArgument("declared rank must be at least 1".into()));
    }
    let rule_f = GaussianRule::for_breakpoints(quad_order, f_breaks)?;
    let rule_g = GaussianRule::for_breakpoints(quad_order, g_breaks)?;
    let finite = |v: f64, what: &str| {
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFinite(what.to_string()))
        }
    };
    let mean1 = finite(rule_f.integrate(&f), "E[F]")?;
    let mean2 = finite(rule_g.integrate(&g), "E[G]")?;
    let var1 = finite(rule_f.integrate(|x| f(x).powi(2)), "E[F^2]")? - mean1 * mean1;
    let var2 = finite(rule_g.integrate(|y| g(y).powi(2)), "E[G^2]")? - mean2 * mean2;
    ensure_centered(mean1, var1)?;
    ensure_centered(mean2, var2)?;
    let sd1 = var1.max(0.0).sqrt();
    for degree in 1..p {
        let proj = rule_f.integrate(|x| f(x) * hermite_eval(degree, x).unwrap_or(f64::NAN))
            / factorial(degree).sqrt();
        if !(proj.abs() <= RANK_PROJECTION_TOL * sd1.max(1.0)) {
            return Err(Error::RankContradicted {
                declared: p,
                degree,
                value: proj,
            });
        }
    }

    let s = (1.0 - theta * theta).max(0.0).sqrt();
    let inner_gh = GaussianRule::gauss_hermite_cached(quad_order)?;
    let mut cross = CompensatedSum::new();
    for (&x, &w) in rule_f.nodes().iter().zip(rule_f.weights()) {
        let inner = if s == 0.0 {
            g(theta * x)
        } else if g_breaks.is_empty() {
            inner_gh.integrate(|z| g(theta * x + s * z))
        } else {
            let moved: Vec<f64> = g_breaks.iter().map(|b| (b - theta * x) / s).collect();
            GaussianRule::piecewise(&moved)?.integrate(|z| g(theta * x + s * z))
        };
        cross.add(w * f(x) * inner);
    }
    let lhs = finite(cross.value(), "E[F G]")?.abs();
    let rhs = theta.abs().powi(p as i32) * (var1.max(0.0) * var2.max(0.0)).sqrt();
    Ok(GebeleinCheck {
        lhs,
        rhs,
        holds: lhs <= rhs + HOLDS_TOL,
        tight: rhs - lhs <= TIGHT_TOL,
        theta: theta.abs(),
        rank: p,
        var1,
        var2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn he(k: usize) -> impl Fn(f64) -> f64 {
        move |x| hermite_eval(k, x).unwrap()
    }

    #[test]
    fn hermite_pairs_attain_equality() {
        for p in 1..=8 {
            for theta in [-0.9, -0.5, 0.5, 0.9] {
                let c = check_rigid(he(p), he(p), theta, p, p + 1).unwrap();
                assert!(c.tight && c.holds, "p = {p}, theta = {theta}: {c:?}");
                assert!((c.lhs - c.rhs).abs() <= 1e-8);
            }
        }
    }

    #[test]
    fn x_squared_minus_one() {
        let c = check_rigid(|x| x * x - 1.0, |y| y * y - 1.0, 0.6, 2, 4).unwrap();
        assert!((c.lhs - 0.72).abs() < 1e-12);
        assert!((c.rhs - 0.72).abs() < 1e-12);
    }

    #[test]
    fn spec_rigid_examples() {
        let c = check_rigid(he(2), he(2), 0.5, 2, 3).unwrap();
        assert!((c.lhs - 0.5).abs() < 1e-14 && (c.rhs - 0.5).abs() < 1e-14);
        let c = check_rigid(he(3), he(2), 0.7, 1, 4).unwrap();
        assert!(c.lhs < 1e-14);
        // |x| - sqrt(2/pi) has rank 2; G is a bounded centered step.
        let abs_c = |x: f64| x.abs() - (2.0 / std::f64::consts::PI).sqrt();
        let step = |y: f64| if y > 0.5 { 1.0 - crate::numeric::normal_cdf(-0.5) } else { -crate::numeric::normal_cdf(-0.5) };
        let c = check_rigid_with_breakpoints(abs_c, &[0.0], step, &[0.5], 0.8, 2, 40).unwrap();
        assert!(c.holds && c.lhs > 0.0, "{c:?}");
        assert!(check_rigid_with_breakpoints(abs_c, &[0.0], step, &[0.5], 0.8, 3, 40).is_err());
    }

    #[test]
    fn independent_pair_has_zero_covariance() {
        let c = check_rigid(|x| x * x * x, |y| y, 0.0, 1, 4).unwrap();
        assert_eq!(c.rhs, 0.0);
        assert!(c.lhs < 1e-14 && c.holds);
    }

    #[test]
    fn rank_is_verified() {
        let r = check_rigid(|x| x * x * x, |y| y, 0.5, 2, 4);
        assert!(matches!(r, Err(Error::RankContradicted { declared: 2, degree: 1, .. })));
        let r = check_rigid(|x| x * x, |y| y, 0.5, 1, 4);
        assert!(matches!(r, Err(Error::NotCentered { .. })));
    }
}
