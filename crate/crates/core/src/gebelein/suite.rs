//! Randomized instances for the Gebelein checks.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use super::check::{check_gebelein, check_rigid, GebeleinCheck};
use super::coupling::{rigid_coupling, BOUNDARY_TOL};
use super::pair::{inv_sqrt_and_sqrt, random_orthogonal_pair, random_pair, random_pair_in_range, SubspacePair};
use super::quadrature::{gaussian_expectation, multi_indices};
use crate::covariance::CovarianceModel;
use crate::error::{Error, Result};
use crate::hermite::{hermite_eval, hermite_series};
use crate::simulate::replication_rng;

/// `sum_alpha c_alpha He_alpha(G^{-1/2} w)`: a polynomial functional of a
/// Gaussian vector with Gram `G`, written in whitened coordinates so that
/// each term lies in a single Wiener chaos.
#[derive(Debug, Clone, PartialEq)]
pub struct ChaosPolynomial {
    whiten: DMatrix<f64>,
    terms: Vec<(Vec<usize>, f64)>,
}

impl ChaosPolynomial {
    pub fn new(gram: &DMatrix<f64>, terms: Vec<(Vec<usize>, f64)>) -> Result<Self> {
        let d = gram.nrows();
        if terms.iter().any(|(a, _)| a.len() != d) {
            return Err(Error::InvalidArgument("multi-index length differs from dimension".into()));
        }
        Ok(Self {
            whiten: inv_sqrt_and_sqrt(gram).0,
            terms,
        })
    }

    /// Random coefficients on every multi-index with total degree in
    /// `min_degree..=max_degree`; the result has Hermite rank at least
    /// `min_degree`.
    pub fn random<R: Rng + ?Sized>(
        rng: &mut R,
        gram: &DMatrix<f64>,
        min_degree: usize,
        max_degree: usize,
    ) -> Result<Self> {
        let d = gram.nrows();
        let terms = (min_degree.max(1)..=max_degree)
            .flat_map(|k| multi_indices(d, k))
            .map(|alpha| (alpha, rng.sample::<f64, _>(StandardNormal)))
            .collect();
        Self::new(gram, terms)
    }

    pub fn degree(&self) -> usize {
        self.terms.iter().map(|(a, _)| a.iter().sum()).max().unwrap_or(0)
    }

    pub fn eval(&self, w: &[f64]) -> f64 {
        let xi = &self.whiten * DVector::from_column_slice(w);
        self.terms
            .iter()
            .map(|(alpha, c)| {
                c * alpha
                    .iter()
                    .zip(xi.iter())
                    .map(|(&a, &x)| hermite_eval(a, x).expect("degree within range"))
                    .product::<f64>()
            })
            .sum()
    }
}

/// `phi'(w_0) phi_1(w_1) - mean` for `phi = sum_l a_l He_l`, the functional
/// whose covariances appear in the rank-two quadruple sum.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseProduct {
    derivative: Vec<f64>,
    shifted: Vec<f64>,
    mean: f64,
}

impl SparseProduct {
    pub fn new(coeffs: &[f64], gram: &DMatrix<f64>, quad_order: usize) -> Result<Self> {
        if gram.shape() != (2, 2) {
            return Err(Error::InvalidArgument("sparse products act on two coordinates".into()));
        }
        let shifted: Vec<f64> = coeffs.iter().skip(1).copied().collect();
        let derivative: Vec<f64> = shifted.iter().enumerate().map(|(l, a)| a * (l + 1) as f64).collect();
        let mut out = Self {
            derivative,
            shifted,
            mean: 0.0,
        };
        out.mean = gaussian_expectation(gram, |w| out.raw(w), quad_order)?;
        Ok(out)
    }

    fn raw(&self, w: &[f64]) -> f64 {
        hermite_series(&self.derivative, w[0]) * hermite_series(&self.shifted, w[1])
    }

    pub fn eval(&self, w: &[f64]) -> f64 {
        self.raw(w) - self.mean
    }

    pub fn degree(&self) -> usize {
        2 * self.shifted.len().saturating_sub(1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum InstanceKind {
    /// Random chaos polynomials on a random pair.
    Polynomial,
    /// Random chaos polynomials on a pair with zero cross-Gram.
    Orthogonal,
    /// `phi'(W(h)) phi_1(W(g))` for a 2-sparse `phi`, on pairs of lags of a
    /// stationary sequence.
    SparseProduct,
    /// `F = G = He_p` on correlated scalars.
    HermiteEquality,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CouplingSummary {
    pub u_norm: f64,
    pub residual_i: f64,
    pub residual_ii: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteInstance {
    pub index: usize,
    pub kind: InstanceKind,
    pub d1: usize,
    pub d2: usize,
    pub theta: f64,
    pub rank: usize,
    pub quad_order: usize,
    pub check: Option<GebeleinCheck>,
    /// `None` when `theta` sits on the boundary where the coupling is undefined.
    pub coupling: Option<CouplingSummary>,
    pub error: Option<String>,
}

impl SuiteInstance {
    pub fn passed(&self) -> bool {
        self.error.is_none()
            && self.check.is_some_and(|c| c.holds)
            && self.coupling.as_ref().is_none_or(|c| {
                c.error.is_none()
                    && c.residual_i <= COUPLING_RESIDUAL_TOL
                    && c.residual_ii <= COUPLING_RESIDUAL_TOL
                    && c.u_norm <= self.theta * self.theta + COUPLING_RESIDUAL_TOL
            })
    }
}

pub const COUPLING_RESIDUAL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteSummary {
    pub count: usize,
    pub seed: u64,
    pub max_dim: usize,
    pub passed: usize,
    pub tight: usize,
    pub min_slack: f64,
    pub max_coupling_residual: f64,
    pub instances: Vec<SuiteInstance>,
}

impl SuiteSummary {
    pub fn all_passed(&self) -> bool {
        self.passed == self.count
    }
}

/// Per-axis order exact for the products a check evaluates.
fn exact_order(deg1: usize, deg2: usize) -> usize {
    deg1.max(deg2) + 1
}

fn coupling_summary(pair: &SubspacePair) -> Option<CouplingSummary> {
    let t = pair.theta();
    if t < BOUNDARY_TOL || t > 1.0 - BOUNDARY_TOL {
        return None;
    }
    Some(match rigid_coupling(pair) {
        Ok(c) => CouplingSummary {
            u_norm: c.u_norm,
            residual_i: c.residual_i,
            residual_ii: c.residual_ii,
            error: None,
        },
        Err(e) => CouplingSummary {
            u_norm: f64::INFINITY,
            residual_i: f64::INFINITY,
            residual_ii: f64::INFINITY,
            error: Some(e.to_string()),
        },
    })
}

fn lag_gram(model: &CovarianceModel, lags: &[i64]) -> DMatrix<f64> {
    DMatrix::from_fn(lags.len(), lags.len(), |i, j| model.rho(lags[i] - lags[j]))
}

fn run_instance(index: usize, seed: u64, max_dim: usize) -> SuiteInstance {
    let mut rng = replication_rng(seed, index as u64);
    let kind = match index % 10 {
        0 => InstanceKind::Orthogonal,
        1 | 2 => InstanceKind::SparseProduct,
        3 => InstanceKind::HermiteEquality,
        _ => InstanceKind::Polynomial,
    };
    let mut record = SuiteInstance {
        index,
        kind,
        d1: 1,
        d2: 1,
        theta: 0.0,
        rank: 1,
        quad_order: 0,
        check: None,
        coupling: None,
        error: None,
    };
    let outcome: Result<GebeleinCheck> = (|| match kind {
        InstanceKind::Polynomial | InstanceKind::Orthogonal => {
            let d1 = rng.random_range(1..=max_dim);
            let d2 = rng.random_range(1..=max_dim);
            let pair = if kind == InstanceKind::Orthogonal {
                random_orthogonal_pair(&mut rng, d1, d2)?
            } else {
                random_pair(&mut rng, d1, d2)?
            };
            let p = rng.random_range(1..=4);
            let f1 = ChaosPolynomial::random(&mut rng, pair.g1(), p, p + 1)?;
            let f2 = ChaosPolynomial::random(&mut rng, pair.g2(), 1, 3)?;
            let order = exact_order(f1.degree(), f2.degree());
            record.d1 = d1;
            record.d2 = d2;
            record.rank = p;
            record.quad_order = order;
            record.theta = pair.theta();
            record.coupling = coupling_summary(&pair);
            check_gebelein(|w| f1.eval(w), p, |w| f2.eval(w), &pair, order)
        }
        InstanceKind::SparseProduct => {
            let model = if rng.random_bool(0.5) {
                CovarianceModel::exponential(rng.random_range(0.2..1.0))?
            } else {
                CovarianceModel::power_law(rng.random_range(0.3..1.5))?
            };
            let mut lags: Vec<i64> = Vec::new();
            while lags.len() < 4 {
                let k = rng.random_range(0..12);
                if !lags.contains(&k) {
                    lags.push(k);
                }
            }
            let full = lag_gram(&model, &lags);
            let pair = SubspacePair::new(
                full.view((0, 0), (2, 2)).into(),
                full.view((2, 2), (2, 2)).into(),
                full.view((0, 2), (2, 2)).into(),
            )?;
            // Even coefficients only: a 2-sparse phi of rank 2.
            let mut coeffs = vec![0.0; 7];
            for l in [2, 4, 6] {
                coeffs[l] = rng.sample::<f64, _>(StandardNormal) / (l as f64);
            }
            let order = 2 * 5 + 1;
            let f1 = SparseProduct::new(&coeffs, pair.g1(), order)?;
            let f2 = SparseProduct::new(&coeffs, pair.g2(), order)?;
            record.d1 = 2;
            record.d2 = 2;
            record.rank = 2;
            record.quad_order = order;
            record.theta = pair.theta();
            record.coupling = coupling_summary(&pair);
            check_gebelein(|w| f1.eval(w), 2, |w| f2.eval(w), &pair, order)
        }
        InstanceKind::HermiteEquality => {
            let p = rng.random_range(1..=8);
            let rho = [-0.9, -0.5, 0.5, 0.9][rng.random_range(0..4)];
            let he = move |x: f64| hermite_eval(p, x).expect("order within range");
            let pair = SubspacePair::scalar(rho)?;
            record.rank = p;
            record.quad_order = p + 1;
            record.theta = pair.theta();
            record.coupling = coupling_summary(&pair);
            check_rigid(he, he, rho, p, p + 1)
        }
    })();
    match outcome {
        Ok(c) => record.check = Some(c),
        Err(e) => record.error = Some(e.to_string()),
    }
    record
}

/// Runs `count` randomized instances with dimensions up to `max_dim` per
/// side. Instance `i` draws from its own generator, so results do not depend
/// on scheduling.
pub fn run_gebelein_suite(count: usize, seed: u64, max_dim: usize) -> Result<SuiteSummary> {
    if !(1..=3).contains(&max_dim) {
        return Err(Error::InvalidArgument(format!("suite dimension {max_dim} outside 1..=3")));
    }
    let instances: Vec<SuiteInstance> = (0..count)
        .into_par_iter()
        .map(|i| run_instance(i, seed, max_dim))
        .collect();
    let passed = instances.iter().filter(|r| r.passed()).count();
    let tight = instances
        .iter()
        .filter(|r| r.check.is_some_and(|c| c.tight))
        .count();
    let min_slack = instances
        .iter()
        .filter_map(|r| r.check.map(|c| c.slack()))
        .fold(f64::INFINITY, f64::min);
    let max_coupling_residual = instances
        .iter()
        .filter_map(|r| r.coupling.as_ref())
        .map(|c| c.residual_i.max(c.residual_ii))
        .fold(0.0, f64::max);
    Ok(SuiteSummary {
        count,
        seed,
        max_dim,
        passed,
        tight,
        min_slack,
        max_coupling_residual,
        instances,
    })
}

/// Residual summary of the rigid coupling over random pairs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CouplingSuiteSummary {
    pub count: usize,
    pub seed: u64,
    pub theta_range: (f64, f64),
    pub max_residual_i: f64,
    pub max_residual_ii: f64,
    /// `max(||U|| - theta^2)`.
    pub max_u_excess: f64,
    pub failures: usize,
    /// `index: message` for every pair that could not be built or coupled.
    pub errors: Vec<String>,
}

impl CouplingSuiteSummary {
    pub fn all_passed(&self) -> bool {
        self.failures == 0
            && self.max_residual_i <= COUPLING_RESIDUAL_TOL
            && self.max_residual_ii <= COUPLING_RESIDUAL_TOL
            && self.max_u_excess <= COUPLING_RESIDUAL_TOL
    }
}

const COUPLING_STREAM: u64 = 0xC0C0_1E55;

/// Rigid couplings of `count` random pairs with dimensions in `1..=4` and
/// `theta` in `[lo, hi]`.
pub fn run_coupling_suite(count: usize, seed: u64, lo: f64, hi: f64) -> Result<CouplingSuiteSummary> {
    let results: Vec<Result<(f64, f64, f64)>> = (0..count as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = replication_rng(seed ^ COUPLING_STREAM, i);
            let d1 = rng.random_range(1..=4);
            let d2 = rng.random_range(1..=4);
            let pair = random_pair_in_range(&mut rng, d1, d2, lo, hi)?;
            let c = rigid_coupling(&pair)?;
            Ok((c.residual_i, c.residual_ii, c.u_norm - c.theta * c.theta))
        })
        .collect();
    let mut summary = CouplingSuiteSummary {
        count,
        seed,
        theta_range: (lo, hi),
        max_residual_i: 0.0,
        max_residual_ii: 0.0,
        max_u_excess: f64::NEG_INFINITY,
        failures: 0,
        errors: Vec::new(),
    };
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok((a, b, u)) => {
                summary.max_residual_i = summary.max_residual_i.max(a);
                summary.max_residual_ii = summary.max_residual_ii.max(b);
                summary.max_u_excess = summary.max_u_excess.max(u);
            }
            Err(e) => {
                summary.failures += 1;
                summary.errors.push(format!("{i}: {e}"));
            }
        }
    }
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chaos_polynomials_have_their_rank() {
        let mut rng = replication_rng(4, 0);
        let pair = random_pair(&mut rng, 2, 2).unwrap();
        let f1 = ChaosPolynomial::random(&mut rng, pair.g1(), 3, 4).unwrap();
        let f2 = ChaosPolynomial::random(&mut rng, pair.g2(), 1, 2).unwrap();
        let c = check_gebelein(|w| f1.eval(w), 3, |w| f2.eval(w), &pair, 5).unwrap();
        assert!(c.holds);
        assert!(check_gebelein(|w| f1.eval(w), 4, |w| f2.eval(w), &pair, 5).is_err());
    }

    #[test]
    fn sparse_product_of_h2_is_second_chaos() {
        let g = DMatrix::from_row_slice(2, 2, &[1.0, 0.4, 0.4, 1.0]);
        let f = SparseProduct::new(&[0.0, 0.0, 1.0], &g, 4).unwrap();
        // phi = H2: phi' = 2x, phi_1 = x, mean 2 rho.
        assert!((f.mean - 0.8).abs() < 1e-14);
        assert!((f.eval(&[1.5, -2.0]) - (2.0 * 1.5 * -2.0 - 0.8)).abs() < 1e-14);
    }

    #[test]
    fn small_suite_passes() {
        let s = run_gebelein_suite(40, 11, 3).unwrap();
        for r in &s.instances {
            assert!(r.passed(), "{r:?}");
            if r.kind == InstanceKind::Orthogonal {
                assert!(r.check.unwrap().lhs < 1e-12);
            }
            if r.kind == InstanceKind::HermiteEquality {
                assert!(r.check.unwrap().tight);
            }
        }
    }
}
