//! Covariance models, their `l^b` partial sums, the limiting variance
//! `sigma^2` and the exact finite-`n` variance `sigma_n^2`.

use std::path::Path;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hermite::{factorial, hermite_rank, HermiteExpansion};
use crate::numeric::CompensatedSum;

/// `sigma_n^2` at or below this value is rejected.
pub const DEGENERATE_TOL: f64 = 1e-12;
/// Default lag horizon for `sigma^2`.
pub const DEFAULT_LAG_HORIZON: usize = 1_000_000;
/// Largest Toeplitz size handed to the dense eigen-solver.
pub const DENSE_EIGEN_LIMIT: usize = 2048;
const PSD_TOL: f64 = 1e-8;

/// Stationary covariance `k -> rho(k)` with `rho(0) = 1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum CovarianceModel {
    White,
    /// `rho(k) = theta^|k|`.
    Exponential { theta: f64 },
    /// `rho(k) = (1 + |k|)^(-alpha)`.
    PowerLaw { alpha: f64 },
    /// Increments of fractional Brownian motion with Hurst index `hurst`.
    FgnIncrements { hurst: f64 },
    /// Explicit lags `rho(0..values.len())`, zero beyond.
    Table { values: Vec<f64> },
}

impl CovarianceModel {
    pub fn white() -> Self {
        CovarianceModel::White
    }

    pub fn exponential(theta: f64) -> Result<Self> {
        if !(theta > -1.0 && theta < 1.0) {
            return Err(Error::InvalidModel(format!("exponential theta {theta} outside (-1, 1)")));
        }
        Ok(CovarianceModel::Exponential { theta })
    }

    pub fn power_law(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidModel(format!("power-law alpha {alpha} must be positive")));
        }
        Ok(CovarianceModel::PowerLaw { alpha })
    }

    pub fn fgn(hurst: f64) -> Result<Self> {
        if !(hurst > 0.0 && hurst < 1.0) {
            return Err(Error::InvalidModel(format!("Hurst index {hurst} outside (0, 1)")));
        }
        Ok(CovarianceModel::FgnIncrements { hurst })
    }

    pub fn table(values: Vec<f64>) -> Result<Self> {
        match values.first() {
            Some(&v0) if (v0 - 1.0).abs() <= 1e-12 => {}
            _ => return Err(Error::InvalidModel("table must start with rho(0) = 1".into())),
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite() || v.abs() > 1.0) {
            return Err(Error::InvalidModel(format!("table entry {v} violates |rho| <= 1")));
        }
        Ok(CovarianceModel::Table { values })
    }

    /// Reads a table from CSV rows `k,rho(k)` with `k = 0, 1, 2, ...` in order.
    /// A non-numeric first row is treated as a header.
    pub fn table_from_csv(path: impl AsRef<Path>) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_path(path)?;
        let mut values = Vec::new();
        for (row, rec) in rdr.records().enumerate() {
            let rec = rec?;
            if rec.len() < 2 {
                return Err(Error::InvalidModel(format!("row {row}: expected `k,rho`")));
            }
            let (k, v) = match (rec[0].parse::<usize>(), rec[1].parse::<f64>()) {
                (Ok(k), Ok(v)) => (k, v),
                _ if row == 0 => continue,
                _ => return Err(Error::InvalidModel(format!("row {row}: not numeric"))),
            };
            if k != values.len() {
                return Err(Error::InvalidModel(format!(
                    "row {row}: expected lag {}, found {k}",
                    values.len()
                )));
            }
            values.push(v);
        }
        Self::table(values)
    }

    /// Parses a model literal: `white`, `exp:0.5`, `pow:0.8`, `fgn:0.7` or
    /// `table:file.csv`.
    pub fn parse(literal: &str) -> Result<Self> {
        let literal = literal.trim();
        let (name, arg) = match literal.split_once(':') {
            Some((n, a)) => (n.trim(), Some(a.trim())),
            None => (literal, None),
        };
        let num = |a: &str| {
            a.parse::<f64>()
                .map_err(|_| Error::InvalidModel(format!("bad parameter `{a}` in `{literal}`")))
        };
        match (name, arg) {
            ("white", None) => Ok(Self::white()),
            ("exp", Some(a)) => Self::exponential(num(a)?),
            ("pow", Some(a)) => Self::power_law(num(a)?),
            ("fgn", Some(a)) => Self::fgn(num(a)?),
            ("table", Some(path)) => Self::table_from_csv(path),
            _ => Err(Error::InvalidModel(format!("unknown model literal `{literal}`"))),
        }
    }

    pub fn rho(&self, k: i64) -> f64 {
        let k = k.unsigned_abs();
        match self {
            CovarianceModel::White => {
                if k == 0 {
                    1.0
                } else {
                    0.0
                }
            }
            CovarianceModel::Exponential { theta } => theta.powi(k.min(i32::MAX as u64) as i32),
            CovarianceModel::PowerLaw { alpha } => (1.0 + k as f64).powf(-alpha),
            CovarianceModel::FgnIncrements { hurst } => {
                let h2 = 2.0 * hurst;
                let k = k as f64;
                0.5 * ((k + 1.0).powf(h2) - 2.0 * k.powf(h2) + (k - 1.0).abs().powf(h2))
            }
            CovarianceModel::Table { values } => values.get(k as usize).copied().unwrap_or(0.0),
        }
    }

    /// `rho(0), ..., rho(n - 1)`.
    pub fn lags(&self, n: usize) -> Vec<f64> {
        (0..n as i64).map(|k| self.rho(k)).collect()
    }

    /// Infimum `b*` of the exponents with `rho in l^b`. For white, exponential
    /// and table models `rho` is in `l^1` itself.
    pub fn declared_class(&self) -> f64 {
        match self {
            CovarianceModel::PowerLaw { alpha } => (1.0 / alpha).max(1.0),
            CovarianceModel::FgnIncrements { hurst } if *hurst != 0.5 => {
                (1.0 / (2.0 - 2.0 * hurst)).max(1.0)
            }
            _ => 1.0,
        }
    }

    /// Whether `sum_k |rho(k)|^b` is finite.
    pub fn in_lb(&self, b: f64) -> bool {
        match self {
            CovarianceModel::PowerLaw { alpha } => alpha * b > 1.0,
            CovarianceModel::FgnIncrements { hurst } if *hurst != 0.5 => {
                (2.0 - 2.0 * hurst) * b > 1.0
            }
            _ => true,
        }
    }

    pub fn label(&self) -> String {
        match self {
            CovarianceModel::White => "white".into(),
            CovarianceModel::Exponential { theta } => format!("exp:{theta}"),
            CovarianceModel::PowerLaw { alpha } => format!("pow:{alpha}"),
            CovarianceModel::FgnIncrements { hurst } => format!("fgn:{hurst}"),
            CovarianceModel::Table { values } => format!("table[{}]", values.len()),
        }
    }

    /// Upper bound on `sum_{|k| > horizon} |rho(k)|^power`; `None` if infinite.
    pub fn lag_tail_bound(&self, horizon: usize, power: f64) -> Option<f64> {
        let kf = horizon as f64;
        match self {
            CovarianceModel::White => Some(0.0),
            CovarianceModel::Table { values } => Some(
                2.0 * values
                    .iter()
                    .skip(horizon + 1)
                    .map(|v| v.abs().powf(power))
                    .sum::<f64>(),
            ),
            CovarianceModel::Exponential { theta } => {
                let q = theta.abs().powf(power);
                Some(2.0 * q.powf(kf + 1.0) / (1.0 - q))
            }
            CovarianceModel::PowerLaw { alpha } => {
                let s = alpha * power;
                (s > 1.0).then(|| 2.0 * (1.0 + kf).powf(1.0 - s) / (s - 1.0))
            }
            CovarianceModel::FgnIncrements { hurst } => {
                if *hurst == 0.5 {
                    return Some(0.0);
                }
                // |rho(k)| <= |H(2H-1)| (k-1)^(2H-2) for k >= 2.
                let c = (hurst * (2.0 * hurst - 1.0)).abs();
                let s = power * (2.0 - 2.0 * hurst);
                if s <= 1.0 {
                    return None;
                }
                let base = (kf - 1.0).max(1.0);
                Some(2.0 * c.powf(power) * base.powf(1.0 - s) / (s - 1.0))
            }
        }
    }
}

/// `sum_{|k| < n} |rho(k)|^b`.
pub fn lb_sum(m: &CovarianceModel, n: usize, b: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument("horizon n must be at least 1".into()));
    }
    if !(b >= 1.0) {
        return Err(Error::InvalidArgument(format!("exponent b = {b} must be at least 1")));
    }
    let mut acc = CompensatedSum::new();
    for k in (1..n as i64).rev() {
        acc.add(m.rho(k).abs().powf(b));
    }
    Ok(1.0 + 2.0 * acc.value())
}

/// `a_l^2 l!` for `l = 0..=L`, with index 0 zeroed.
fn chaos_weights(e: &HermiteExpansion) -> Vec<f64> {
    e.coeffs()
        .iter()
        .enumerate()
        .map(|(l, a)| if l == 0 { 0.0 } else { a * a * factorial(l) })
        .collect()
}

/// `sum_l w_l r^l` for the chaos weights `w`.
fn lag_kernel(weights: &[f64], r: f64) -> f64 {
    let mut p = 1.0;
    let mut acc = 0.0;
    for &w in &weights[1..] {
        p *= r;
        if p == 0.0 {
            break;
        }
        acc += w * p;
    }
    acc
}

/// Double-truncated limiting variance with its error budget.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SigmaLimit {
    pub value: f64,
    pub lag_horizon: usize,
    /// Bound on the contribution of lags beyond the horizon.
    pub lag_tail_bound: f64,
    /// Bound on the contribution of chaoses beyond the truncation at lags `k != 0`.
    pub expansion_tail_bound: f64,
    pub warning: Option<String>,
}

/// `sigma^2 = sum_l a_l^2 l! sum_k rho(k)^l`, truncated at order `L` and lag
/// `horizon`. The lag-zero term uses `Var(phi)` in full, tail included.
pub fn sigma_limit(e: &HermiteExpansion, m: &CovarianceModel, horizon: usize) -> Result<SigmaLimit> {
    let d = hermite_rank(e)?;
    let tail_per_unit = m.lag_tail_bound(horizon, d as f64).ok_or_else(|| Error::NotSummable {
        rank: d,
        detail: format!("sum_k |rho(k)|^{d} diverges for {}", m.label()),
    })?;
    let weights = chaos_weights(e);
    let top = e.truncation_order() as f64 + 1.0;
    let mut acc = CompensatedSum::new();
    let mut high_power = CompensatedSum::new();
    let effective = match m {
        CovarianceModel::White => 0,
        CovarianceModel::Table { values } => horizon.min(values.len()),
        _ => horizon,
    };
    for k in 1..=effective as i64 {
        let r = m.rho(k);
        acc.add(2.0 * lag_kernel(&weights, r));
        high_power.add(2.0 * r.abs().powf(top));
    }
    let value = e.variance() + acc.value();
    let lag_tail_bound = e.l2_norm_sq() * tail_per_unit + e.tail_mass() * tail_per_unit;
    let expansion_tail_bound = e.tail_mass() * high_power.value();
    let warning = (lag_tail_bound > 0.01 * value.abs()).then(|| {
        format!(
            "lag tail bound {lag_tail_bound:.3e} exceeds 1% of sigma^2 = {value:.6e}; increase the horizon"
        )
    });
    Ok(SigmaLimit {
        value,
        lag_horizon: horizon,
        lag_tail_bound,
        expansion_tail_bound,
        warning,
    })
}

/// `sigma_n^2 = Var(F_n) = sum_{|k| < n} (1 - |k|/n) Cov(phi(X_0), phi(X_k))`.
pub fn sigma_n(e: &HermiteExpansion, m: &CovarianceModel, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    let weights = chaos_weights(e);
    let nf = n as f64;
    let mut acc = CompensatedSum::new();
    for k in (1..n as i64).rev() {
        acc.add(2.0 * (1.0 - k as f64 / nf) * lag_kernel(&weights, m.rho(k)));
    }
    let value = e.variance() + acc.value();
    if value <= DEGENERATE_TOL {
        return Err(Error::DegenerateNormalization(value));
    }
    Ok(value)
}

pub fn toeplitz_dense(m: &CovarianceModel, n: usize) -> DMatrix<f64> {
    let lags = m.lags(n);
    DMatrix::from_fn(n, n, |i, j| lags[i.abs_diff(j)])
}

/// Whether the `n x n` Toeplitz matrix `(rho(i - j))` has no eigenvalue
/// below `-1e-8`.
pub fn validate_psd(m: &CovarianceModel, n: usize) -> Result<bool> {
    if n == 0 || n > DENSE_EIGEN_LIMIT {
        return Err(Error::InvalidArgument(format!(
            "validate_psd needs 1 <= n <= {DENSE_EIGEN_LIMIT}, got {n}"
        )));
    }
    Ok(min_eigenvalue(toeplitz_dense(m, n)) >= -PSD_TOL)
}

pub(crate) fn min_eigenvalue(a: DMatrix<f64>) -> f64 {
    SymmetricEigen::new(a).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rho_examples() {
        assert_eq!(CovarianceModel::white().rho(3), 0.0);
        assert_eq!(CovarianceModel::white().rho(0), 1.0);
        let e = CovarianceModel::exponential(0.5).unwrap();
        assert_eq!(e.rho(2), 0.25);
        assert_eq!(e.rho(-2), 0.25);
        let f = CovarianceModel::fgn(0.7).unwrap();
        assert!((f.rho(1) - 0.5 * (2f64.powf(1.4) - 2.0)).abs() < 1e-15);
        assert!((f.rho(1) - 0.319507910772894).abs() < 1e-12);
    }

    #[test]
    fn invalid_parameters() {
        assert!(CovarianceModel::exponential(1.0).is_err());
        assert!(CovarianceModel::exponential(-1.2).is_err());
        assert!(CovarianceModel::power_law(0.0).is_err());
        assert!(CovarianceModel::fgn(1.0).is_err());
        assert!(CovarianceModel::fgn(0.0).is_err());
        assert!(CovarianceModel::table(vec![0.9, 0.1]).is_err());
        assert!(CovarianceModel::table(vec![1.0, 1.5]).is_err());
        assert!(CovarianceModel::parse("gauss:1").is_err());
        assert!(CovarianceModel::parse("exp:abc").is_err());
    }

    #[test]
    fn literals() {
        assert_eq!(CovarianceModel::parse("white").unwrap(), CovarianceModel::White);
        assert_eq!(
            CovarianceModel::parse(" exp:0.5 ").unwrap(),
            CovarianceModel::Exponential { theta: 0.5 }
        );
        assert_eq!(
            CovarianceModel::parse("pow:0.8").unwrap(),
            CovarianceModel::PowerLaw { alpha: 0.8 }
        );
        assert_eq!(
            CovarianceModel::parse("fgn:0.7").unwrap(),
            CovarianceModel::FgnIncrements { hurst: 0.7 }
        );
    }

    #[test]
    fn table_from_csv_with_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rho.csv");
        std::fs::write(&path, "k,rho\n0,1.0\n1,0.4\n2,-0.1\n").unwrap();
        let m = CovarianceModel::parse(&format!("table:{}", path.display())).unwrap();
        assert_eq!(m.rho(1), 0.4);
        assert_eq!(m.rho(-2), -0.1);
        assert_eq!(m.rho(7), 0.0);

        std::fs::write(&path, "0,1.0\n2,0.4\n").unwrap();
        assert!(CovarianceModel::table_from_csv(&path).is_err());
    }

    #[test]
    fn lb_sum_examples() {
        let w = CovarianceModel::white();
        assert_eq!(lb_sum(&w, 17, 1.3).unwrap(), 1.0);
        let e = CovarianceModel::exponential(0.5).unwrap();
        assert!((lb_sum(&e, 4, 1.0).unwrap() - 2.75).abs() < 1e-15);
        assert!(lb_sum(&e, 0, 1.0).is_err());
        assert!(lb_sum(&e, 4, 0.5).is_err());
    }

    #[test]
    fn fgn_half_is_white() {
        let f = CovarianceModel::fgn(0.5).unwrap();
        for k in 1..50 {
            assert!(f.rho(k).abs() < 1e-15);
        }
        assert_eq!(f.rho(0), 1.0);
    }

    #[test]
    fn sigma_h2_exponential() {
        let e = HermiteExpansion::from_coeffs(vec![0.0, 0.0, 1.0], None, 1e-9);
        let m = CovarianceModel::exponential(0.5).unwrap();
        let s = sigma_limit(&e, &m, 10_000).unwrap();
        assert!((s.value - 10.0 / 3.0).abs() < 1e-12);
        assert!(s.warning.is_none());
        assert_eq!(sigma_n(&e, &m, 1).unwrap(), 2.0);
    }

    #[test]
    fn white_noise_sigmas_agree() {
        let e = HermiteExpansion::from_coeffs(vec![0.0, 0.3, -0.2, 0.1], None, 1e-9);
        let w = CovarianceModel::white();
        let lim = sigma_limit(&e, &w, 1000).unwrap().value;
        for n in [1, 2, 10, 1000] {
            assert_eq!(sigma_n(&e, &w, n).unwrap(), lim);
        }
        assert!((lim - e.l2_norm_sq()).abs() < 1e-15);
    }

    #[test]
    fn degenerate_normalization() {
        // H_1 with rho(1) = -1/2 on a table: sigma_n^2 = 1 - (n-1)/n -> 1/n,
        // but the alternating table rho = (1, -1) kills it at n = 2.
        let e = HermiteExpansion::from_coeffs(vec![0.0, 1.0], None, 1e-9);
        let m = CovarianceModel::table(vec![1.0, -1.0]).unwrap();
        assert!(matches!(sigma_n(&e, &m, 2), Err(Error::DegenerateNormalization(_))));
    }

    #[test]
    fn non_summable_power_law_is_rejected() {
        let e = HermiteExpansion::from_coeffs(vec![0.0, 1.0], None, 1e-9);
        let m = CovarianceModel::power_law(0.8).unwrap();
        assert!(matches!(sigma_limit(&e, &m, 1000), Err(Error::NotSummable { .. })));
        let e2 = HermiteExpansion::from_coeffs(vec![0.0, 0.0, 1.0], None, 1e-9);
        assert!(sigma_limit(&e2, &m, 100_000).is_ok());
    }

    #[test]
    fn psd_examples() {
        assert!(validate_psd(&CovarianceModel::exponential(0.5).unwrap(), 64).unwrap());
        assert!(validate_psd(&CovarianceModel::white(), 256).unwrap());
        let bad = CovarianceModel::table(vec![1.0, 0.9, -0.9]).unwrap();
        assert!(!validate_psd(&bad, 3).unwrap());
        assert!(validate_psd(&bad, DENSE_EIGEN_LIMIT + 1).is_err());
    }
}
