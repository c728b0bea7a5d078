//! The explicit total-variation bounds, the two quadruple sums behind them
//! (fast and brute force), their convolution envelopes, the lower bound
//! that rules out the `n^{-1/2}` rate for non-summable covariances, and the
//! search for the best interpolation exponent `b`.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::covariance::{lb_sum, CovarianceModel, DEGENERATE_TOL};
use crate::error::{Error, Result};
use crate::hermite::Sparsity;
use crate::numeric::CompensatedSum;
use crate::simulate::ToeplitzOperator;

/// Largest `n` accepted by the `O(n^4)` brute-force sums.
pub const BRUTE_LIMIT: usize = 64;
pub const DEFAULT_B_STEP: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SumMode {
    Fast,
    Brute,
}

fn check_s(s: f64) -> Result<()> {
    if !(s > DEGENERATE_TOL) {
        return Err(Error::DegenerateNormalization(s));
    }
    Ok(())
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    Ok(())
}

/// `(4c/s) n^{-1/2} (sum_{|k|<n} |rho(k)|)^{3/2}`.
pub fn bound_i(c: f64, s: f64, m: &CovarianceModel, n: usize) -> Result<f64> {
    check_s(s)?;
    check_n(n)?;
    let l1 = lb_sum(m, n, 1.0)?;
    Ok(4.0 * c / s * (n as f64).powf(-0.5) * l1.powf(1.5))
}

/// Every quantity entering one evaluation of the second bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundIiFactors {
    pub b: f64,
    /// `4c/s`.
    pub prefactor: f64,
    /// `-(1/b - 1/2)`.
    pub n_exponent: f64,
    /// `sum_{|k|<n} rho(k)^2`.
    pub l2_sum: f64,
    /// `sum_{|k|<n} |rho(k)|^b`.
    pub lb_sum: f64,
    pub value: f64,
}

fn bound_ii_with(prefactor: f64, l2_sum: f64, m: &CovarianceModel, n: usize, b: f64) -> Result<BoundIiFactors> {
    if !(1.0..=2.0).contains(&b) {
        return Err(Error::InvalidArgument(format!("b = {b} outside [1, 2]")));
    }
    let lb = lb_sum(m, n, b)?;
    let n_exponent = -(1.0 / b - 0.5);
    Ok(BoundIiFactors {
        b,
        prefactor,
        n_exponent,
        l2_sum,
        lb_sum: lb,
        value: prefactor * (n as f64).powf(n_exponent) * l2_sum.sqrt() * lb.powf(1.0 / b),
    })
}

fn require_two_sparse(sparsity: Sparsity) -> Result<()> {
    if !sparsity.is_at_least(2) {
        return Err(Error::NotTwoSparse(sparsity.to_string()));
    }
    Ok(())
}

/// `(4c/s) n^{-(1/b - 1/2)} (sum |rho|^2)^{1/2} (sum |rho|^b)^{1/b}`,
/// sums over `|k| < n`. Only valid for 2-sparse functions.
pub fn bound_ii(
    c: f64,
    s: f64,
    m: &CovarianceModel,
    n: usize,
    b: f64,
    sparsity: Sparsity,
) -> Result<f64> {
    Ok(bound_ii_factors(c, s, m, n, b, sparsity)?.value)
}

pub fn bound_ii_factors(
    c: f64,
    s: f64,
    m: &CovarianceModel,
    n: usize,
    b: f64,
    sparsity: Sparsity,
) -> Result<BoundIiFactors> {
    require_two_sparse(sparsity)?;
    check_s(s)?;
    check_n(n)?;
    bound_ii_with(4.0 * c / s, lb_sum(m, n, 2.0)?, m, n, b)
}

/// `1, 1 + step, ..., 2`.
pub fn b_grid(step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && step <= 1.0) {
        return Err(Error::InvalidArgument(format!("grid step {step} outside (0, 1]")));
    }
    let count = (1.0 / step).round() as usize;
    Ok((0..=count).map(|i| (1.0 + i as f64 * step).min(2.0)).collect())
}

/// The second bound over a grid of exponents.
pub fn bound_ii_grid(
    c: f64,
    s: f64,
    m: &CovarianceModel,
    n: usize,
    grid: &[f64],
    sparsity: Sparsity,
) -> Result<Vec<BoundIiFactors>> {
    require_two_sparse(sparsity)?;
    check_s(s)?;
    check_n(n)?;
    let l2 = lb_sum(m, n, 2.0)?;
    grid.iter()
        .map(|&b| bound_ii_with(4.0 * c / s, l2, m, n, b))
        .collect()
}

/// Minimizer of the second bound over `[1, 2]` with the given step; ties
/// go to the smaller `b`.
pub fn best_b(
    c: f64,
    s: f64,
    m: &CovarianceModel,
    n: usize,
    step: f64,
    sparsity: Sparsity,
) -> Result<(f64, f64)> {
    let grid = bound_ii_grid(c, s, m, n, &b_grid(step)?, sparsity)?;
    Ok(argmin(&grid))
}

pub(crate) fn argmin(grid: &[BoundIiFactors]) -> (f64, f64) {
    let mut best = (grid[0].b, grid[0].value);
    for f in &grid[1..] {
        if f.value < best.1 {
            best = (f.b, f.value);
        }
    }
    best
}

/// `|rho(d)|^power` for `d = -(n-1)..=(n-1)`, stored at `d + n - 1`.
fn abs_lags(m: &CovarianceModel, n: usize, power: i32) -> Vec<f64> {
    (-(n as i64 - 1)..n as i64)
        .map(|d| m.rho(d).abs().powi(power))
        .collect()
}

fn brute(m: &CovarianceModel, n: usize, middle_power: i32) -> Result<f64> {
    if n > BRUTE_LIMIT {
        return Err(Error::InvalidArgument(format!(
            "brute-force sums are limited to n <= {BRUTE_LIMIT}, got {n}"
        )));
    }
    let r = abs_lags(m, n, 1);
    let mid = abs_lags(m, n, middle_power);
    let at = |v: &[f64], a: usize, b: usize| v[a + n - 1 - b];
    let mut acc = CompensatedSum::new();
    for i in 0..n {
        for j in 0..n {
            let rij = at(&r, i, j);
            for k in 0..n {
                let head = at(&mid, j, k) * rij;
                for l in 0..n {
                    acc.add(head * at(&r, k, l));
                }
            }
        }
    }
    Ok(acc.value() / (n * n) as f64)
}

/// `v^T A v / n^2` with `v = |R| 1` and `A` the Toeplitz matrix of
/// `|rho|^middle_power`: the quadruple sum factorizes over `i` and `l`.
fn fast(m: &CovarianceModel, n: usize, middle_power: i32) -> f64 {
    let lags: Vec<f64> = (0..n as i64).map(|k| m.rho(k).abs()).collect();
    let v = ToeplitzOperator::new(&lags).apply(&vec![1.0; n]);
    let mid: Vec<f64> = lags.iter().map(|r| r.powi(middle_power)).collect();
    let av = ToeplitzOperator::new(&mid).apply(&v);
    let dot: CompensatedSum = v.iter().zip(&av).map(|(a, b)| a * b).collect();
    dot.value() / (n as f64 * n as f64)
}

/// `(1/n^2) sum_{i,j,k,l < n} |rho(j-k) rho(i-j) rho(k-l)|`.
pub fn msg_sum_rank1(m: &CovarianceModel, n: usize, mode: SumMode) -> Result<f64> {
    check_n(n)?;
    match mode {
        SumMode::Fast => Ok(fast(m, n, 1)),
        SumMode::Brute => brute(m, n, 1),
    }
}

/// `(1/n^2) sum_{i,j,k,l < n} |rho(j-k)^2 rho(i-j) rho(k-l)|`.
pub fn msg_sum_rank2(m: &CovarianceModel, n: usize, mode: SumMode) -> Result<f64> {
    check_n(n)?;
    match mode {
        SumMode::Fast => Ok(fast(m, n, 2)),
        SumMode::Brute => brute(m, n, 2),
    }
}

/// `(4c/s) sqrt(sum)`.
pub fn msg_bound(c: f64, s: f64, sum: f64) -> Result<f64> {
    check_s(s)?;
    if !(sum >= 0.0) {
        return Err(Error::InvalidArgument(format!("sum {sum} must be nonnegative")));
    }
    Ok(4.0 * c / s * sum.sqrt())
}

fn convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    let out_len = a.len() + b.len() - 1;
    let size = out_len.next_power_of_two();
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(size);
    let inv = planner.plan_fft_inverse(size);
    let pad = |v: &[f64]| {
        let mut buf = vec![Complex::new(0.0, 0.0); size];
        for (z, &x) in buf.iter_mut().zip(v) {
            z.re = x;
        }
        buf
    };
    let (mut fa, mut fb) = (pad(a), pad(b));
    fwd.process(&mut fa);
    fwd.process(&mut fb);
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x *= y;
    }
    inv.process(&mut fa);
    fa[..out_len].iter().map(|z| z.re / size as f64).collect()
}

/// `(1/n^2) sum_{|D|<n} (n - |D|) (rho_n * rho_n * rho_n)(D)`, the
/// convolution relaxation of [`msg_sum_rank1`]. It lets the inner indices
/// leave `[0, n)`, so it dominates the exact sum.
pub fn convolution_envelope_rank1(m: &CovarianceModel, n: usize) -> Result<f64> {
    check_n(n)?;
    let r = abs_lags(m, n, 1);
    let triple = convolve(&convolve(&r, &r), &r);
    // triple[t] sits at lag t - 3(n - 1).
    let offset = 3 * (n - 1);
    let acc: CompensatedSum = (-(n as i64 - 1)..n as i64)
        .map(|d| (n as f64 - d.unsigned_abs() as f64) * triple[(offset as i64 + d) as usize].max(0.0))
        .collect();
    Ok(acc.value() / (n * n) as f64)
}

/// `(1/n^2) sum_{|D|<n} (n - |D|) (rho_n * 1_n)(D) (rho_n * rho_n^2)(D)`,
/// the convolution relaxation of [`msg_sum_rank2`].
pub fn convolution_envelope_rank2(m: &CovarianceModel, n: usize) -> Result<f64> {
    check_n(n)?;
    let r = abs_lags(m, n, 1);
    let r2 = abs_lags(m, n, 2);
    let ones = vec![1.0; 2 * n - 1];
    let with_ones = convolve(&r, &ones);
    let with_sq = convolve(&r, &r2);
    let offset = 2 * (n - 1);
    let acc: CompensatedSum = (-(n as i64 - 1)..n as i64)
        .map(|d| {
            let t = (offset as i64 + d) as usize;
            (n as f64 - d.unsigned_abs() as f64) * with_ones[t].max(0.0) * with_sq[t].max(0.0)
        })
        .collect();
    Ok(acc.value() / (n * n) as f64)
}

/// Outcome of the lower-bound check on the rank-2 quadruple sum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct S4Check {
    /// `(1/n) sum |rho(j-k)^2 rho(i-j) rho(k-l)|`.
    pub lhs: f64,
    /// `1 + sum_{l=1}^{floor(n/2)} |rho(l)|`.
    pub rhs: f64,
    pub holds: bool,
}

pub fn s4_lower_check(m: &CovarianceModel, n: usize) -> Result<S4Check> {
    let lhs = n as f64 * msg_sum_rank2(m, n, SumMode::Fast)?;
    let rhs = 1.0
        + (1..=(n / 2) as i64)
            .map(|l| m.rho(l).abs())
            .collect::<CompensatedSum>()
            .value();
    Ok(S4Check {
        lhs,
        rhs,
        holds: lhs >= rhs - 1e-10,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exp05() -> CovarianceModel {
        CovarianceModel::exponential(0.5).unwrap()
    }

    #[test]
    fn bound_i_examples() {
        let w = CovarianceModel::white();
        assert!((bound_i(1.0, 1.0, &w, 100).unwrap() - 0.4).abs() < 1e-15);
        assert!((bound_i(2.0, 0.5, &exp05(), 1).unwrap() - 16.0).abs() < 1e-15);
        assert!(matches!(bound_i(1.0, 0.0, &w, 10), Err(Error::DegenerateNormalization(_))));
    }

    #[test]
    fn bound_ii_examples() {
        let w = CovarianceModel::white();
        let inf = Sparsity::Infinite;
        assert!((bound_ii(1.0, 1.0, &w, 64, 1.0, inf).unwrap() - 0.5).abs() < 1e-15);
        let m = exp05();
        let l2 = lb_sum(&m, 50, 2.0).unwrap();
        let at2 = bound_ii(1.0, 1.0, &m, 50, 2.0, Sparsity::Finite(2)).unwrap();
        assert!((at2 - 4.0 * l2).abs() < 1e-12);
        assert!(matches!(
            bound_ii(1.0, 1.0, &w, 4, 1.0, Sparsity::Finite(1)),
            Err(Error::NotTwoSparse(_))
        ));
        assert!(bound_ii(1.0, 1.0, &w, 4, 2.5, inf).is_err());
    }

    #[test]
    fn best_b_prefers_one_for_white_noise() {
        let (b, v) = best_b(1.0, 1.0, &CovarianceModel::white(), 1000, 0.01, Sparsity::Infinite).unwrap();
        assert_eq!(b, 1.0);
        assert!((v - 4.0 / 1000f64.sqrt()).abs() < 1e-14);
        assert_eq!(b_grid(0.01).unwrap().len(), 101);
        assert_eq!(*b_grid(0.01).unwrap().last().unwrap(), 2.0);
    }

    #[test]
    fn white_noise_sums_are_one_over_n() {
        let w = CovarianceModel::white();
        for n in [1, 5, 32] {
            for mode in [SumMode::Fast, SumMode::Brute] {
                assert!((msg_sum_rank1(&w, n, mode).unwrap() - 1.0 / n as f64).abs() < 1e-14);
                assert!((msg_sum_rank2(&w, n, mode).unwrap() - 1.0 / n as f64).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn fast_matches_brute() {
        for n in [8, 16] {
            let fast = msg_sum_rank1(&exp05(), n, SumMode::Fast).unwrap();
            let brute = msg_sum_rank1(&exp05(), n, SumMode::Brute).unwrap();
            assert!((fast - brute).abs() <= 1e-10 * brute);
        }
        let p = CovarianceModel::power_law(0.8).unwrap();
        let fast = msg_sum_rank2(&p, 32, SumMode::Fast).unwrap();
        let brute = msg_sum_rank2(&p, 32, SumMode::Brute).unwrap();
        assert!((fast - brute).abs() <= 1e-10 * brute);
        assert!(msg_sum_rank1(&p, 65, SumMode::Brute).is_err());
    }

    #[test]
    fn envelopes_sit_between_sum_and_bound() {
        let m = CovarianceModel::power_law(0.8).unwrap();
        for n in [4, 16, 64] {
            let exact = msg_sum_rank1(&m, n, SumMode::Fast).unwrap();
            let env = convolution_envelope_rank1(&m, n).unwrap();
            let l1 = lb_sum(&m, n, 1.0).unwrap();
            assert!(exact <= env * (1.0 + 1e-12));
            assert!(env <= l1.powi(3) / n as f64 * (1.0 + 1e-12));

            let exact2 = msg_sum_rank2(&m, n, SumMode::Fast).unwrap();
            let env2 = convolution_envelope_rank2(&m, n).unwrap();
            assert!(exact2 <= env2 * (1.0 + 1e-12));
        }
        let w = CovarianceModel::white();
        assert!((convolution_envelope_rank1(&w, 10).unwrap() - 0.1).abs() < 1e-14);
    }

    #[test]
    fn msg_bound_examples() {
        assert_eq!(msg_bound(3.0, 2.0, 0.0).unwrap(), 0.0);
        assert!((msg_bound(1.0, 1.0, 0.25).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn s4_examples() {
        let w = s4_lower_check(&CovarianceModel::white(), 16).unwrap();
        assert!((w.lhs - 1.0).abs() < 1e-12 && w.rhs == 1.0 && w.holds);
        assert!(s4_lower_check(&exp05(), 64).unwrap().holds);
    }
}
