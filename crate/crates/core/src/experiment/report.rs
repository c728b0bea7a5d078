use serde::Serialize;

use crate::bounds::{
    argmin, bound_i, bound_ii_grid, msg_bound, msg_sum_rank1, msg_sum_rank2, s4_lower_check,
    BoundIiFactors, S4Check, SumMode,
};
use crate::covariance::{lb_sum, sigma_n, CovarianceModel, SigmaLimit};
use crate::error::Result;
use crate::hermite::{c_phi, Sparsity, SubordinatedFunction};
use crate::simulate::{sample_vn, sample_vn_and_inner, MonteCarloBatch, PathSampler, SamplingMethod};
use crate::stats::{kolmogorov, tv_estimate, BinRule, DistanceEstimate};

/// Slack allowed when comparing two deterministic bounds.
const BOUND_ORDER_TOL: f64 = 1e-12;
/// Bootstrap seeds are offset from path seeds so the two streams differ.
const BOOTSTRAP_SEED_OFFSET: u64 = 0xB007_5EED;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub holds: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: &str, holds: bool, detail: String) -> Self {
        Self {
            name: name.to_string(),
            holds,
            detail,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonteCarloFields {
    pub reps: usize,
    pub seed: u64,
    pub sampling_method: SamplingMethod,
    pub vn_mean: f64,
    pub vn_variance: f64,
    pub mc_dtv: DistanceEstimate,
    pub mc_kolmogorov: DistanceEstimate,
    /// Mean of `<DV_n, u_n>`, which should be 1.
    pub inner_mean: Option<f64>,
    pub inner_mean_se: Option<f64>,
    /// `2 sqrt(Var <DV_n, u_n>)`.
    pub mc_two_sqrt_var: Option<f64>,
    pub mc_two_sqrt_var_se: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub function: String,
    pub model: String,
    pub n: usize,
    pub rank: Option<usize>,
    pub sparsity: Sparsity,
    pub tail_mass: f64,
    pub sigma_n_sq: f64,
    pub sigma_limit_sq: Option<f64>,
    pub sigma_limit_tail_bound: Option<f64>,
    pub c_phi: Option<f64>,
    /// `sum_{|k|<n} |rho(k)|`.
    pub l1_sum: f64,
    pub bound_i: Option<f64>,
    pub bound_ii: Vec<BoundIiFactors>,
    pub best_b: Option<f64>,
    pub best_bound_ii: Option<f64>,
    pub msg_rank1_sum: f64,
    pub msg_rank2_sum: f64,
    /// Which quadruple sum enters `msg_bound`: `rank2` for 2-sparse functions.
    pub msg_sum_used: &'static str,
    pub msg_bound: Option<f64>,
    pub lower_bound_s4: S4Check,
    pub mc: Option<MonteCarloFields>,
    /// Quantities that could not be computed, with the reason.
    pub notes: Vec<String>,
    pub checks: Vec<Check>,
}

impl BoundReport {
    pub fn all_hold(&self) -> bool {
        self.checks.iter().all(|c| c.holds)
    }

    /// Smallest available bound among (i) and the best (ii).
    pub fn min_bound(&self) -> Option<f64> {
        match (self.bound_i, self.best_bound_ii) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        }
    }
}

/// Deterministic part of the report.
pub fn bound_report(
    f: &SubordinatedFunction,
    m: &CovarianceModel,
    n: usize,
    sigma: Option<&SigmaLimit>,
    b_values: &[f64],
    quad_order: usize,
) -> Result<BoundReport> {
    let e = f.expansion();
    let s = sigma_n(e, m, n)?;
    let sparsity = e.sparsity();
    let mut notes = Vec::new();
    let c = match c_phi(f, quad_order) {
        Ok(c) => Some(c),
        Err(err) => {
            notes.push(format!("c_phi: {err}"));
            None
        }
    };
    let bi = c.map(|c| bound_i(c, s, m, n)).transpose()?;
    let grid = match c {
        Some(c) => match bound_ii_grid(c, s, m, n, b_values, sparsity) {
            Ok(g) => g,
            Err(err) => {
                notes.push(format!("bound_ii: {err}"));
                Vec::new()
            }
        },
        None => Vec::new(),
    };
    let best = (!grid.is_empty()).then(|| argmin(&grid));
    let rank1 = msg_sum_rank1(m, n, SumMode::Fast)?;
    let rank2 = msg_sum_rank2(m, n, SumMode::Fast)?;
    let two_sparse = sparsity.is_at_least(2);
    let used = if two_sparse { rank2 } else { rank1 };
    let msg = c.map(|c| msg_bound(c, s, used)).transpose()?;
    let s4 = s4_lower_check(m, n)?;

    let mut checks = vec![Check::new(
        "s4_lower_bound",
        s4.holds,
        format!("lhs {:.6e} >= rhs {:.6e}", s4.lhs, s4.rhs),
    )];
    match (msg, bi) {
        (Some(msg), Some(bi)) => checks.push(Check::new(
            "msg_bound_le_bound_i",
            msg <= bi * (1.0 + BOUND_ORDER_TOL),
            format!("{msg:.6e} <= {bi:.6e}"),
        )),
        _ => checks.push(Check::new(
            "bounds_available",
            false,
            notes.join("; "),
        )),
    }
    if let (Some(msg), Some((b, v))) = (msg, best) {
        let worst = grid
            .iter()
            .map(|g| (g.value - msg) / g.value)
            .fold(f64::INFINITY, f64::min);
        checks.push(Check::new(
            "msg_bound_le_bound_ii",
            worst >= -BOUND_ORDER_TOL,
            format!("{msg:.6e} <= bound_ii over {} grid points (best {v:.6e} at b = {b})", grid.len()),
        ));
    }
    Ok(BoundReport {
        function: f.label().to_string(),
        model: m.label(),
        n,
        rank: e.rank(),
        sparsity,
        tail_mass: e.tail_mass(),
        sigma_n_sq: s,
        sigma_limit_sq: sigma.map(|x| x.value),
        sigma_limit_tail_bound: sigma.map(|x| x.lag_tail_bound + x.expansion_tail_bound),
        c_phi: c,
        l1_sum: lb_sum(m, n, 1.0)?,
        bound_i: bi,
        bound_ii: grid,
        best_b: best.map(|x| x.0),
        best_bound_ii: best.map(|x| x.1),
        msg_rank1_sum: rank1,
        msg_rank2_sum: rank2,
        msg_sum_used: if two_sparse { "rank2" } else { "rank1" },
        msg_bound: msg,
        lower_bound_s4: s4,
        mc: None,
        notes,
        checks,
    })
}

/// Monte Carlo settings shared by every `n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloSettings {
    pub reps: usize,
    pub seed: u64,
    pub resamples: usize,
    pub bins: BinRule,
}

/// Samples `V_n` (and `<DV_n, u_n>` when `phi` has a weak derivative),
/// estimates the distances and returns the batches for output.
pub fn monte_carlo(
    f: &SubordinatedFunction,
    m: &CovarianceModel,
    n: usize,
    mc: &MonteCarloSettings,
) -> Result<(MonteCarloFields, MonteCarloBatch, Option<MonteCarloBatch>)> {
    let method = PathSampler::new(m, n)?.method();
    let (vn, inner) = if f.has_weak_derivative() {
        let (vn, inner) = sample_vn_and_inner(f, m, n, mc.reps, mc.seed)?;
        (vn, Some(inner))
    } else {
        (sample_vn(f, m, n, mc.reps, mc.seed)?, None)
    };
    let dtv = tv_estimate(&vn.samples, mc.bins, mc.resamples, mc.seed.wrapping_add(BOOTSTRAP_SEED_OFFSET))?;
    let ks = kolmogorov(&vn.samples)?;
    let fields = MonteCarloFields {
        reps: mc.reps,
        seed: mc.seed,
        sampling_method: method,
        vn_mean: vn.mean,
        vn_variance: vn.variance,
        mc_dtv: dtv,
        mc_kolmogorov: ks,
        inner_mean: inner.as_ref().map(|b| b.mean),
        inner_mean_se: inner.as_ref().map(|b| b.std_error),
        mc_two_sqrt_var: inner.as_ref().map(|b| 2.0 * b.variance.sqrt()),
        mc_two_sqrt_var_se: inner.as_ref().map(|b| 2.0 * b.sd_std_error()),
    };
    Ok((fields, vn, inner))
}

/// Attaches Monte Carlo fields and the statistical links of the chain
/// `d_TV <= 2 sqrt(Var <DV_n, u_n>) <= msg_bound`.
pub fn attach_monte_carlo(report: &mut BoundReport, fields: MonteCarloFields) {
    let dtv = &fields.mc_dtv;
    let low = dtv.value - (dtv.ci_width() + dtv.bias_bound);
    if let (Some(t), Some(se)) = (fields.mc_two_sqrt_var, fields.mc_two_sqrt_var_se) {
        let high = t + 3.0 * se;
        report.checks.push(Check::new(
            "dtv_le_two_sqrt_var",
            low <= high,
            format!("{low:.6e} <= {high:.6e}"),
        ));
        if let Some(msg) = report.msg_bound {
            report.checks.push(Check::new(
                "two_sqrt_var_le_msg_bound",
                high <= msg,
                format!("{high:.6e} <= {msg:.6e}"),
            ));
        }
    }
    if let (Some(mean), Some(se)) = (fields.inner_mean, fields.inner_mean_se) {
        report.checks.push(Check::new(
            "inner_mean_is_one",
            (mean - 1.0).abs() <= 4.0 * se + 1e-12,
            format!("|{mean:.6} - 1| <= 4 * {se:.3e}"),
        ));
    }
    if let Some(bound) = report.min_bound() {
        report.checks.push(Check::new(
            "dtv_le_bound",
            low <= bound,
            format!("{low:.6e} <= {bound:.6e}"),
        ));
    }
    report.mc = Some(fields);
}
