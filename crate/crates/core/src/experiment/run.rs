use serde::Serialize;

use super::config::ExperimentConfig;
use super::report::{attach_monte_carlo, bound_report, monte_carlo, BoundReport, Check, MonteCarloFields, MonteCarloSettings};
use crate::bounds::bound_ii_factors;
use crate::covariance::{sigma_limit, CovarianceModel};
use crate::error::{Error, Result, ResultExt};
use crate::gebelein::{rigid_coupling, run_coupling_suite, run_gebelein_suite, CouplingSuiteSummary, RigidCoupling, SuiteSummary};
use crate::hermite::SubordinatedFunction;
use crate::numeric::ols_slope;
use crate::simulate::{sample_autocovariance, MonteCarloBatch, PathSampler, SamplingMethod};

fn mc_settings(cfg: &ExperimentConfig) -> MonteCarloSettings {
    MonteCarloSettings {
        reps: cfg.reps,
        seed: cfg.seed,
        resamples: cfg.resamples,
        bins: cfg.bins,
    }
}

fn n_context(cfg: &ExperimentConfig, n: usize) -> String {
    format!("n = {n} ({})", cfg.location("n_grid"))
}

/// Deterministic reports, one per `n` of the grid.
pub fn run_bounds(cfg: &ExperimentConfig) -> Result<Vec<BoundReport>> {
    let f = cfg.function()?;
    let m = cfg.model()?;
    let b_values = cfg.b_values()?;
    let sigma = sigma_limit(f.expansion(), &m, cfg.lag_horizon);
    cfg.n_grid
        .iter()
        .map(|&n| {
            let mut r = bound_report(&f, &m, n, sigma.as_ref().ok(), &b_values, cfg.quad_order)
                .context(n_context(cfg, n))?;
            if let Err(e) = &sigma {
                r.notes.push(format!("sigma_limit: {e}"));
            }
            Ok(r)
        })
        .collect()
}

/// Samples kept from a Monte Carlo run, for the `samples/` directory.
#[derive(Debug, Clone)]
pub struct SampleSet {
    pub n: usize,
    pub vn: MonteCarloBatch,
    pub inner: Option<MonteCarloBatch>,
}

/// [`run_bounds`] with the Monte Carlo fields filled in.
pub fn run_full(cfg: &ExperimentConfig) -> Result<(Vec<BoundReport>, Vec<SampleSet>)> {
    let mut reports = run_bounds(cfg)?;
    let f = cfg.function()?;
    let m = cfg.model()?;
    let mut samples = Vec::new();
    for r in reports.iter_mut() {
        let (fields, vn, inner) = monte_carlo(&f, &m, r.n, &mc_settings(cfg)).context(n_context(cfg, r.n))?;
        attach_monte_carlo(r, fields);
        samples.push(SampleSet { n: r.n, vn, inner });
    }
    Ok((reports, samples))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AutocovarianceCheck {
    pub lag: usize,
    pub rho: f64,
    pub estimate: f64,
    pub std_error: f64,
    pub within_3se: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationReport {
    pub model: String,
    pub n: usize,
    pub reps: usize,
    pub seed: u64,
    pub sampling_method: SamplingMethod,
    pub min_embedding_eigenvalue: f64,
    pub autocovariance: Vec<AutocovarianceCheck>,
    pub function: Option<String>,
    pub mc: Option<MonteCarloFields>,
    pub checks: Vec<Check>,
}

impl SimulationReport {
    pub fn all_hold(&self) -> bool {
        self.checks.iter().all(|c| c.holds)
    }
}

/// Sample autocovariances against `rho(k)` for `k <= max_lag`, each within
/// three standard errors.
pub fn autocovariance_checks(
    m: &CovarianceModel,
    n: usize,
    max_lag: usize,
    reps: usize,
    seed: u64,
) -> Result<Vec<AutocovarianceCheck>> {
    Ok(sample_autocovariance(m, n, max_lag.min(n - 1), reps, seed)?
        .into_iter()
        .map(|a| {
            let rho = m.rho(a.lag as i64);
            AutocovarianceCheck {
                lag: a.lag,
                rho,
                estimate: a.mean,
                std_error: a.std_error,
                within_3se: (a.mean - rho).abs() <= 3.0 * a.std_error,
            }
        })
        .collect())
}

/// Path-level checks for every `n`, plus `V_n` samples and distances when a
/// function is configured.
pub fn run_simulate(cfg: &ExperimentConfig) -> Result<(Vec<SimulationReport>, Vec<SampleSet>)> {
    let m = cfg.model()?;
    let f: Option<SubordinatedFunction> = cfg.function.as_ref().map(|_| cfg.function()).transpose()?;
    let mut reports = Vec::new();
    let mut samples = Vec::new();
    for &n in &cfg.n_grid {
        let ctx = n_context(cfg, n);
        let sampler = PathSampler::new(&m, n).context(ctx.clone())?;
        let autocovariance = autocovariance_checks(&m, n, cfg.max_lag, cfg.reps, cfg.seed).context(ctx.clone())?;
        let bad = autocovariance.iter().filter(|a| !a.within_3se).count();
        let mut checks = vec![Check::new(
            "autocovariance_within_3se",
            bad == 0,
            format!("{bad} of {} lags outside 3 SE", autocovariance.len()),
        )];
        let mut mc = None;
        if let Some(f) = &f {
            let (fields, vn, inner) = monte_carlo(f, &m, n, &mc_settings(cfg)).context(ctx)?;
            if let (Some(mean), Some(se)) = (fields.inner_mean, fields.inner_mean_se) {
                checks.push(Check::new(
                    "inner_mean_is_one",
                    (mean - 1.0).abs() <= 4.0 * se + 1e-12,
                    format!("|{mean:.6} - 1| <= 4 * {se:.3e}"),
                ));
            }
            mc = Some(fields);
            samples.push(SampleSet { n, vn, inner });
        }
        reports.push(SimulationReport {
            model: m.label(),
            n,
            reps: cfg.reps,
            seed: cfg.seed,
            sampling_method: sampler.method(),
            min_embedding_eigenvalue: sampler.min_embedding_eigenvalue(),
            autocovariance,
            function: f.as_ref().map(|f| f.label().to_string()),
            mc,
            checks,
        });
    }
    Ok((reports, samples))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlopeFit {
    pub quantity: String,
    pub slope: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub n: usize,
    pub bound_i: Option<f64>,
    pub bound_ii_b1: Option<f64>,
    pub best_b: Option<f64>,
    pub best_bound_ii: Option<f64>,
    pub msg_bound: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub function: String,
    pub model: String,
    pub rows: Vec<SweepRow>,
    pub slopes: Vec<SlopeFit>,
}

/// Least-squares slope of `log y` against `log n` for one column.
pub fn log_log_slope(ns: &[usize], ys: &[f64]) -> (f64, f64) {
    let x: Vec<f64> = ns.iter().map(|&n| (n as f64).ln()).collect();
    let y: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    ols_slope(&x, &y)
}

/// Bound values over the `n` grid with their fitted rates.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<(SweepReport, Vec<BoundReport>)> {
    if cfg.n_grid.len() < 3 {
        return Err(Error::Config {
            location: cfg.location("n_grid"),
            message: "a sweep needs at least three sizes".into(),
        });
    }
    let reports = run_bounds(cfg)?;
    let m = cfg.model()?;
    let rows: Vec<SweepRow> = reports
        .iter()
        .map(|r| SweepRow {
            n: r.n,
            bound_i: r.bound_i,
            bound_ii_b1: r.c_phi.and_then(|c| {
                bound_ii_factors(c, r.sigma_n_sq, &m, r.n, 1.0, r.sparsity)
                    .ok()
                    .map(|f| f.value)
            }),
            best_b: r.best_b,
            best_bound_ii: r.best_bound_ii,
            msg_bound: r.msg_bound,
        })
        .collect();
    let ns: Vec<usize> = rows.iter().map(|r| r.n).collect();
    let mut slopes = Vec::new();
    let columns: [(&str, fn(&SweepRow) -> Option<f64>); 4] = [
        ("bound_i", |r| r.bound_i),
        ("bound_ii_b1", |r| r.bound_ii_b1),
        ("best_bound_ii", |r| r.best_bound_ii),
        ("msg_bound", |r| r.msg_bound),
    ];
    for (name, get) in columns {
        if let Some(ys) = rows.iter().map(get).collect::<Option<Vec<f64>>>() {
            let (slope, std_error) = log_log_slope(&ns, &ys);
            slopes.push(SlopeFit {
                quantity: name.to_string(),
                slope,
                std_error,
            });
        }
    }
    let first = &reports[0];
    Ok((
        SweepReport {
            function: first.function.clone(),
            model: first.model.clone(),
            rows,
            slopes,
        },
        reports,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairReport {
    pub theta: f64,
    pub coupling: Option<RigidCoupling>,
    pub coupling_error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GebeleinReport {
    pub suite: SuiteSummary,
    pub coupling_suite: CouplingSuiteSummary,
    pub pair: Option<PairReport>,
    pub checks: Vec<Check>,
}

impl GebeleinReport {
    pub fn all_hold(&self) -> bool {
        self.checks.iter().all(|c| c.holds)
    }
}

pub const COUPLING_SUITE_COUNT: usize = 100;
pub const COUPLING_THETA_RANGE: (f64, f64) = (0.05, 0.95);

/// The randomized Gebelein suite, the coupling suite, and the configured
/// pair if any.
pub fn run_gebelein(cfg: &ExperimentConfig) -> Result<GebeleinReport> {
    let suite = run_gebelein_suite(cfg.suite_count, cfg.seed, cfg.suite_dim).context(cfg.location("suite_dim"))?;
    let (lo, hi) = COUPLING_THETA_RANGE;
    let coupling_suite = run_coupling_suite(COUPLING_SUITE_COUNT, cfg.seed, lo, hi)?;
    let pair = cfg.pair()?.map(|p| match rigid_coupling(&p) {
        Ok(c) => PairReport {
            theta: p.theta(),
            coupling: Some(c),
            coupling_error: None,
        },
        Err(e) => PairReport {
            theta: p.theta(),
            coupling: None,
            coupling_error: Some(e.to_string()),
        },
    });
    let checks = vec![
        Check::new(
            "gebelein_suite",
            suite.all_passed(),
            format!(
                "{} of {} instances pass, {} tight, min slack {:.3e}",
                suite.passed, suite.count, suite.tight, suite.min_slack
            ),
        ),
        Check::new(
            "coupling_suite",
            coupling_suite.all_passed(),
            format!(
                "max residuals {:.3e} / {:.3e}, max ||U|| - theta^2 = {:.3e}",
                coupling_suite.max_residual_i, coupling_suite.max_residual_ii, coupling_suite.max_u_excess
            ),
        ),
    ];
    Ok(GebeleinReport {
        suite,
        coupling_suite,
        pair,
        checks,
    })
}
