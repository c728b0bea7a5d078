//! Output layout: `report.json`, CSV tables, `samples/*.csv` and a
//! `manifest.json` with the config hash, the code version and the digest of
//! every file written. Nothing time- or host-dependent is recorded, so equal
//! configs give byte-identical directories.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use super::config::ExperimentConfig;
use super::report::BoundReport;
use super::run::{run_bounds, run_full, run_gebelein, run_simulate, run_sweep, SampleSet};
use crate::error::Result;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verb {
    Bounds,
    Simulate,
    Full,
    Gebelein,
    Sweep,
}

impl Verb {
    pub fn name(self) -> &'static str {
        match self {
            Verb::Bounds => "bounds",
            Verb::Simulate => "simulate",
            Verb::Full => "full",
            Verb::Gebelein => "gebelein",
            Verb::Sweep => "sweep",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub all_hold: bool,
    /// Names of the checks that failed, `report index: check`.
    pub failed: Vec<String>,
    /// Short human-readable results, such as fitted slopes.
    pub lines: Vec<String>,
    pub files: Vec<PathBuf>,
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    verb: Verb,
    version: &'static str,
    config_hash: String,
    all_hold: bool,
    result: &'a T,
}

#[derive(Serialize)]
struct FileDigest {
    path: String,
    sha256: String,
}

#[derive(Serialize)]
struct Manifest<'a> {
    verb: Verb,
    version: &'static str,
    config_hash: String,
    config: &'a str,
    files: Vec<FileDigest>,
}

/// Collects files in write order so the manifest is deterministic.
struct Writer {
    root: PathBuf,
    written: Vec<PathBuf>,
}

impl Writer {
    fn new(root: &Path) -> Result<Self> {
        fs::create_dir_all(root)?;
        Ok(Self {
            root: root.to_path_buf(),
            written: Vec::new(),
        })
    }

    fn bytes(&mut self, rel: &str, data: &[u8]) -> Result<()> {
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&path, data)?;
        self.written.push(PathBuf::from(rel));
        Ok(())
    }

    fn json<T: Serialize>(&mut self, rel: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.bytes(rel, text.as_bytes())
    }

    fn csv(&mut self, rel: &str, header: &[&str], rows: Vec<Vec<String>>) -> Result<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header)?;
        for row in rows {
            w.write_record(row)?;
        }
        let data = w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?;
        self.bytes(rel, &data)
    }

    fn samples(&mut self, sets: &[SampleSet]) -> Result<()> {
        for s in sets {
            let rows = |b: &crate::simulate::MonteCarloBatch| {
                b.samples
                    .iter()
                    .enumerate()
                    .map(|(i, v)| vec![i.to_string(), v.to_string()])
                    .collect()
            };
            self.csv(&format!("samples/vn_n{}.csv", s.n), &["rep_index", "value"], rows(&s.vn))?;
            if let Some(inner) = &s.inner {
                self.csv(&format!("samples/inner_n{}.csv", s.n), &["rep_index", "value"], rows(inner))?;
            }
        }
        Ok(())
    }

    fn finish(mut self, verb: Verb, cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
        let files = self
            .written
            .iter()
            .map(|rel| {
                let data = fs::read(self.root.join(rel))?;
                Ok(FileDigest {
                    path: rel.display().to_string(),
                    sha256: hex::encode(Sha256::digest(&data)),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let canonical = cfg.canonical();
        self.json(
            "manifest.json",
            &Manifest {
                verb,
                version: VERSION,
                config_hash: cfg.hash(),
                config: &canonical,
                files,
            },
        )?;
        Ok(self.written.iter().map(|p| self.root.join(p)).collect())
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub const BOUNDS_CSV_HEADER: &[&str] = &[
    "function",
    "model",
    "n",
    "rank",
    "sparsity",
    "sigma_n_sq",
    "c_phi",
    "l1_sum",
    "bound_i",
    "b",
    "prefactor",
    "n_exponent",
    "l2_sum",
    "lb_sum",
    "bound_ii",
    "best_b",
    "msg_rank1_sum",
    "msg_rank2_sum",
    "msg_bound",
    "s4_lhs",
    "s4_rhs",
];

/// One row per `(n, b)`; a single row with empty `b` columns when the second
/// bound does not apply. Each row carries every input of both bounds.
pub fn bounds_csv_rows(reports: &[BoundReport]) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    for r in reports {
        let head = vec![
            r.function.clone(),
            r.model.clone(),
            r.n.to_string(),
            r.rank.map(|d| d.to_string()).unwrap_or_default(),
            r.sparsity.to_string(),
            r.sigma_n_sq.to_string(),
            opt(r.c_phi),
            r.l1_sum.to_string(),
            opt(r.bound_i),
        ];
        let tail = vec![
            opt(r.best_b),
            r.msg_rank1_sum.to_string(),
            r.msg_rank2_sum.to_string(),
            opt(r.msg_bound),
            r.lower_bound_s4.lhs.to_string(),
            r.lower_bound_s4.rhs.to_string(),
        ];
        let middles: Vec<Vec<String>> = if r.bound_ii.is_empty() {
            vec![vec![String::new(); 6]]
        } else {
            r.bound_ii
                .iter()
                .map(|f| {
                    vec![
                        f.b.to_string(),
                        f.prefactor.to_string(),
                        f.n_exponent.to_string(),
                        f.l2_sum.to_string(),
                        f.lb_sum.to_string(),
                        f.value.to_string(),
                    ]
                })
                .collect()
        };
        for mid in middles {
            rows.push([head.clone(), mid, tail.clone()].concat());
        }
    }
    rows
}

fn failed_checks<'a>(checks: impl Iterator<Item = (usize, &'a super::report::Check)>) -> Vec<String> {
    checks
        .filter(|(_, c)| !c.holds)
        .map(|(i, c)| format!("{i}: {} ({})", c.name, c.detail))
        .collect()
}

fn envelope<'a, T: Serialize>(verb: Verb, cfg: &ExperimentConfig, all_hold: bool, result: &'a T) -> Envelope<'a, T> {
    Envelope {
        verb,
        version: VERSION,
        config_hash: cfg.hash(),
        all_hold,
        result,
    }
}

/// Runs a verb and writes its outputs under `cfg.out`.
pub fn execute(verb: Verb, cfg: &ExperimentConfig) -> Result<Outcome> {
    let mut w = Writer::new(&cfg.out)?;
    let mut lines = Vec::new();
    let failed = match verb {
        Verb::Bounds | Verb::Full => {
            let (reports, samples) = if verb == Verb::Bounds {
                (run_bounds(cfg)?, Vec::new())
            } else {
                run_full(cfg)?
            };
            let failed = failed_checks(reports.iter().enumerate().flat_map(|(i, r)| r.checks.iter().map(move |c| (i, c))));
            w.json("report.json", &envelope(verb, cfg, failed.is_empty(), &reports))?;
            w.csv("bounds.csv", BOUNDS_CSV_HEADER, bounds_csv_rows(&reports))?;
            w.samples(&samples)?;
            failed
        }
        Verb::Simulate => {
            let (reports, samples) = run_simulate(cfg)?;
            let failed = failed_checks(reports.iter().enumerate().flat_map(|(i, r)| r.checks.iter().map(move |c| (i, c))));
            w.json("report.json", &envelope(verb, cfg, failed.is_empty(), &reports))?;
            let rows = reports
                .iter()
                .flat_map(|r| {
                    r.autocovariance.iter().map(move |a| {
                        vec![
                            r.n.to_string(),
                            a.lag.to_string(),
                            a.rho.to_string(),
                            a.estimate.to_string(),
                            a.std_error.to_string(),
                            a.within_3se.to_string(),
                        ]
                    })
                })
                .collect();
            w.csv(
                "autocovariance.csv",
                &["n", "lag", "rho", "estimate", "std_error", "within_3se"],
                rows,
            )?;
            w.samples(&samples)?;
            failed
        }
        Verb::Sweep => {
            let (sweep, reports) = run_sweep(cfg)?;
            lines.extend(
                sweep
                    .slopes
                    .iter()
                    .map(|s| format!("slope {} = {:.4} +/- {:.4}", s.quantity, s.slope, s.std_error)),
            );
            let failed = failed_checks(reports.iter().enumerate().flat_map(|(i, r)| r.checks.iter().map(move |c| (i, c))));
            w.json("report.json", &envelope(verb, cfg, failed.is_empty(), &sweep))?;
            let rows = sweep
                .rows
                .iter()
                .map(|r| {
                    vec![
                        r.n.to_string(),
                        opt(r.bound_i),
                        opt(r.bound_ii_b1),
                        opt(r.best_b),
                        opt(r.best_bound_ii),
                        opt(r.msg_bound),
                    ]
                })
                .collect();
            w.csv(
                "sweep.csv",
                &["n", "bound_i", "bound_ii_b1", "best_b", "best_bound_ii", "msg_bound"],
                rows,
            )?;
            w.csv("bounds.csv", BOUNDS_CSV_HEADER, bounds_csv_rows(&reports))?;
            failed
        }
        Verb::Gebelein => {
            let report = run_gebelein(cfg)?;
            let failed = failed_checks(report.checks.iter().map(|c| (0, c)));
            w.json("report.json", &envelope(verb, cfg, failed.is_empty(), &report))?;
            let rows = report
                .suite
                .instances
                .iter()
                .map(|r| {
                    vec![
                        r.index.to_string(),
                        serde_json::to_value(r.kind)
                            .ok()
                            .and_then(|v| v.as_str().map(str::to_string))
                            .unwrap_or_default(),
                        r.d1.to_string(),
                        r.d2.to_string(),
                        r.theta.to_string(),
                        r.rank.to_string(),
                        opt(r.check.map(|c| c.lhs)),
                        opt(r.check.map(|c| c.rhs)),
                        r.check.map(|c| c.tight.to_string()).unwrap_or_default(),
                        r.passed().to_string(),
                    ]
                })
                .collect();
            w.csv(
                "gebelein.csv",
                &["index", "kind", "d1", "d2", "theta", "rank", "lhs", "rhs", "tight", "passed"],
                rows,
            )?;
            failed
        }
    };
    let files = w.finish(verb, cfg)?;
    Ok(Outcome {
        all_hold: failed.is_empty(),
        failed,
        lines,
        files,
    })
}
