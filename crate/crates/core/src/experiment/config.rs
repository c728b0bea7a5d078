//! Flat `key = value` experiment configuration.
//!
//! Blank lines and `#` comments are ignored. Every key may appear at most
//! once and unknown keys are errors.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::bounds::{b_grid, DEFAULT_B_STEP};
use crate::covariance::{CovarianceModel, DEFAULT_LAG_HORIZON};
use crate::error::{Error, Result};
use crate::gebelein::{matrix_from_rows, SubspacePair};
use crate::hermite::{ExpansionConfig, SubordinatedFunction};
use crate::stats::{BinRule, DEFAULT_RESAMPLES};

pub const KEYS: &[&str] = &[
    "function",
    "model",
    "n_grid",
    "reps",
    "seed",
    "b_step",
    "b_grid",
    "truncation",
    "quad_order",
    "lag_horizon",
    "resamples",
    "bins",
    "max_lag",
    "suite_count",
    "suite_dim",
    "pair",
    "out",
];

#[derive(Debug, Clone, PartialEq)]
pub enum BGrid {
    Step(f64),
    Values(Vec<f64>),
}

/// Gram blocks of a subspace pair, as rows.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct PairSpec {
    pub g1: Vec<Vec<f64>>,
    pub g2: Vec<Vec<f64>>,
    pub g12: Vec<Vec<f64>>,
}

impl PairSpec {
    pub fn build(&self) -> Result<SubspacePair> {
        SubspacePair::new(
            matrix_from_rows(&self.g1)?,
            matrix_from_rows(&self.g2)?,
            matrix_from_rows(&self.g12)?,
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub function: Option<String>,
    pub model: Option<String>,
    pub n_grid: Vec<usize>,
    pub reps: usize,
    pub seed: u64,
    pub b_grid: BGrid,
    pub truncation: usize,
    pub quad_order: usize,
    pub lag_horizon: usize,
    pub resamples: usize,
    pub bins: BinRule,
    pub max_lag: usize,
    pub suite_count: usize,
    pub suite_dim: usize,
    pub pair: Option<String>,
    pub out: PathBuf,
    /// Where each key was set, for error messages.
    locations: BTreeMap<String, String>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let e = ExpansionConfig::default();
        Self {
            function: None,
            model: None,
            n_grid: vec![1024],
            reps: 10_000,
            seed: 0,
            b_grid: BGrid::Step(DEFAULT_B_STEP),
            truncation: e.truncation,
            quad_order: e.quad_order,
            lag_horizon: DEFAULT_LAG_HORIZON,
            resamples: DEFAULT_RESAMPLES,
            bins: BinRule::FreedmanDiaconis,
            max_lag: 10,
            suite_count: 200,
            suite_dim: 3,
            pair: None,
            out: PathBuf::from("out"),
            locations: BTreeMap::new(),
        }
    }
}

fn parse_n(item: &str) -> Option<usize> {
    match item.split_once('^') {
        Some((base, exp)) => {
            let base: usize = base.trim().parse().ok()?;
            let exp: u32 = exp.trim().parse().ok()?;
            base.checked_pow(exp)
        }
        None => item.parse().ok(),
    }
}

fn parse_list<T>(value: &str, item: impl Fn(&str) -> Option<T>) -> Option<Vec<T>> {
    value.split(',').map(|s| item(s.trim())).collect()
}

impl ExperimentConfig {
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config {
            location: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn parse(text: &str, source: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let location = format!("{source}:{}", i + 1);
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Config {
                location: location.clone(),
                message: format!("expected `key = value`, found `{line}`"),
            })?;
            cfg.set(key.trim(), value.trim(), &location)?;
        }
        Ok(cfg)
    }

    /// Sets one key, as if it appeared at `location`.
    pub fn set(&mut self, key: &str, value: &str, location: &str) -> Result<()> {
        let err = |message: String| Error::Config {
            location: location.to_string(),
            message,
        };
        if !KEYS.contains(&key) {
            return Err(err(format!("unknown key `{key}`")));
        }
        if let Some(prev) = self.locations.get(key) {
            return Err(err(format!("key `{key}` already set at {prev}")));
        }
        let bad = |what: &str| err(format!("`{key}`: expected {what}, found `{value}`"));
        match key {
            "function" => self.function = Some(value.to_string()),
            "model" => self.model = Some(value.to_string()),
            "n_grid" => {
                let grid = parse_list(value, parse_n).ok_or_else(|| bad("a list of sizes"))?;
                if grid.is_empty() || grid[0] == 0 || grid.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(err("`n_grid` must be positive and strictly increasing".into()));
                }
                self.n_grid = grid;
            }
            "reps" => self.reps = value.parse().map_err(|_| bad("an integer"))?,
            "seed" => self.seed = value.parse().map_err(|_| bad("an unsigned integer"))?,
            "b_step" | "b_grid" => {
                let other = if key == "b_step" { "b_grid" } else { "b_step" };
                if self.locations.contains_key(other) {
                    return Err(err("`b_step` and `b_grid` are mutually exclusive".into()));
                }
                if key == "b_step" {
                    let step: f64 = value.parse().map_err(|_| bad("a number"))?;
                    b_grid(step).map_err(|e| err(e.to_string()))?;
                    self.b_grid = BGrid::Step(step);
                } else {
                    let values = parse_list(value, |s| s.parse::<f64>().ok()).ok_or_else(|| bad("a list of numbers"))?;
                    if values.iter().any(|b| !(1.0..=2.0).contains(b)) {
                        return Err(err("`b_grid` values must lie in [1, 2]".into()));
                    }
                    self.b_grid = BGrid::Values(values);
                }
            }
            "truncation" => self.truncation = value.parse().map_err(|_| bad("an integer"))?,
            "quad_order" => self.quad_order = value.parse().map_err(|_| bad("an integer"))?,
            "lag_horizon" => self.lag_horizon = value.parse().map_err(|_| bad("an integer"))?,
            "resamples" => self.resamples = value.parse().map_err(|_| bad("an integer"))?,
            "bins" => {
                self.bins = if value == "fd" {
                    BinRule::FreedmanDiaconis
                } else {
                    BinRule::Fixed(value.parse().map_err(|_| bad("`fd` or a bin count"))?)
                }
            }
            "max_lag" => self.max_lag = value.parse().map_err(|_| bad("an integer"))?,
            "suite_count" => self.suite_count = value.parse().map_err(|_| bad("an integer"))?,
            "suite_dim" => self.suite_dim = value.parse().map_err(|_| bad("an integer"))?,
            "pair" => {
                let spec: PairSpec = serde_json::from_str(value).map_err(|e| err(format!("`pair`: {e}")))?;
                spec.build().map_err(|e| err(e.to_string()))?;
                self.pair = Some(value.to_string());
            }
            "out" => self.out = PathBuf::from(value),
            _ => unreachable!(),
        }
        self.locations.insert(key.to_string(), location.to_string());
        Ok(())
    }

    /// Like [`Self::set`] but replaces an earlier value; used for command-line
    /// overrides.
    pub fn override_key(&mut self, key: &str, value: &str, location: &str) -> Result<()> {
        self.locations.remove(key);
        if key == "b_step" || key == "b_grid" {
            self.locations.remove("b_step");
            self.locations.remove("b_grid");
        }
        self.set(key, value, location)
    }

    /// Location of a key for error context; `default` when unset.
    pub fn location(&self, key: &str) -> String {
        self.locations
            .get(key)
            .cloned()
            .unwrap_or_else(|| format!("default `{key}`"))
    }

    fn required<'a>(&self, value: &'a Option<String>, key: &str) -> Result<&'a str> {
        value.as_deref().ok_or_else(|| Error::Config {
            location: key.to_string(),
            message: format!("`{key}` is required for this verb"),
        })
    }

    pub fn expansion_config(&self) -> ExpansionConfig {
        ExpansionConfig {
            truncation: self.truncation,
            quad_order: self.quad_order,
            ..ExpansionConfig::default()
        }
    }

    pub fn function(&self) -> Result<SubordinatedFunction> {
        let spec = self.required(&self.function, "function")?;
        SubordinatedFunction::from_catalog(spec, &self.expansion_config()).map_err(|e| Error::Config {
            location: self.location("function"),
            message: e.to_string(),
        })
    }

    pub fn model(&self) -> Result<CovarianceModel> {
        let spec = self.required(&self.model, "model")?;
        CovarianceModel::parse(spec).map_err(|e| Error::Config {
            location: self.location("model"),
            message: e.to_string(),
        })
    }

    pub fn b_values(&self) -> Result<Vec<f64>> {
        match &self.b_grid {
            BGrid::Step(step) => b_grid(*step),
            BGrid::Values(v) => Ok(v.clone()),
        }
    }

    pub fn pair(&self) -> Result<Option<SubspacePair>> {
        self.pair
            .as_deref()
            .map(|text| serde_json::from_str::<PairSpec>(text)?.build())
            .transpose()
    }

    /// One `key = value` line per key in a fixed order, defaults included.
    /// This is what the run manifest hashes. `out` is left out so that the
    /// same experiment hashes alike wherever it is written.
    pub fn canonical(&self) -> String {
        let join = |v: Vec<String>| v.join(",");
        let mut lines = vec![
            format!("function = {}", self.function.as_deref().unwrap_or("")),
            format!("model = {}", self.model.as_deref().unwrap_or("")),
            format!("n_grid = {}", join(self.n_grid.iter().map(|n| n.to_string()).collect())),
            format!("reps = {}", self.reps),
            format!("seed = {}", self.seed),
        ];
        lines.push(match &self.b_grid {
            BGrid::Step(s) => format!("b_step = {s}"),
            BGrid::Values(v) => format!("b_grid = {}", join(v.iter().map(|b| b.to_string()).collect())),
        });
        lines.extend([
            format!("truncation = {}", self.truncation),
            format!("quad_order = {}", self.quad_order),
            format!("lag_horizon = {}", self.lag_horizon),
            format!("resamples = {}", self.resamples),
            format!(
                "bins = {}",
                match self.bins {
                    BinRule::FreedmanDiaconis => "fd".to_string(),
                    BinRule::Fixed(b) => b.to_string(),
                }
            ),
            format!("max_lag = {}", self.max_lag),
            format!("suite_count = {}", self.suite_count),
            format!("suite_dim = {}", self.suite_dim),
            format!("pair = {}", self.pair.as_deref().unwrap_or("")),
        ]);
        lines.join("\n") + "\n"
    }

    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical().as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_documented_keys() {
        let text = "# demo\nfunction = hermite:2\nmodel = exp:0.5  # comment\nn_grid = 2^10, 4096\nreps = 500\nb_grid = 1, 1.5, 2\n";
        let cfg = ExperimentConfig::parse(text, "demo.cfg").unwrap();
        assert_eq!(cfg.n_grid, vec![1024, 4096]);
        assert_eq!(cfg.reps, 500);
        assert_eq!(cfg.b_values().unwrap(), vec![1.0, 1.5, 2.0]);
        assert_eq!(cfg.function().unwrap().label(), "hermite:2");
        assert_eq!(cfg.location("reps"), "demo.cfg:5");
    }

    #[test]
    fn rejects_unknown_and_duplicate_keys() {
        let e = ExperimentConfig::parse("fucntion = sign\n", "x").unwrap_err();
        assert!(e.to_string().contains("x:1") && e.to_string().contains("unknown key"));
        assert!(ExperimentConfig::parse("seed = 1\nseed = 2\n", "x").is_err());
        assert!(ExperimentConfig::parse("n_grid = 8, 4\n", "x").is_err());
        assert!(ExperimentConfig::parse("b_step = 0.1\nb_grid = 1\n", "x").is_err());
        assert!(ExperimentConfig::parse("just text\n", "x").is_err());
    }

    #[test]
    fn canonical_form_is_stable() {
        let a = ExperimentConfig::parse("seed = 3\nmodel = white\n", "a").unwrap();
        let b = ExperimentConfig::parse("model = white\n\nseed = 3\n", "b").unwrap();
        assert_eq!(a.canonical(), b.canonical());
        assert_eq!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn inline_pair() {
        let cfg = ExperimentConfig::parse(r#"pair = {"g1": [[1]], "g2": [[1]], "g12": [[0.7]]}"#, "p").unwrap();
        assert!((cfg.pair().unwrap().unwrap().theta() - 0.7).abs() < 1e-15);
        assert!(ExperimentConfig::parse(r#"pair = {"g1": [[1]], "g2": [[1]], "g12": [[1.7]]}"#, "p").is_err());
    }
}
