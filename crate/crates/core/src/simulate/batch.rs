use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use super::path::{replication_rng, PathSampler};
use super::toeplitz::ToeplitzOperator;
use crate::covariance::{sigma_n, CovarianceModel};
use crate::error::{Error, Result};
use crate::hermite::SubordinatedFunction;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Statistic {
    #[serde(rename = "V_n")]
    Vn,
    #[serde(rename = "inner_product")]
    InnerProduct,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonteCarloBatch {
    pub statistic: Statistic,
    pub samples: Vec<f64>,
    pub n: usize,
    pub seed: u64,
    pub mean: f64,
    pub variance: f64,
    /// `sqrt(variance / R)`.
    pub std_error: f64,
}

#[derive(Debug, Serialize)]
struct BatchSummary<'a> {
    statistic: Statistic,
    n: usize,
    reps: usize,
    seed: u64,
    mean: f64,
    variance: f64,
    std_error: f64,
    variance_std_error: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    label: Option<&'a str>,
}

impl MonteCarloBatch {
    pub fn from_samples(statistic: Statistic, n: usize, seed: u64, samples: Vec<f64>) -> Self {
        let r = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / r;
        let variance = if samples.len() > 1 {
            samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (r - 1.0)
        } else {
            0.0
        };
        Self {
            statistic,
            n,
            seed,
            mean,
            variance,
            std_error: (variance / r).sqrt(),
            samples,
        }
    }

    pub fn reps(&self) -> usize {
        self.samples.len()
    }

    /// Large-sample standard error of the sample variance,
    /// `sqrt((m4 - s^4) / R)`.
    pub fn variance_std_error(&self) -> f64 {
        let r = self.samples.len() as f64;
        let m4 = self.samples.iter().map(|x| (x - self.mean).powi(4)).sum::<f64>() / r;
        ((m4 - self.variance * self.variance).max(0.0) / r).sqrt()
    }

    /// Standard error of `sqrt(variance)` by the delta method.
    pub fn sd_std_error(&self) -> f64 {
        if self.variance > 0.0 {
            self.variance_std_error() / (2.0 * self.variance.sqrt())
        } else {
            0.0
        }
    }

    /// CSV with columns `rep_index,value`.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["rep_index", "value"])?;
        for (i, v) in self.samples.iter().enumerate() {
            w.write_record([i.to_string(), v.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn summary_json(&self, label: Option<&str>) -> Result<String> {
        Ok(serde_json::to_string_pretty(&BatchSummary {
            statistic: self.statistic,
            n: self.n,
            reps: self.samples.len(),
            seed: self.seed,
            mean: self.mean,
            variance: self.variance,
            std_error: self.std_error,
            variance_std_error: self.variance_std_error(),
            label,
        })?)
    }

    pub fn write_summary(&self, path: impl AsRef<Path>, label: Option<&str>) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        writeln!(f, "{}", self.summary_json(label)?)?;
        Ok(())
    }
}

fn check_reps(reps: usize) -> Result<()> {
    if reps == 0 {
        return Err(Error::InvalidArgument("at least one replication is required".into()));
    }
    Ok(())
}

/// `R` samples of `V_n = sum_k phi(X_k) / (sigma_n sqrt(n))`, normalized by
/// the exact `sigma_n` rather than the batch's own spread.
pub fn sample_vn(
    f: &SubordinatedFunction,
    m: &CovarianceModel,
    n: usize,
    reps: usize,
    seed: u64,
) -> Result<MonteCarloBatch> {
    check_reps(reps)?;
    let sampler = PathSampler::new(m, n)?;
    let scale = 1.0 / (sigma_n(f.expansion(), m, n)?.sqrt() * (n as f64).sqrt());
    let samples = (0..reps as u64)
        .into_par_iter()
        .map(|rep| {
            let x = sampler.sample(&mut replication_rng(seed, rep));
            scale * x.iter().map(|&v| f.eval(v)).sum::<f64>()
        })
        .collect();
    Ok(MonteCarloBatch::from_samples(Statistic::Vn, n, seed, samples))
}

/// `R` samples of `<DV_n, u_n> = phi'(X)^T T phi_1(X) / (sigma_n^2 n)`.
pub fn sample_inner(
    f: &SubordinatedFunction,
    m: &CovarianceModel,
    n: usize,
    reps: usize,
    seed: u64,
) -> Result<MonteCarloBatch> {
    Ok(sample_vn_and_inner(f, m, n, reps, seed)?.1)
}

/// Both statistics evaluated on the same `R` paths.
pub fn sample_vn_and_inner(
    f: &SubordinatedFunction,
    m: &CovarianceModel,
    n: usize,
    reps: usize,
    seed: u64,
) -> Result<(MonteCarloBatch, MonteCarloBatch)> {
    check_reps(reps)?;
    if !f.has_weak_derivative() {
        return Err(Error::NotInSobolev(format!(
            "`{}` has no weak derivative; <DV_n, u_n> is undefined",
            f.label()
        )));
    }
    let sampler = PathSampler::new(m, n)?;
    let toeplitz = ToeplitzOperator::from_model(m, n);
    let s2 = sigma_n(f.expansion(), m, n)?;
    let nf = n as f64;
    let vn_scale = 1.0 / (s2.sqrt() * nf.sqrt());
    let inner_scale = 1.0 / (s2 * nf);
    // Build the phi_1 table before the parallel section.
    f.phi1_exact(0.0);
    let pairs: Vec<(f64, f64)> = (0..reps as u64)
        .into_par_iter()
        .map(|rep| {
            let x = sampler.sample(&mut replication_rng(seed, rep));
            let vn = vn_scale * x.iter().map(|&v| f.eval(v)).sum::<f64>();
            let d: Vec<f64> = x.iter().map(|&v| f.derivative(v).unwrap()).collect();
            let s: Vec<f64> = x.iter().map(|&v| f.phi1_exact(v)).collect();
            (vn, inner_scale * toeplitz.quadratic_form(&d, &s))
        })
        .collect();
    let (vn, inner): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    Ok((
        MonteCarloBatch::from_samples(Statistic::Vn, n, seed, vn),
        MonteCarloBatch::from_samples(Statistic::InnerProduct, n, seed, inner),
    ))
}

/// Monte Carlo estimate of `E[X_0 X_k]` for `k = 0..=max_lag`: per path the
/// lag-`k` average `(1/(n-k)) sum_i X_i X_{i+k}`, then mean and standard
/// error over paths.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AutocovarianceEstimate {
    pub lag: usize,
    pub mean: f64,
    pub std_error: f64,
}

pub fn sample_autocovariance(
    m: &CovarianceModel,
    n: usize,
    max_lag: usize,
    reps: usize,
    seed: u64,
) -> Result<Vec<AutocovarianceEstimate>> {
    check_reps(reps)?;
    if max_lag >= n {
        return Err(Error::InvalidArgument(format!("max lag {max_lag} must be below n = {n}")));
    }
    let sampler = PathSampler::new(m, n)?;
    let per_path: Vec<Vec<f64>> = (0..reps as u64)
        .into_par_iter()
        .map(|rep| {
            let x = sampler.sample(&mut replication_rng(seed, rep));
            (0..=max_lag)
                .map(|k| {
                    x[..n - k].iter().zip(&x[k..]).map(|(a, b)| a * b).sum::<f64>() / (n - k) as f64
                })
                .collect()
        })
        .collect();
    Ok((0..=max_lag)
        .map(|k| {
            let b = MonteCarloBatch::from_samples(
                Statistic::Vn,
                n,
                seed,
                per_path.iter().map(|row| row[k]).collect(),
            );
            AutocovarianceEstimate {
                lag: k,
                mean: b.mean,
                std_error: b.std_error,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hermite::ExpansionConfig;

    fn catalog(name: &str) -> SubordinatedFunction {
        SubordinatedFunction::from_catalog(name, &ExpansionConfig::default()).unwrap()
    }

    #[test]
    fn std_error_is_sqrt_variance_over_reps() {
        let b = MonteCarloBatch::from_samples(Statistic::Vn, 1, 0, vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(b.mean, 2.5);
        assert!((b.variance - 5.0 / 3.0).abs() < 1e-15);
        assert!((b.std_error - (b.variance / 4.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn linear_white_noise_inner_product_is_one() {
        let (vn, inner) =
            sample_vn_and_inner(&catalog("hermite:1"), &CovarianceModel::white(), 16, 50, 3).unwrap();
        assert!(inner.samples.iter().all(|v| (v - 1.0).abs() < 1e-12));
        assert_eq!(vn.reps(), 50);
    }

    #[test]
    fn sign_has_no_inner_product() {
        let r = sample_inner(&catalog("sign"), &CovarianceModel::white(), 16, 10, 1);
        assert!(matches!(r, Err(Error::NotInSobolev(_))));
    }

    #[test]
    fn batches_are_deterministic() {
        let f = catalog("hermite:2");
        let m = CovarianceModel::exponential(0.5).unwrap();
        let a = sample_vn(&f, &m, 64, 20, 9).unwrap();
        let b = sample_vn(&f, &m, 64, 20, 9).unwrap();
        assert_eq!(a, b);
        let dir = tempfile::tempdir().unwrap();
        a.write_csv(dir.path().join("a.csv")).unwrap();
        b.write_csv(dir.path().join("b.csv")).unwrap();
        assert_eq!(
            std::fs::read(dir.path().join("a.csv")).unwrap(),
            std::fs::read(dir.path().join("b.csv")).unwrap()
        );
        assert!(a.summary_json(None).unwrap().contains("\"statistic\": \"V_n\""));
    }
}
