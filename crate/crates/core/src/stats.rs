//! Distances between a Monte Carlo sample and the standard normal law.
//!
//! The total-variation estimate is a histogram plug-in: it is noisy upward
//! (sampling fluctuation in every bin) and biased downward (binning merges
//! mass). Both effects are reported so that comparisons with theoretical
//! bounds can be made on the safe side.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numeric::{normal_cdf, normal_pdf};
use crate::simulate::replication_rng;

pub const MIN_TV_SAMPLES: usize = 1000;
pub const DEFAULT_RESAMPLES: usize = 200;
pub const DKW_DELTA: f64 = 0.05;
const HIST_HALF_WIDTH: f64 = 6.0;
const MAX_BINS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceKind {
    TotalVariation,
    Kolmogorov,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DistanceEstimate {
    pub kind: DistanceKind,
    pub value: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Number of finite-width bins; `None` for Kolmogorov.
    pub bins: Option<usize>,
    pub bias_bound: f64,
    pub samples: usize,
}

impl DistanceEstimate {
    pub fn ci_width(&self) -> f64 {
        self.ci_high - self.ci_low
    }
}

/// How the histogram bins on `[-6, 6]` are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum BinRule {
    /// Width `2 IQR R^{-1/3}`.
    #[default]
    FreedmanDiaconis,
    Fixed(usize),
}

/// Sample quantile with linear interpolation between order statistics.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn sorted_copy(samples: &[f64]) -> Vec<f64> {
    let mut s = samples.to_vec();
    s.sort_by(|a, b| a.total_cmp(b));
    s
}

fn check_finite(samples: &[f64]) -> Result<()> {
    if let Some(x) = samples.iter().find(|x| !x.is_finite()) {
        return Err(Error::NonFinite(format!("sample value {x}")));
    }
    Ok(())
}

fn bin_count(sorted: &[f64], rule: BinRule) -> usize {
    match rule {
        BinRule::Fixed(b) => b.clamp(1, MAX_BINS),
        BinRule::FreedmanDiaconis => {
            let iqr = quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);
            let h = 2.0 * iqr * (sorted.len() as f64).powf(-1.0 / 3.0);
            if h > 0.0 {
                ((2.0 * HIST_HALF_WIDTH / h).ceil() as usize).clamp(1, MAX_BINS)
            } else {
                // Sturges when the quartiles coincide.
                (sorted.len() as f64).log2().ceil() as usize + 1
            }
        }
    }
}

struct Histogram {
    bins: usize,
    width: f64,
    /// Normal mass of each cell, overflow cells first and last.
    reference: Vec<f64>,
}

impl Histogram {
    fn new(bins: usize) -> Self {
        let width = 2.0 * HIST_HALF_WIDTH / bins as f64;
        let mut reference = Vec::with_capacity(bins + 2);
        reference.push(normal_cdf(-HIST_HALF_WIDTH));
        for i in 0..bins {
            let a = -HIST_HALF_WIDTH + i as f64 * width;
            reference.push(normal_cdf(a + width) - normal_cdf(a));
        }
        reference.push(normal_cdf(-HIST_HALF_WIDTH));
        Self { bins, width, reference }
    }

    fn cell(&self, x: f64) -> usize {
        if x < -HIST_HALF_WIDTH {
            0
        } else if x >= HIST_HALF_WIDTH {
            self.bins + 1
        } else {
            (((x + HIST_HALF_WIDTH) / self.width) as usize).min(self.bins - 1) + 1
        }
    }

    fn distance<'a>(&self, values: impl Iterator<Item = &'a f64>, total: usize) -> f64 {
        let mut counts = vec![0usize; self.bins + 2];
        for &x in values {
            counts[self.cell(x)] += 1;
        }
        let r = total as f64;
        0.5 * counts
            .iter()
            .zip(&self.reference)
            .map(|(&c, &q)| (c as f64 / r - q).abs())
            .sum::<f64>()
    }

    /// `sum_bins osc(psi) * width`: the TV lost when the normal density is
    /// replaced by its bin averages.
    fn bias_bound(&self) -> f64 {
        (0..self.bins)
            .map(|i| {
                let a = -HIST_HALF_WIDTH + i as f64 * self.width;
                let b = a + self.width;
                let (pa, pb) = (normal_pdf(a), normal_pdf(b));
                let top = if a < 0.0 && b > 0.0 { normal_pdf(0.0) } else { pa.max(pb) };
                (top - pa.min(pb)) * self.width
            })
            .sum::<f64>()
            + 2.0 * normal_cdf(-HIST_HALF_WIDTH)
    }
}

/// Histogram estimate of `d_TV(law of samples, N(0, 1))`.
///
/// The interval is the union of the bootstrap percentile and basic
/// intervals, widened to contain the point estimate: the percentile
/// interval inherits the upward noise bias, the basic one corrects it.
pub fn tv_estimate(samples: &[f64], rule: BinRule, resamples: usize, seed: u64) -> Result<DistanceEstimate> {
    if samples.len() < MIN_TV_SAMPLES {
        return Err(Error::TooFewSamples {
            got: samples.len(),
            need: MIN_TV_SAMPLES,
        });
    }
    check_finite(samples)?;
    let sorted = sorted_copy(samples);
    let hist = Histogram::new(bin_count(&sorted, rule));
    let value = hist.distance(samples.iter(), samples.len());
    let (lo, hi) = bootstrap_ci(|s| hist.distance(s.iter(), s.len()), samples, resamples, seed)?;
    Ok(DistanceEstimate {
        kind: DistanceKind::TotalVariation,
        value,
        ci_low: lo.min(2.0 * value - hi).min(value).max(0.0),
        ci_high: hi.max(2.0 * value - lo).max(value).min(1.0),
        bins: Some(hist.bins),
        bias_bound: hist.bias_bound(),
        samples: samples.len(),
    })
}

/// `sup_x |F_hat(x) - Phi(x)|` with the DKW band
/// `sqrt(ln(2/delta) / (2R))`, `delta = 0.05`.
pub fn kolmogorov(samples: &[f64]) -> Result<DistanceEstimate> {
    if samples.is_empty() {
        return Err(Error::TooFewSamples { got: 0, need: 1 });
    }
    check_finite(samples)?;
    let sorted = sorted_copy(samples);
    let r = sorted.len() as f64;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        // Ties: the empirical CDF jumps once over the whole block.
        let mut j = i;
        while j + 1 < sorted.len() && sorted[j + 1] == sorted[i] {
            j += 1;
        }
        let phi = normal_cdf(sorted[i]);
        d = d.max((phi - i as f64 / r).abs()).max(((j + 1) as f64 / r - phi).abs());
        i = j + 1;
    }
    let eps = ((2.0 / DKW_DELTA).ln() / (2.0 * r)).sqrt();
    Ok(DistanceEstimate {
        kind: DistanceKind::Kolmogorov,
        value: d,
        ci_low: (d - eps).max(0.0),
        ci_high: (d + eps).min(1.0),
        bins: None,
        bias_bound: 0.0,
        samples: sorted.len(),
    })
}

/// Percentile 2.5 / 97.5 bootstrap interval, deterministic in `seed`.
pub fn bootstrap_ci<F>(statistic: F, samples: &[f64], resamples: usize, seed: u64) -> Result<(f64, f64)>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if samples.is_empty() || resamples == 0 {
        return Err(Error::InvalidArgument("bootstrap needs samples and resamples".into()));
    }
    let r = samples.len();
    let mut stats: Vec<f64> = (0..resamples as u64)
        .into_par_iter()
        .map(|b| {
            let mut rng = replication_rng(seed, b);
            let resample: Vec<f64> = (0..r).map(|_| samples[rng.random_range(0..r)]).collect();
            statistic(&resample)
        })
        .collect();
    stats.sort_by(|a, b| a.total_cmp(b));
    Ok((quantile_sorted(&stats, 0.025), quantile_sorted(&stats, 0.975)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn normals(r: usize, seed: u64, mean: f64, sd: f64) -> Vec<f64> {
        use rand_distr::{Distribution, StandardNormal};
        let mut rng = replication_rng(seed, 0);
        (0..r)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                mean + sd * z
            })
            .collect()
    }

    #[test]
    fn self_distance_is_small() {
        let e = tv_estimate(&normals(100_000, 1, 0.0, 1.0), BinRule::default(), 200, 2).unwrap();
        assert!(e.value <= 0.02, "{e:?}");
        assert!(e.ci_low <= 0.01);
        assert!(e.ci_low <= e.value && e.value <= e.ci_high);
    }

    #[test]
    fn shifted_normal_distance() {
        let e = tv_estimate(&normals(100_000, 3, 1.0, 1.0), BinRule::default(), 50, 4).unwrap();
        let exact = 2.0 * normal_cdf(0.5) - 1.0;
        assert!((e.value - exact).abs() < 0.02, "{} vs {exact}", e.value);
    }

    #[test]
    fn too_few_samples() {
        assert!(matches!(
            tv_estimate(&[0.0; 999], BinRule::default(), 10, 0),
            Err(Error::TooFewSamples { got: 999, need: 1000 })
        ));
    }

    #[test]
    fn kolmogorov_of_a_point_mass() {
        let e = kolmogorov(&[0.0; 50]).unwrap();
        assert!((e.value - 0.5).abs() < 1e-15);
        assert!(e.ci_low <= e.value && e.value <= e.ci_high);
    }

    #[test]
    fn kolmogorov_of_shifted_normal() {
        let e = kolmogorov(&normals(100_000, 5, 0.5, 1.0)).unwrap();
        let exact = normal_cdf(0.25) - normal_cdf(-0.25);
        assert!((e.value - exact).abs() < 0.01);
    }

    #[test]
    fn bootstrap_of_constant_samples_has_zero_width() {
        let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
        let (lo, hi) = bootstrap_ci(mean, &[2.5; 100], 50, 7).unwrap();
        assert_eq!((lo, hi), (2.5, 2.5));
    }

    #[test]
    fn bootstrap_is_reproducible_and_has_clt_width() {
        let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
        let x = normals(10_000, 11, 0.0, 1.0);
        let a = bootstrap_ci(mean, &x, 200, 3).unwrap();
        let b = bootstrap_ci(mean, &x, 200, 3).unwrap();
        assert_eq!(a, b);
        let width = a.1 - a.0;
        let clt = 2.0 * 1.959964 / 100.0;
        assert!((width / clt - 1.0).abs() < 0.3, "width {width}");
    }

    #[test]
    fn permutation_invariance() {
        let x = normals(5_000, 13, 0.2, 1.1);
        let mut y = x.clone();
        y.reverse();
        let a = tv_estimate(&x, BinRule::default(), 20, 1).unwrap();
        let b = tv_estimate(&y, BinRule::default(), 20, 1).unwrap();
        assert_eq!(a.value, b.value);
    }
}
