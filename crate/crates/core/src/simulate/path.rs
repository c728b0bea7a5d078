use std::sync::Arc;

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::Serialize;

use crate::covariance::{toeplitz_dense, validate_psd, CovarianceModel};
use crate::error::{Error, Result};

/// Relative threshold below which negative embedding eigenvalues are clipped.
pub const EMBEDDING_CLIP: f64 = 1e-8;
/// Largest `n` for the dense Cholesky fallback.
pub const CHOLESKY_LIMIT: usize = 4096;
/// Seed increment between consecutive replications.
pub const SEED_STRIDE: u64 = 0x9E37_79B9_7F4A_7C15;
const PSD_SPOT_CHECK: usize = 64;

/// Generator for replication `rep` of a run with master seed `seed`.
pub fn replication_rng(seed: u64, rep: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed.wrapping_add(rep.wrapping_mul(SEED_STRIDE)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingMethod {
    CirculantEmbedding,
    Cholesky,
}

#[derive(Debug, Clone, Serialize)]
pub struct SamplePath {
    pub values: Vec<f64>,
    pub model: CovarianceModel,
    pub seed: u64,
    pub method: SamplingMethod,
}

enum Engine {
    Circulant {
        scale: Vec<f64>,
        fft: Arc<dyn Fft<f64>>,
    },
    Cholesky(DMatrix<f64>),
}

/// Reusable sampler for stationary Gaussian paths of fixed length.
pub struct PathSampler {
    n: usize,
    engine: Engine,
    min_embedding_eigenvalue: f64,
}

impl std::fmt::Debug for PathSampler {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PathSampler")
            .field("n", &self.n)
            .field("method", &self.method())
            .field("min_embedding_eigenvalue", &self.min_embedding_eigenvalue)
            .finish()
    }
}

/// Eigenvalues of the circulant of size `2(n - 1)` whose first row is
/// `rho(0), ..., rho(n - 1), rho(n - 2), ..., rho(1)`.
pub fn embedding_eigenvalues(m: &CovarianceModel, n: usize) -> Vec<f64> {
    if n < 2 {
        return vec![1.0];
    }
    let size = 2 * (n - 1);
    let lags = m.lags(n);
    let mut col: Vec<Complex<f64>> = (0..size)
        .map(|k| Complex::new(lags[k.min(size - k)], 0.0))
        .collect();
    FftPlanner::new().plan_fft_forward(size).process(&mut col);
    col.iter().map(|z| z.re).collect()
}

impl PathSampler {
    pub fn new(m: &CovarianceModel, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("path length must be positive".into()));
        }
        if !validate_psd(m, n.min(PSD_SPOT_CHECK))? {
            return Err(Error::NotPositiveDefinite(format!(
                "{} fails the PSD spot check at size {}",
                m.label(),
                n.min(PSD_SPOT_CHECK)
            )));
        }
        let eig = embedding_eigenvalues(m, n);
        let max = eig.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = eig.iter().copied().fold(f64::INFINITY, f64::min);
        if n >= 2 && min >= -EMBEDDING_CLIP * max {
            let size = eig.len();
            let scale = eig.iter().map(|&l| (l.max(0.0) / size as f64).sqrt()).collect();
            let fft = FftPlanner::new().plan_fft_forward(size);
            return Ok(Self {
                n,
                engine: Engine::Circulant { scale, fft },
                min_embedding_eigenvalue: min,
            });
        }
        if n > CHOLESKY_LIMIT {
            return Err(Error::EmbeddingFailed {
                min_eig: min,
                n,
                limit: CHOLESKY_LIMIT,
            });
        }
        let chol = Cholesky::new(toeplitz_dense(m, n)).ok_or_else(|| {
            Error::NotPositiveDefinite(format!("Toeplitz matrix of {} at n = {n}", m.label()))
        })?;
        Ok(Self {
            n,
            engine: Engine::Cholesky(chol.l()),
            min_embedding_eigenvalue: min,
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn method(&self) -> SamplingMethod {
        match self.engine {
            Engine::Circulant { .. } => SamplingMethod::CirculantEmbedding,
            Engine::Cholesky(_) => SamplingMethod::Cholesky,
        }
    }

    pub fn min_embedding_eigenvalue(&self) -> f64 {
        self.min_embedding_eigenvalue
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        match &self.engine {
            Engine::Circulant { scale, fft } => {
                // Real part of FFT(sqrt(lambda / M) (Z1 + i Z2)) has the
                // circulant covariance.
                let mut buf: Vec<Complex<f64>> = scale
                    .iter()
                    .map(|&s| {
                        let re: f64 = rng.sample(StandardNormal);
                        let im: f64 = rng.sample(StandardNormal);
                        Complex::new(s * re, s * im)
                    })
                    .collect();
                fft.process(&mut buf);
                buf[..self.n].iter().map(|z| z.re).collect()
            }
            Engine::Cholesky(l) => {
                let z = DVector::from_fn(self.n, |_, _| rng.sample::<f64, _>(StandardNormal));
                (l * z).iter().copied().collect()
            }
        }
    }
}

pub fn sample_path(m: &CovarianceModel, n: usize, seed: u64) -> Result<SamplePath> {
    let sampler = PathSampler::new(m, n)?;
    let values = sampler.sample(&mut replication_rng(seed, 0));
    Ok(SamplePath {
        values,
        model: m.clone(),
        seed,
        method: sampler.method(),
    })
}
