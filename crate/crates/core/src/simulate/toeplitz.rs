use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::covariance::CovarianceModel;

/// Symmetric Toeplitz matrix `(c(|i - j|))_{i,j < n}` applied in
/// `O(n log n)` through a circulant embedding of doubled, padded length.
#[derive(Clone)]
pub struct ToeplitzOperator {
    n: usize,
    spectrum: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for ToeplitzOperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ToeplitzOperator")
            .field("n", &self.n)
            .field("transform_len", &self.spectrum.len())
            .finish()
    }
}

impl ToeplitzOperator {
    /// `lags[k] = c(k)` for `k < n`.
    pub fn new(lags: &[f64]) -> Self {
        let n = lags.len().max(1);
        let size = (2 * n).next_power_of_two();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(size);
        let inverse = planner.plan_fft_inverse(size);
        let mut col = vec![Complex::new(0.0, 0.0); size];
        for (k, &c) in lags.iter().enumerate() {
            col[k].re = c;
            if k > 0 {
                col[size - k].re = c;
            }
        }
        forward.process(&mut col);
        // A symmetric column has a real spectrum.
        let spectrum = col.iter().map(|z| z.re / size as f64).collect();
        Self {
            n: lags.len(),
            spectrum,
            forward,
            inverse,
        }
    }

    pub fn from_model(m: &CovarianceModel, n: usize) -> Self {
        Self::new(&m.lags(n))
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n, "dimension mismatch");
        let mut buf = vec![Complex::new(0.0, 0.0); self.spectrum.len()];
        for (b, &v) in buf.iter_mut().zip(x) {
            b.re = v;
        }
        self.forward.process(&mut buf);
        for (b, &s) in buf.iter_mut().zip(&self.spectrum) {
            *b *= s;
        }
        self.inverse.process(&mut buf);
        buf[..self.n].iter().map(|z| z.re).collect()
    }

    /// `x^T T y`.
    pub fn quadratic_form(&self, x: &[f64], y: &[f64]) -> f64 {
        let ty = self.apply(y);
        x.iter().zip(&ty).map(|(a, b)| a * b).sum()
    }
}

/// Dense `O(n^2)` reference product.
pub fn toeplitz_apply_dense(lags: &[f64], x: &[f64]) -> Vec<f64> {
    let n = lags.len();
    (0..n)
        .map(|i| (0..n).map(|j| lags[i.abs_diff(j)] * x[j]).sum())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_for_white_noise() {
        let t = ToeplitzOperator::from_model(&CovarianceModel::white(), 5);
        let x = [1.0, -2.0, 3.5, 0.0, 7.0];
        for (a, b) in t.apply(&x).iter().zip(&x) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn matches_dense_product() {
        let lags: Vec<f64> = (0..37).map(|k| 0.8f64.powi(k) * (k as f64).cos()).collect();
        let x: Vec<f64> = (0..37).map(|i| ((i * 7919) % 13) as f64 - 6.0).collect();
        let fast = ToeplitzOperator::new(&lags).apply(&x);
        let dense = toeplitz_apply_dense(&lags, &x);
        let scale = dense.iter().map(|v| v.abs()).fold(0.0, f64::max);
        for (a, b) in fast.iter().zip(&dense) {
            assert!((a - b).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn single_entry() {
        let t = ToeplitzOperator::new(&[2.5]);
        assert!((t.apply(&[3.0])[0] - 7.5).abs() < 1e-14);
    }
}
