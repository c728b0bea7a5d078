//! Tensor Gauss-Hermite expectations of functionals of Gaussian vectors.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::hermite::GaussianRule;
use crate::numeric::CompensatedSum;

/// Upper limit on the number of tensor nodes in one expectation.
pub const MAX_TENSOR_NODES: usize = 20_000_000;
/// Eigenvalues of a covariance below this fraction of the largest are
/// treated as zero when factoring it.
const RANK_TOL: f64 = 1e-12;

/// Factor `A` with `A A^T = cov`, of width equal to the numerical rank.
pub(crate) fn gaussian_factor(cov: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(cov.clone());
    let max = eig.eigenvalues.max().max(0.0);
    let keep: Vec<usize> = (0..eig.eigenvalues.len())
        .filter(|&i| eig.eigenvalues[i] > RANK_TOL * max)
        .collect();
    DMatrix::from_fn(cov.nrows(), keep.len().max(1), |r, c| match keep.get(c) {
        Some(&i) => eig.eigenvectors[(r, i)] * eig.eigenvalues[i].sqrt(),
        None => 0.0,
    })
}

/// `E[f(A Z)]` for `Z` standard Gaussian of dimension `A.ncols()`, by the
/// tensor Gauss-Hermite rule of the given order in each coordinate. Exact
/// when `f(A z)` is a polynomial of degree below `2 * order` in each `z_i`.
pub fn expectation_with_factor<F>(factor: &DMatrix<f64>, mut f: F, order: usize) -> Result<f64>
where
    F: FnMut(&[f64]) -> f64,
{
    let dim = factor.ncols();
    let nodes = (order as f64).powi(dim as i32);
    if nodes > MAX_TENSOR_NODES as f64 {
        return Err(Error::InvalidArgument(format!(
            "{order}^{dim} tensor nodes exceed the limit {MAX_TENSOR_NODES}"
        )));
    }
    let rule = GaussianRule::gauss_hermite_cached(order)?;
    let (z, w) = (rule.nodes(), rule.weights());
    let out_dim = factor.nrows();
    let mut idx = vec![0usize; dim];
    let mut x = vec![0.0; out_dim];
    let mut acc = CompensatedSum::new();
    loop {
        let mut weight = 1.0;
        for &i in &idx {
            weight *= w[i];
        }
        for (r, xr) in x.iter_mut().enumerate() {
            *xr = idx.iter().enumerate().map(|(c, &i)| factor[(r, c)] * z[i]).sum();
        }
        let v = f(&x);
        if !v.is_finite() {
            return Err(Error::NonFinite(format!("integrand at {x:?}")));
        }
        acc.add(weight * v);
        // Odometer over the tensor grid.
        let mut k = 0;
        loop {
            if k == dim {
                return Ok(acc.value());
            }
            idx[k] += 1;
            if idx[k] < order {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

/// `E[f(W)]` for `W ~ N(0, cov)`.
pub fn gaussian_expectation<F>(cov: &DMatrix<f64>, f: F, order: usize) -> Result<f64>
where
    F: FnMut(&[f64]) -> f64,
{
    expectation_with_factor(&gaussian_factor(cov), f, order)
}

/// All multi-indices of length `dim` with `|alpha| = degree`.
pub fn multi_indices(dim: usize, degree: usize) -> Vec<Vec<usize>> {
    if dim == 0 {
        return if degree == 0 { vec![vec![]] } else { vec![] };
    }
    let mut out = Vec::new();
    for first in (0..=degree).rev() {
        for mut rest in multi_indices(dim - 1, degree - first) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}
