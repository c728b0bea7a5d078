//! One-dimensional quadrature rules against the standard Gaussian measure.
//!
//! Two constructions are provided. [`GaussianRule::gauss_hermite`] is the
//! classical Gauss rule for the weight `exp(-x^2/2)/sqrt(2 pi)`; it is exact
//! for polynomials of degree below `2 * order` and is the right tool for
//! smooth integrands. Its error on integrands with a kink or a jump decays
//! only like `1/order` (about 1.6e-3 on `E|X|` at order 200), so functions
//! that declare breakpoints are integrated with
//! [`GaussianRule::piecewise`]: composite Gauss-Legendre panels that never
//! straddle a breakpoint, weighted by the Gaussian density.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::{DMatrix, SymmetricEigen};

use super::poly::orthonormal_values;
use crate::error::{Error, Result};
use crate::numeric::{normal_pdf, CompensatedSum};

/// Half-width of the truncated support for piecewise rules. The Gaussian
/// density at 30 is below 1e-195, which dominates `He_64` growth.
const PIECEWISE_HALF_WIDTH: f64 = 30.0;
const PIECEWISE_PANEL: f64 = 0.25;
const PIECEWISE_LEGENDRE_ORDER: usize = 20;

#[derive(Debug, Clone)]
pub struct GaussianRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussianRule {
    /// Gauss-Hermite rule of the given order for the standard Gaussian
    /// measure (physicists' nodes scaled by `sqrt(2)`, weights by
    /// `1/sqrt(pi)`; computed directly in probabilists' form).
    pub fn gauss_hermite(order: usize) -> Result<Self> {
        if order == 0 {
            return Err(Error::InvalidArgument("quadrature order must be positive".into()));
        }
        // Jacobi matrix of the orthonormal probabilists' Hermite family.
        let jacobi = DMatrix::from_fn(order, order, |i, j| {
            if i + 1 == j || j + 1 == i {
                (i.max(j) as f64).sqrt()
            } else {
                0.0
            }
        });
        let mut nodes: Vec<f64> = SymmetricEigen::new(jacobi).eigenvalues.iter().copied().collect();
        nodes.sort_by(|a, b| a.partial_cmp(b).unwrap());

        let mut h = vec![0.0; order + 1];
        let nf = order as f64;
        for z in nodes.iter_mut() {
            for _ in 0..3 {
                orthonormal_values(*z, &mut h);
                let step = h[order] / (nf.sqrt() * h[order - 1]);
                if step.is_finite() {
                    *z -= step;
                }
            }
        }
        // Christoffel numbers: w_i = 1 / sum_{k<n} h_k(z_i)^2.
        let weights = nodes
            .iter()
            .map(|&z| {
                orthonormal_values(z, &mut h);
                1.0 / h[..order].iter().map(|v| v * v).sum::<f64>()
            })
            .collect();
        Ok(Self { nodes, weights })
    }

    /// Shared, lazily built Gauss-Hermite rule.
    pub fn gauss_hermite_cached(order: usize) -> Result<Arc<Self>> {
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<GaussianRule>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        if let Some(rule) = cache.lock().unwrap().get(&order) {
            return Ok(rule.clone());
        }
        let rule = Arc::new(Self::gauss_hermite(order)?);
        cache.lock().unwrap().insert(order, rule.clone());
        Ok(rule)
    }

    /// Composite Gauss-Legendre rule on `[-30, 30]` with panel edges at every
    /// breakpoint, reweighted by the Gaussian density.
    pub fn piecewise(breakpoints: &[f64]) -> Result<Self> {
        Self::composite(
            PIECEWISE_HALF_WIDTH,
            PIECEWISE_PANEL,
            PIECEWISE_LEGENDRE_ORDER,
            breakpoints,
        )
    }

    /// Composite Gauss-Legendre rule on `[-half_width, half_width]` with
    /// panels of width at most `panel`, split at `breakpoints`.
    pub fn composite(half_width: f64, panel: f64, gl_order: usize, breakpoints: &[f64]) -> Result<Self> {
        if breakpoints.iter().any(|b| !b.is_finite()) {
            return Err(Error::InvalidArgument("non-finite breakpoint".into()));
        }
        if !(half_width > 0.0 && panel > 0.0) || gl_order == 0 {
            return Err(Error::InvalidArgument("composite rule needs positive sizes".into()));
        }
        let gl = gauss_legendre_cached(gl_order);
        let (gl_nodes, gl_weights) = (&gl.0, &gl.1);
        let mut edges: Vec<f64> = breakpoints
            .iter()
            .copied()
            .filter(|b| b.abs() < half_width)
            .collect();
        edges.push(-half_width);
        edges.push(half_width);
        edges.sort_by(|a, b| a.partial_cmp(b).unwrap());
        edges.dedup();

        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        for pair in edges.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            let panels = ((b - a) / panel).ceil().max(1.0) as usize;
            let width = (b - a) / panels as f64;
            for p in 0..panels {
                let lo = a + p as f64 * width;
                let mid = lo + 0.5 * width;
                for (t, w) in gl_nodes.iter().zip(gl_weights) {
                    let x = mid + 0.5 * width * t;
                    nodes.push(x);
                    weights.push(0.5 * width * w * normal_pdf(x));
                }
            }
        }
        Ok(Self { nodes, weights })
    }

    /// Gauss-Hermite of the given order for smooth functions, piecewise
    /// otherwise.
    pub fn for_breakpoints(order: usize, breakpoints: &[f64]) -> Result<Arc<Self>> {
        if breakpoints.is_empty() {
            Self::gauss_hermite_cached(order)
        } else {
            Ok(Arc::new(Self::piecewise(breakpoints)?))
        }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `E[f(X)]` for `X ~ N(0, 1)`.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .collect::<CompensatedSum>()
            .value()
    }
}

pub(crate) fn gauss_legendre_cached(order: usize) -> Arc<(Vec<f64>, Vec<f64>)> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<(Vec<f64>, Vec<f64>)>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    cache
        .lock()
        .unwrap()
        .entry(order)
        .or_insert_with(|| Arc::new(gauss_legendre(order)))
        .clone()
}

/// Gauss-Legendre nodes and weights on `[-1, 1]` (Golub-Welsch, then Newton).
pub(crate) fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    let jacobi = DMatrix::from_fn(order, order, |i, j| {
        if i + 1 == j || j + 1 == i {
            let k = i.max(j) as f64;
            k / (4.0 * k * k - 1.0).sqrt()
        } else {
            0.0
        }
    });
    let mut nodes: Vec<f64> = SymmetricEigen::new(jacobi).eigenvalues.iter().copied().collect();
    nodes.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let legendre = |x: f64| {
        let (mut p0, mut p1) = (1.0, x);
        for k in 1..order {
            let kf = k as f64;
            let p2 = ((2.0 * kf + 1.0) * x * p1 - kf * p0) / (kf + 1.0);
            p0 = p1;
            p1 = p2;
        }
        // derivative from P_n and P_{n-1}
        let dp = order as f64 * (x * p1 - p0) / (x * x - 1.0);
        (p1, dp)
    };
    let weights = nodes
        .iter_mut()
        .map(|x| {
            for _ in 0..3 {
                let (p, dp) = legendre(*x);
                *x -= p / dp;
            }
            let (_, dp) = legendre(*x);
            2.0 / ((1.0 - *x * *x) * dp * dp)
        })
        .collect();
    (nodes, weights)
}
