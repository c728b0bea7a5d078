//! `phi_1` tabulated from
//! `phi_1(x) = int_0^1 E[phi'(u x + sqrt(1 - u^2) Y)] du`, `Y ~ N(0, 1)`,
//! which is free of expansion truncation. Used where `phi_1` is evaluated
//! millions of times and a truncation bias would show up in Monte Carlo.

use std::f64::consts::FRAC_PI_2;

use super::quadrature::{gauss_legendre_cached, GaussianRule};
use crate::error::{Error, Result};
use crate::numeric::{normal_pdf, CompensatedSum};

const TABLE_HALF_WIDTH: f64 = 10.0;
const TABLE_STEP: f64 = 0.02;
const INNER_HALF_WIDTH: f64 = 10.0;
const INNER_PANEL: f64 = 0.5;
const INNER_GL: usize = 16;
const OUTER_GL: usize = 8;
// Panels in s = asin(u) are halved toward s = pi/2, where the inner law
// degenerates to a point mass.
const OUTER_LEVELS: i32 = 24;

#[derive(Debug, Clone)]
pub(crate) struct Phi1Table {
    values: Vec<f64>,
}

struct Panel {
    lo: f64,
    hi: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

/// Gaussian expectation rule on `[-10, 10]` whose fixed panels are split on
/// demand at breakpoints that move with `(x, s)`.
struct InnerRule {
    panels: Vec<Panel>,
}

impl InnerRule {
    fn new() -> Self {
        let count = (2.0 * INNER_HALF_WIDTH / INNER_PANEL).round() as usize;
        let panels = (0..count)
            .map(|p| {
                let lo = -INNER_HALF_WIDTH + p as f64 * INNER_PANEL;
                let hi = lo + INNER_PANEL;
                let (nodes, weights) = gl_panel(lo, hi);
                Panel { lo, hi, nodes, weights }
            })
            .collect();
        Self { panels }
    }

    fn expect(&self, f: impl Fn(f64) -> f64, cuts: &[f64]) -> f64 {
        let mut acc = CompensatedSum::new();
        for panel in &self.panels {
            let inside: Vec<f64> = cuts
                .iter()
                .copied()
                .filter(|&c| c > panel.lo && c < panel.hi)
                .collect();
            if inside.is_empty() {
                for (&y, &w) in panel.nodes.iter().zip(&panel.weights) {
                    acc.add(w * f(y));
                }
                continue;
            }
            let mut edges = inside;
            edges.push(panel.lo);
            edges.push(panel.hi);
            edges.sort_by(|a, b| a.partial_cmp(b).unwrap());
            for pair in edges.windows(2) {
                let (nodes, weights) = gl_panel(pair[0], pair[1]);
                for (&y, &w) in nodes.iter().zip(&weights) {
                    acc.add(w * f(y));
                }
            }
        }
        acc.value()
    }
}

fn gl_panel(lo: f64, hi: f64) -> (Vec<f64>, Vec<f64>) {
    let gl = gauss_legendre_cached(INNER_GL);
    let (mid, half) = (0.5 * (lo + hi), 0.5 * (hi - lo));
    gl.0.iter()
        .zip(&gl.1)
        .map(|(t, w)| {
            let y = mid + half * t;
            (y, half * w * normal_pdf(y))
        })
        .unzip()
}

fn outer_rule() -> Vec<(f64, f64)> {
    let gl = gauss_legendre_cached(OUTER_GL);
    let mut edges: Vec<f64> = (0..=OUTER_LEVELS)
        .map(|j| FRAC_PI_2 * (1.0 - 0.5f64.powi(j)))
        .collect();
    edges.push(FRAC_PI_2);
    let mut out = Vec::new();
    for pair in edges.windows(2) {
        let (mid, half) = (0.5 * (pair[0] + pair[1]), 0.5 * (pair[1] - pair[0]));
        for (t, w) in gl.0.iter().zip(&gl.1) {
            out.push((mid + half * t, half * w));
        }
    }
    out
}

/// The quadrature rules behind one evaluation of the Mehler integral.
pub(crate) struct MehlerRules {
    outer: Vec<(f64, f64)>,
    smooth: std::sync::Arc<GaussianRule>,
    inner: InnerRule,
}

impl MehlerRules {
    pub(crate) fn new() -> Result<Self> {
        Ok(Self {
            outer: outer_rule(),
            smooth: GaussianRule::gauss_hermite_cached(64)?,
            inner: InnerRule::new(),
        })
    }

    /// `phi_1(x)` by direct quadrature.
    pub(crate) fn phi1(&self, derivative: &(dyn Fn(f64) -> f64 + Sync), breakpoints: &[f64], x: f64) -> Result<f64> {
        let mut acc = CompensatedSum::new();
        let mut cuts = Vec::with_capacity(breakpoints.len());
        for &(s, w) in &self.outer {
            // u = sin s, du = cos s ds, sqrt(1 - u^2) = cos s
            let (m, v) = (x * s.sin(), s.cos());
            let g = |y: f64| derivative(m + v * y);
            let e = if breakpoints.is_empty() {
                self.smooth.integrate(g)
            } else {
                cuts.clear();
                cuts.extend(breakpoints.iter().map(|b| (b - m) / v));
                self.inner.expect(g, &cuts)
            };
            acc.add(w * v * e);
        }
        let value = acc.value();
        if !value.is_finite() {
            return Err(Error::NonFinite(format!("phi_1({x}) = {value}")));
        }
        Ok(value)
    }
}

impl Phi1Table {
    pub(crate) fn build(derivative: &(dyn Fn(f64) -> f64 + Sync), breakpoints: &[f64]) -> Result<Self> {
        let rules = MehlerRules::new()?;
        let count = (2.0 * TABLE_HALF_WIDTH / TABLE_STEP).round() as usize + 1;
        let values = (0..count)
            .map(|i| rules.phi1(derivative, breakpoints, -TABLE_HALF_WIDTH + i as f64 * TABLE_STEP))
            .collect::<Result<Vec<f64>>>()?;
        Ok(Self { values })
    }

    /// Cubic interpolation inside `[-10, 10]`, `None` outside.
    pub(crate) fn eval(&self, x: f64) -> Option<f64> {
        if !(x.abs() <= TABLE_HALF_WIDTH) {
            return None;
        }
        let t = (x + TABLE_HALF_WIDTH) / TABLE_STEP;
        let last = self.values.len() - 1;
        let i = (t.floor() as usize).clamp(1, last - 2);
        let r = t - i as f64;
        let [p0, p1, p2, p3] = [
            self.values[i - 1],
            self.values[i],
            self.values[i + 1],
            self.values[i + 2],
        ];
        // Lagrange weights on the nodes -1, 0, 1, 2.
        Some(
            -p0 * r * (r - 1.0) * (r - 2.0) / 6.0 + p1 * (r + 1.0) * (r - 1.0) * (r - 2.0) / 2.0
                - p2 * (r + 1.0) * r * (r - 2.0) / 2.0
                + p3 * (r + 1.0) * r * (r - 1.0) / 6.0,
        )
    }
}
