//! The rigid coupling `tau = (tau1, tau2): H2 -> H1 (+) H2` with
//! `tau1 = pi_{H1} / theta` and `tau2 = sqrt(Id - U / theta^2)`,
//! `U = pi_{H2} pi_{H1}` restricted to `H2`.
//!
//! Operators are stored as coordinate matrices: column `j` of `tau1` holds
//! the coefficients of `tau1(g_j)` in the basis of `H1`, and likewise for
//! `tau2` in the basis of `H2`.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use super::pair::{inv_sqrt_and_sqrt, serialize_rows, SubspacePair};
use crate::error::{Error, Result};

/// Distance from 0 and 1 below which `theta` counts as a boundary value.
pub const BOUNDARY_TOL: f64 = 1e-12;
/// The smallest eigenvalue of `Id - U / theta^2` is exactly zero; dividing
/// by `theta^2` amplifies its rounding error, so only clearly negative values
/// are rejected. The residuals catch anything the clip hides.
const EIGEN_CLIP: f64 = -1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RigidCoupling {
    pub theta: f64,
    #[serde(serialize_with = "serialize_rows")]
    pub tau1: DMatrix<f64>,
    #[serde(serialize_with = "serialize_rows")]
    pub tau2: DMatrix<f64>,
    /// Operator norm of `U` on `H2`; at most `theta^2`.
    pub u_norm: f64,
    /// `max |<e_i, tau1 g_j> - <e_i, g_j> / theta|`.
    pub residual_i: f64,
    /// `max |<tau g_j, tau g_k> - <g_j, g_k>|`.
    pub residual_ii: f64,
}

pub fn rigid_coupling(pair: &SubspacePair) -> Result<RigidCoupling> {
    let theta = pair.theta();
    if theta < BOUNDARY_TOL || theta > 1.0 - BOUNDARY_TOL {
        return Err(Error::CouplingBoundary(theta));
    }
    let (g1, g2, g12) = (pair.g1(), pair.g2(), pair.g12());
    let g1_inv = g1
        .clone()
        .cholesky()
        .ok_or_else(|| Error::NotPositiveDefinite("G1".into()))?
        .inverse();
    let tau1 = &g1_inv * g12 / theta;

    // U is self-adjoint for the G2 inner product; work with its symmetric
    // whitened form G2^{1/2} U G2^{-1/2} = M^T M, built from the same M as
    // theta so that its top eigenvalue is theta^2 to rounding.
    let (w1, _) = inv_sqrt_and_sqrt(g1);
    let (w2, r2) = inv_sqrt_and_sqrt(g2);
    let m = w1 * g12 * &w2;
    let u_white = m.transpose() * &m;
    let u_white = (&u_white + u_white.transpose()) * 0.5;
    let d2 = g2.nrows();
    let eig = SymmetricEigen::new(DMatrix::identity(d2, d2) - &u_white / (theta * theta));
    if let Some(&bad) = eig.eigenvalues.iter().find(|&&l| l < EIGEN_CLIP) {
        return Err(Error::NotPositiveDefinite(format!(
            "Id - U / theta^2 has eigenvalue {bad:e}"
        )));
    }
    let root = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| l.max(0.0).sqrt()));
    let v_white = &eig.eigenvectors * root * eig.eigenvectors.transpose();
    let tau2 = &w2 * v_white * &r2;

    let u_norm = SymmetricEigen::new(u_white).eigenvalues.amax();
    let residual_i = (g1 * &tau1 - g12 / theta).amax();
    let residual_ii = (tau1.transpose() * g1 * &tau1 + tau2.transpose() * g2 * &tau2 - g2).amax();
    Ok(RigidCoupling {
        theta,
        tau1,
        tau2,
        u_norm,
        residual_i,
        residual_ii,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gebelein::pair::random_pair_in_range;
    use crate::simulate::replication_rng;

    #[test]
    fn scalar_coupling() {
        let c = rigid_coupling(&SubspacePair::scalar(0.6).unwrap()).unwrap();
        assert!((c.tau1[(0, 0)] - 1.0).abs() < 1e-14);
        assert!(c.tau2[(0, 0)].abs() < 1e-7);
        assert!((c.u_norm - 0.36).abs() < 1e-14);
    }

    #[test]
    fn boundary_values_are_rejected() {
        for rho in [0.0, 1.0] {
            assert!(matches!(
                rigid_coupling(&SubspacePair::scalar(rho).unwrap()),
                Err(Error::CouplingBoundary(_))
            ));
        }
    }

    #[test]
    fn random_couplings_are_isometric() {
        let mut rng = replication_rng(17, 0);
        for d1 in 1..=3 {
            for d2 in 1..=3 {
                let pair = random_pair_in_range(&mut rng, d1, d2, 0.05, 0.95).unwrap();
                let c = rigid_coupling(&pair).unwrap();
                assert!(c.residual_i < 1e-10, "{c:?}");
                assert!(c.residual_ii < 1e-10, "{c:?}");
                assert!(c.u_norm <= c.theta * c.theta * (1.0 + 1e-12));
            }
        }
    }
}
