//! Maximal correlation of Gaussian subspaces, quadrature checks of
//! Gebelein's inequality and the rigid coupling behind its proof.

mod check;
mod coupling;
mod pair;
mod quadrature;
mod suite;

pub use check::{
    check_gebelein, check_rigid, check_rigid_with_breakpoints, GebeleinCheck, GEBELEIN_CENTERING_TOL,
    HOLDS_TOL, RANK_PROJECTION_TOL, TIGHT_TOL,
};
pub use coupling::{rigid_coupling, RigidCoupling, BOUNDARY_TOL};
pub use pair::{
    matrix_from_rows, random_orthogonal_pair, random_pair, random_pair_in_range, theta, SubspacePair, MAX_CONDITION,
    MAX_SUBSPACE_DIM,
};
pub use quadrature::{gaussian_expectation, multi_indices, MAX_TENSOR_NODES};
pub use suite::*;

use crate::error::{Error, Result};

/// Largest `d1 + d2` for [`joint_expectation`].
pub const MAX_JOINT_DIM: usize = 6;

/// `E[F1(W1) F2(W2)]` under the joint law given by the pair's full Gram.
pub fn joint_expectation<F1, F2>(f1: F1, f2: F2, pair: &SubspacePair, quad_order: usize) -> Result<f64>
where
    F1: Fn(&[f64]) -> f64,
    F2: Fn(&[f64]) -> f64,
{
    let d1 = pair.d1();
    if d1 + pair.d2() > MAX_JOINT_DIM {
        return Err(Error::InvalidArgument(format!(
            "d1 + d2 = {} exceeds {MAX_JOINT_DIM}",
            d1 + pair.d2()
        )));
    }
    gaussian_expectation(&pair.full_gram(), |x| f1(&x[..d1]) * f2(&x[d1..]), quad_order)
}
