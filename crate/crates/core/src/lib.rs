//! Explicit Berry-Esseen bounds in total variation for normalized sums of
//! subordinated stationary Gaussian sequences, with the simulation and
//! quadrature machinery needed to check them.

pub mod bounds;
pub mod covariance;
pub mod error;
pub mod experiment;
pub mod gebelein;
pub mod hermite;
pub mod numeric;
pub mod simulate;
pub mod stats;

pub use covariance::CovarianceModel;
pub use error::{Error, Result};
pub use hermite::{ExpansionConfig, HermiteExpansion, Sparsity, SubordinatedFunction};
