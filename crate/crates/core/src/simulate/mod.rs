//! Stationary Gaussian paths, the normalized sums `V_n` and the
//! Malliavin-Stein inner product `<DV_n, u_n>`.

mod batch;
mod path;
mod toeplitz;

pub use batch::{
    sample_autocovariance, sample_inner, sample_vn, sample_vn_and_inner, AutocovarianceEstimate,
    MonteCarloBatch, Statistic,
};
pub use path::{
    embedding_eigenvalues, replication_rng, sample_path, PathSampler, SamplePath, SamplingMethod,
    CHOLESKY_LIMIT, EMBEDDING_CLIP, SEED_STRIDE,
};
pub use toeplitz::{toeplitz_apply_dense, ToeplitzOperator};
