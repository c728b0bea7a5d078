use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("Hermite order {order} exceeds the configured maximum {max}")]
    OrderOverflow { order: usize, max: usize },

    #[error("function not square-integrable at quadrature scale ({0})")]
    NotSquareIntegrable(String),

    #[error("function is not centered: E[phi(X)] = {mean:e}")]
    NotCentered { mean: f64 },

    #[error("degenerate function: every Hermite coefficient is below the rank threshold")]
    DegenerateFunction,

    #[error("phi is not in D^(1,4) at quadrature scale: {0}")]
    NotInSobolev(String),

    #[error("invalid covariance model: {0}")]
    InvalidModel(String),

    #[error("degenerate normalization: sigma_n^2 = {0:e}")]
    DegenerateNormalization(f64),

    #[error("covariance is not summable at rank {rank}: {detail}")]
    NotSummable { rank: usize, detail: String },

    #[error("bound (ii) requires a 2-sparse function; sparsity is {0}")]
    NotTwoSparse(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("circulant embedding failed (min eigenvalue {min_eig:e}) and n = {n} exceeds the Cholesky limit {limit}")]
    EmbeddingFailed { min_eig: f64, n: usize, limit: usize },

    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("ill-conditioned Gram matrix (condition number {0:e})")]
    IllConditioned(f64),

    #[error("rigid coupling undefined at boundary (theta = {0})")]
    CouplingBoundary(f64),

    #[error("declared Hermite rank {declared} contradicted: projection onto degree {degree} is {value:e}")]
    RankContradicted {
        declared: usize,
        degree: usize,
        value: f64,
    },

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("too few samples: {got} (need at least {need})")]
    TooFewSamples { got: usize, need: usize },

    #[error("config error at {location}: {message}")]
    Config { location: String, message: String },

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }
}

pub(crate) trait ResultExt<T> {
    fn context(self, context: impl Into<String>) -> Result<T>;
}

impl<T> ResultExt<T> for Result<T> {
    fn context(self, context: impl Into<String>) -> Result<T> {
        self.map_err(|e| e.context(context))
    }
}
