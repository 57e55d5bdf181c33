use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Library error type. Numerical failures surface as errors, not as
/// silently wrong numbers.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not symmetric: max asymmetry {asymmetry:.3e} exceeds {tolerance:.3e}")]
    NotSymmetric { asymmetry: f64, tolerance: f64 },

    #[error("eigendecomposition failed to converge")]
    EigNoConvergence,

    #[error("matrix is singular or not positive definite")]
    NotPositiveDefinite,

    #[error("rank-two update denominator {det:.3e} below singularity threshold {threshold:.3e}")]
    SingularUpdate { det: f64, threshold: f64 },

    #[error("leave-one-out denominator vanished (collinear columns): {0:.3e}")]
    CollinearColumns(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("gram matrix too ill-conditioned for interpolation: cond {cond:.3e} > {limit:.3e}")]
    IllPosedInterpolation { cond: f64, limit: f64 },

    #[error("classifier weight vector is zero or non-finite")]
    DegenerateClassifier,

    #[error("SVM did not converge: {0}")]
    SvmNoConvergence(String),

    #[error("training data is not linearly separable")]
    NotSeparable,

    #[error("cross-check disagreement between inverse routes: |{direct:.6e} - {schur:.6e}| > tol")]
    CrossCheckFailed { direct: f64, schur: f64 },

    #[error("corruption budget exceeded: |R| = {requested} > budget {budget}")]
    BudgetExceeded { requested: usize, budget: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("I/O error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
