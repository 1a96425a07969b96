use thiserror::Error;

/// Errors for the extended-precision toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not symmetric (|A - A^T| max {0:e})")]
    NotSymmetric(f64),

    #[error("eigensolver did not converge after {sweeps} sweeps (worst off-diagonal {residual:e})")]
    EigenNonConvergence { sweeps: usize, residual: f64 },

    #[error("matrix is numerically singular (pivot {pivot:e} below threshold {threshold:e})")]
    Singular { pivot: f64, threshold: f64 },

    #[error("matrix is not positive definite (offending eigenvalue {eigenvalue:e})")]
    NotPositiveDefinite { eigenvalue: f64 },

    #[error("quadrature did not converge (achieved {achieved:e}, target {target:e})")]
    QuadratureNonConvergence { achieved: f64, target: f64 },

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("invalid geometry: {0}")]
    Geometry(String),

    #[error("precision failure: {0}")]
    Precision(String),

    #[error("degenerate spectrum: {0}")]
    DegenerateSpectrum(String),

    #[error("contract violation: {0}")]
    Contract(String),
}

pub type Result<T> = std::result::Result<T, Error>;
