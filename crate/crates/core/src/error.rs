//! Error type shared by every module in the crate.

use thiserror::Error;

/// Errors produced by model construction, linear algebra, sampling and I/O.
#[derive(Debug, Error)]
pub enum Error {
    /// A matrix that must be symmetric positive definite is not.
    #[error("matrix not positive definite: {0}")]
    NotPositiveDefinite(String),

    /// A matrix that must be positive semi-definite is not PSD: "not PSD".
    #[error("not PSD: minimum eigenvalue {min_eig:.3e} below tolerance")]
    NotPsd { min_eig: f64 },

    /// The nuisance block of a partitioned precision matrix is singular.
    #[error("nuisance block singular")]
    NuisanceBlockSingular,

    /// A linear system could not be solved.
    #[error("singular matrix: {0}")]
    Singular(String),

    /// Dimension mismatch or otherwise invalid argument.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Importance-sampling proposal does not exist for the given parameters.
    #[error("proposal undefined; increase lambda (need 2*lambda > k - 1)")]
    ProposalUndefined,

    /// Effective sample size collapsed below the acceptance threshold.
    #[error("importance sampler degenerate; increase count (ess = {ess:.1} of {count})")]
    SamplerDegenerate { ess: f64, count: usize },

    /// A generated covariance model failed its positive-definiteness check.
    #[error("model {model_id} with k = {k} is not positive definite")]
    ModelNotPositiveDefinite { model_id: u8, k: usize },

    /// Configuration file problem (unknown key, bad value, missing section).
    #[error("config error: {0}")]
    Config(String),

    /// Malformed data file.
    #[error("data error at line {line}: {msg}")]
    Data { line: usize, msg: String },

    /// Underlying I/O failure.
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    /// CSV parse/serialize failure.
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
