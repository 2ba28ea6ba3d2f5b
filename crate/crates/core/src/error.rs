use thiserror::Error;

/// Errors produced by the covnet library.
///
/// The enum is `Clone` so that a failed lazily-computed eigendecomposition
/// can be cached and handed back on every later access; I/O-backed variants
/// store the rendered message for the same reason.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found} ({context})")]
    DimMismatch {
        expected: usize,
        found: usize,
        context: &'static str,
    },

    #[error("matrix is not symmetric within tolerance {tol:e} (max deviation {deviation:e})")]
    NotSymmetric { deviation: f64, tol: f64 },

    #[error("matrix is not positive semi-definite: min eigenvalue {min_eig:e} below -{tol:e}")]
    NotPsd { min_eig: f64, tol: f64 },

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("dataset has no targets ({0})")]
    MissingTargets(&'static str),

    #[error("eigendecomposition did not converge within {sweeps} sweeps")]
    NoConvergence { sweeps: usize },

    #[error("zero vector has no canonical sign")]
    ZeroVector,

    #[error("eigenvalue gap {gap:e} below required minimum {min_gap:e}")]
    EigengapTooSmall { gap: f64, min_gap: f64 },

    #[error("degenerate spectrum: {0}")]
    DegenerateSpectrum(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("training loss became non-finite at epoch {epoch}, batch {batch}")]
    NanLoss { epoch: usize, batch: usize },

    #[error("model blob schema version {found} not supported (expected {expected})")]
    SchemaVersion { found: u32, expected: u32 },

    #[error("malformed model blob: {0}")]
    MalformedBlob(String),

    #[error("filter response hypothesis violated at layer {layer}, output {f_out}, input {f_in}: max |h(lambda)| = {max_response}")]
    ResponseBoundViolated {
        layer: usize,
        f_out: usize,
        f_in: usize,
        max_response: f64,
    },

    #[error("targets differ across resolutions")]
    TargetMismatch,

    #[error("linear system is singular beyond jitter")]
    SingularSystem,

    #[error("I/O error: {0}")]
    Io(String),

    #[error("CSV error: {0}")]
    Csv(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Csv(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
