use serde::Serialize;
use thiserror::Error;

/// Errors raised by every layer of the crate, from linear algebra up to the
/// scenario runner. Each variant maps onto one of the CLI exit statuses.
#[derive(Debug, Clone, PartialEq, Error, Serialize)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    Dimension {
        context: String,
        expected: usize,
        actual: usize,
    },
    #[error("degenerate spectrum: minimum eigenvalue gap {min_gap:e} <= tolerance {tol_gap:e}")]
    DegenerateSpectrum { min_gap: f64, tol_gap: f64 },
    #[error("numerical failure in {operation}: {message}")]
    Numerical { operation: String, message: String },
    #[error("singular matrix: reciprocal condition {rcond:e}")]
    SingularMatrix { rcond: f64 },
    #[error("ambiguous frame matching for eigenvector {index}: overlaps {best:e} and {runner_up:e}")]
    AmbiguousMatch {
        index: usize,
        best: f64,
        runner_up: f64,
    },
    #[error("zero vector supplied to {operation}")]
    ZeroVector { operation: String },
    #[error("binormalization drift {drift:e} exceeds {threshold:e}; reduce the time step")]
    Drift { drift: f64, threshold: f64 },
    #[error("grid error: {0}")]
    Grid(String),
    #[error("biorthogonal states: overlap {overlap} has magnitude {magnitude:e} (tol_bio {tol_bio:e})")]
    Biorthogonal {
        overlap: String,
        magnitude: f64,
        tol_bio: f64,
    },
    #[error("degenerate geodesic: overlap vanishes at s = {s}")]
    DegeneratePath { s: f64 },
    #[error("anchor overlap {overlap} has magnitude {magnitude:e} (tol_bio {tol_bio:e})")]
    Anchor {
        overlap: String,
        magnitude: f64,
        tol_bio: f64,
    },
    #[error("anchor search failed: best minimum overlap {best:e} after {draws} draws (tol_bio {tol_bio:e})")]
    AnchorSearch { best: f64, draws: usize, tol_bio: f64 },
    #[error("parse error at {path}: {message}")]
    Parse { path: String, message: String },
    #[error("i/o error on {path}: {message}")]
    Io { path: String, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit status used by the command line front end.
    pub fn exit_status(&self) -> i32 {
        match self {
            Error::Parse { .. } | Error::Dimension { .. } | Error::Grid(_) => 2,
            Error::DegenerateSpectrum { .. } | Error::AmbiguousMatch { .. } => 3,
            Error::Biorthogonal { .. }
            | Error::Anchor { .. }
            | Error::AnchorSearch { .. }
            | Error::DegeneratePath { .. }
            | Error::ZeroVector { .. } => 4,
            Error::Numerical { .. } | Error::SingularMatrix { .. } | Error::Drift { .. } => 5,
            Error::Io { .. } => 1,
        }
    }

    /// Short machine-readable tag for the error record.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Dimension { .. } => "DimensionError",
            Error::DegenerateSpectrum { .. } => "DegenerateSpectrumError",
            Error::Numerical { .. } => "NumericalError",
            Error::SingularMatrix { .. } => "SingularMatrixError",
            Error::AmbiguousMatch { .. } => "AmbiguousMatchError",
            Error::ZeroVector { .. } => "ZeroVectorError",
            Error::Drift { .. } => "DriftError",
            Error::Grid(_) => "GridError",
            Error::Biorthogonal { .. } => "BiorthogonalError",
            Error::DegeneratePath { .. } => "DegeneratePathError",
            Error::Anchor { .. } => "AnchorError",
            Error::AnchorSearch { .. } => "AnchorSearchError",
            Error::Parse { .. } => "ParseError",
            Error::Io { .. } => "IoError",
        }
    }

    pub(crate) fn dimension(context: impl Into<String>, expected: usize, actual: usize) -> Self {
        Error::Dimension {
            context: context.into(),
            expected,
            actual,
        }
    }

    pub(crate) fn parse(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            message: message.into(),
        }
    }
}
