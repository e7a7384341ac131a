use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("direction is undefined: query point coincides with the apex")]
    DegenerateDirection,
    #[error("point lies in cone {actual}, not cone {expected}")]
    WrongCone { expected: usize, actual: usize },
    #[error("cone count {0} is too small (need k >= 7 for a finite spanning ratio)")]
    ConeCountTooSmall(usize),
    #[error("cone count must be positive")]
    ZeroCones,
    #[error("coordinate is not finite: ({0}, {1})")]
    NonFinite(f64, f64),
    #[error("duplicate point at index {second} (same as index {first})")]
    DuplicatePoint { first: usize, second: usize },
    #[error("need at least 2 points, got {0}")]
    TooFewPoints(usize),
    #[error("vertex {vertex} has no out-edge in cone {cone}")]
    NoEdgeInCone { vertex: usize, cone: usize },
    #[error("routing from {from} to {to} did not terminate within {steps} steps")]
    RoutingDiverged {
        from: usize,
        to: usize,
        steps: usize,
    },
    #[error("vertex {to} is unreachable from {from}")]
    Unreachable { from: usize, to: usize },
    #[error("vertex index {0} out of range")]
    BadVertex(usize),
    #[error("no edge between {0} and {1}")]
    NoSuchEdge(usize, usize),
    #[error("oracle queried while hypothesis of label {0} is mid-edge")]
    QueryOffVertex(usize),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("no data to summarize")]
    NoData,
    #[error("invalid config field `{field}`: {reason}")]
    Config { field: &'static str, reason: String },
    #[error("fingerprint mismatch: {0} vs {1}")]
    FingerprintMismatch(String, String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn config(field: &'static str, reason: impl Into<String>) -> Self {
        Error::Config {
            field,
            reason: reason.into(),
        }
    }

    /// True for errors caused by bad user input rather than a broken invariant.
    pub fn is_user_error(&self) -> bool {
        matches!(
            self,
            Error::Config { .. }
                | Error::Parse(_)
                | Error::Io(_)
                | Error::ConeCountTooSmall(_)
                | Error::ZeroCones
                | Error::NonFinite(..)
                | Error::DuplicatePoint { .. }
                | Error::TooFewPoints(_)
                | Error::BadVertex(_)
                | Error::NoData
                | Error::FingerprintMismatch(..)
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
