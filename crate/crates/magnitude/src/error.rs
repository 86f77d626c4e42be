use std::path::PathBuf;

use thiserror::Error;

/// Errors surfaced by the library.
///
/// Numeric operations distinguish between invalid inputs (caller bugs or
/// out-of-contract arguments) and genuine numerical failure such as a
/// singular similarity matrix.
#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("invalid scale t = {0}: the magnitude function is defined for t in (0, inf)")]
    InvalidScale(f64),

    #[error("similarity matrix is numerically singular: {0}")]
    NumericallySingular(String),

    #[error("magnitude solve failed at every scale in the grid")]
    EmptyCurve,

    #[error("insufficient points: {0}")]
    InsufficientPoints(String),

    #[error("non-positive magnitude {value} at t = {t}; cannot fit in log space")]
    NonPositiveMagnitude { t: f64, value: f64 },

    #[error(
        "degenerate slope m = {slope} (m >= 1 gives a non-positive or infinite dimension); \
         lower alpha or use more data"
    )]
    DegenerateSlope { slope: f64 },

    #[error("invalid alpha {0}: the stability index must lie in (0, 2]")]
    InvalidAlpha(f64),

    #[error("malformed IDX file at byte offset {offset}: {detail}")]
    MalformedIdx { offset: usize, detail: String },

    #[error("training loss diverged (non-finite) at iteration {iteration}")]
    DivergedLoss { iteration: u64 },

    #[error("insufficient records: {0}")]
    InsufficientRecords(String),

    #[error("invalid inputs: {0}")]
    InvalidInputs(String),

    #[error("scale t = {t} lies outside the sampled curve range [{lo}, {hi}]")]
    OutOfRange { t: f64, lo: f64, hi: f64 },

    #[error("malformed point-cloud file: {0}")]
    MalformedCloud(String),

    #[error("malformed trajectory file: {0}")]
    MalformedTrajectory(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
