use thiserror::Error;

/// Crate-wide error type.
///
/// Variants are named after the contract they guard so callers can match on
/// the failure kind rather than parse messages.
#[derive(Debug, Error)]
pub enum CsError {
    #[error("no column found for coordinate ({event}, {region}) (label {label:?})")]
    MissingCoordinate {
        event: usize,
        region: usize,
        label: String,
    },

    #[error("columns {first:?} and {second:?} map to the same (event, region) cell")]
    DuplicateCoordinate { first: String, second: String },

    #[error("column label {label:?} does not parse under the schema: {reason}")]
    UnparsableLabel { label: String, reason: String },

    #[error("index out of range: {what} = {index}, valid range 0..{len}")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        len: usize,
    },

    #[error("malformed csv: {0}")]
    MalformedCsv(String),

    #[error("non-numeric cell {value:?} at row {row}, column {column:?}")]
    NonNumericCell {
        row: usize,
        column: String,
        value: String,
    },

    #[error("duplicate column label {0:?}")]
    DuplicateColumnLabel(String),

    #[error("time labels not strictly increasing at row {row}: {prev:?} !< {next:?}")]
    NonMonotoneTime {
        row: usize,
        prev: String,
        next: String,
    },

    #[error("io failure on {path}: {source}")]
    IoFailure {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("tape mismatch: {0}")]
    TapeMismatch(String),

    #[error("invalid dropout rate {0} (need 0 <= p < 1)")]
    InvalidRate(f64),

    #[error("insufficient history: have {have} time steps, need at least {need}")]
    InsufficientHistory { have: usize, need: usize },

    #[error("singular design matrix in least-squares fit (try ridge > 0)")]
    SingularDesign,

    #[error("MASE scale undefined: in-sample series is constant")]
    UndefinedScale,

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("no series with a defined metric")]
    NoDefinedSeries,

    #[error("protocol mismatch between reports: {0}")]
    ProtocolMismatch(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("incompatible model: {0}")]
    IncompatibleModel(String),

    #[error("{0} values must be finite")]
    NonFiniteValue(&'static str),
}

pub type Result<T> = std::result::Result<T, CsError>;
