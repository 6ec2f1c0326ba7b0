use thiserror::Error;

/// Errors raised across the simulator, fitting layer and I/O.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid atomic constants: {0}")]
    InvalidConstants(String),

    #[error("field {b_gauss} G exceeds the linear Zeeman bound of {limit} G")]
    FieldOutOfRange { b_gauss: f64, limit: f64 },

    #[error("laser components do not share one rotating frame: {0}")]
    InconsistentFrame(String),

    #[error("invalid field configuration: {0}")]
    InvalidField(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("positivity violated: minimum eigenvalue {min_eigenvalue:e}")]
    PositivityViolation { min_eigenvalue: f64 },

    #[error("probe too strong: {0}")]
    ProbeTooStrong(String),

    #[error("probe back-action {fraction:.4e} exceeds the allowed {limit:.4e}")]
    ProbeBackAction { fraction: f64, limit: f64 },

    #[error("steady state not reached after {elapsed_s} s (residual {residual:e})")]
    SteadyStateNotReached { elapsed_s: f64, residual: f64 },

    #[error("mean-field iteration did not converge after {iterations} iterations (change {change:e})")]
    MeanFieldNotConverged { iterations: usize, change: f64 },

    #[error("invalid spin-exchange configuration: {0}")]
    InvalidSpinExchange(String),

    #[error("invalid experiment: {0}")]
    InvalidExperiment(String),

    #[error("invalid trace: {0}")]
    InvalidTrace(String),

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("value out of range: {0}")]
    OutOfRange(String),

    #[error("config error at line {line}, column {column}: {message}")]
    ConfigParse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("unknown config key `{key}` at line {line}, column {column}")]
    UnknownKey { key: String, line: usize, column: usize },

    #[error("unit mismatch for `{key}`: expected unit suffix `{expected}`")]
    UnitMismatch { key: String, expected: String },

    #[error("constraint `{name}` violated: {message}")]
    Constraint { name: String, message: String },

    #[error("missing file {0}")]
    MissingFile(std::path::PathBuf),

    #[error("malformed trace file at line {line}: {message}")]
    MalformedCsv { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
