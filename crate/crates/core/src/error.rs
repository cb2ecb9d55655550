use thiserror::Error;

/// Errors raised by estimation, planning and sampling.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("input error: {0}")]
    Input(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("degenerate element: {0}")]
    DegenerateElement(String),

    #[error("insufficient data: need {needed} observations, have {available}")]
    InsufficientData { needed: usize, available: usize },

    #[error("degenerate group {group}: all norms are zero")]
    DegenerateGroup { group: usize },

    #[error(
        "diverging estimate: every kappa equals 1 (S_n = n); groups too small or no tail decay"
    )]
    DivergingEstimate,

    #[error("zero estimate: every kappa equals 0 (S_n = 0)")]
    ZeroEstimate,

    #[error("degenerate variance: {0}")]
    DegenerateVariance(String),

    #[error("plan error: {0}")]
    Plan(String),

    #[error("law-validation error: {0}")]
    LawValidation(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("overlapping partition: atom {atom} lies in cells {first} and {second}")]
    OverlappingPartition {
        atom: usize,
        first: usize,
        second: usize,
    },

    #[error("parse error at row {row}: {message}")]
    Parse { row: usize, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

/// Coarse error classes, one per CLI exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Validation,
    InsufficientData,
    Degenerate,
    Io,
}

impl ErrorClass {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorClass::Validation => 2,
            ErrorClass::InsufficientData => 3,
            ErrorClass::Degenerate => 4,
            ErrorClass::Io => 5,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ErrorClass::Validation => "validation",
            ErrorClass::InsufficientData => "insufficient_data",
            ErrorClass::Degenerate => "degenerate",
            ErrorClass::Io => "io",
        }
    }
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Input(_)
            | Error::DimensionMismatch { .. }
            | Error::Plan(_)
            | Error::LawValidation(_)
            | Error::Numeric(_)
            | Error::OverlappingPartition { .. }
            | Error::Parse { .. } => ErrorClass::Validation,
            Error::InsufficientData { .. } => ErrorClass::InsufficientData,
            Error::DegenerateElement(_)
            | Error::DegenerateGroup { .. }
            | Error::DivergingEstimate
            | Error::ZeroEstimate
            | Error::DegenerateVariance(_) => ErrorClass::Degenerate,
            Error::Io(_) => ErrorClass::Io,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
