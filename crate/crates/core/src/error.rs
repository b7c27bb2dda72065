use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    /// A cell that could not be parsed as a number. `row` is the 1-based
    /// line number in the file (the header is row 1).
    #[error("parse error at row {row}, column '{column}': cannot parse {value:?} as a number")]
    Parse {
        row: usize,
        column: String,
        value: String,
    },

    #[error("missing value at row {row}, column '{column}' (na_policy = reject)")]
    MissingValue { row: usize, column: String },

    #[error("structural error: {0}")]
    Structural(String),

    #[error("insufficient sample: {0}")]
    InsufficientSample(String),

    #[error("singular design: columns {columns:?} are linearly dependent on the others")]
    Singular { columns: Vec<String> },

    #[error("weak or invalid instrument: {0}")]
    WeakInstrument(String),

    #[error("degenerate series: {0}")]
    DegenerateSeries(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid simulation spec: {0}")]
    Spec(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("decomposition failed: {0}")]
    Decomposition(String),
}

impl Error {
    /// Errors caused by the input data rather than by numerics or usage.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::Io(_)
                | Error::Csv(_)
                | Error::Parse { .. }
                | Error::MissingValue { .. }
                | Error::Structural(_)
        )
    }

    pub fn is_numerical_error(&self) -> bool {
        matches!(
            self,
            Error::InsufficientSample(_)
                | Error::Singular { .. }
                | Error::WeakInstrument(_)
                | Error::DegenerateSeries(_)
                | Error::Decomposition(_)
        )
    }
}
