use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {what}: expected {expected}, got {actual}")]
    Dimension {
        what: &'static str,
        expected: String,
        actual: String,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("degenerate data: {0}")]
    Degenerate(String),

    #[error("degenerate labels: {0}")]
    DegenerateLabels(String),

    #[error("singular system: {0}")]
    Singular(String),

    #[error("non-uniform sampling at index {index} (t = {t}): step {step} deviates from {expected} by more than 1%")]
    NonUniformSampling {
        index: usize,
        t: f64,
        step: f64,
        expected: f64,
    },

    #[error("parse error at line {line} (byte offset {byte_offset}), field `{field}`: {message}")]
    Parse {
        line: usize,
        byte_offset: usize,
        field: String,
        message: String,
    },

    #[error("schema error in column `{column}`: {message}")]
    Schema { column: String, message: String },

    #[error("unsupported schema version {found} (this build reads version {supported}){detail}")]
    Version {
        found: u32,
        supported: u32,
        detail: String,
    },

    #[error("at sample {index}: {source}")]
    AtSample {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("toml: {0}")]
    Toml(String),
}

impl Error {
    pub(crate) fn dim(what: &'static str, expected: impl ToString, actual: impl ToString) -> Self {
        Error::Dimension {
            what,
            expected: expected.to_string(),
            actual: actual.to_string(),
        }
    }

    /// Short stable identifier for machine-parsable error lines.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Dimension { .. } => "dimension",
            Error::InvalidConfig(_) => "config",
            Error::InvalidInput(_) => "input",
            Error::Degenerate(_) => "degenerate",
            Error::DegenerateLabels(_) => "degenerate_labels",
            Error::Singular(_) => "singular",
            Error::NonUniformSampling { .. } => "sampling",
            Error::Parse { .. } => "parse",
            Error::Schema { .. } => "schema",
            Error::Version { .. } => "version",
            Error::AtSample { source, .. } => source.kind(),
            Error::Io(_) => "io",
            Error::Json(_) => "json",
            Error::Toml(_) => "toml",
        }
    }
}
