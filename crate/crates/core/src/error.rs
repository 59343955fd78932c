use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    /// Shapes or hyperparameters that do not fit together.
    #[error("configuration error: {0}")]
    Config(String),

    /// Malformed input values (empty sequences, non-simplex weights, ...).
    #[error("input error: {0}")]
    Input(String),

    /// A feature container that does not match the on-disk layout.
    #[error("format error at byte {offset}: {msg}")]
    Format { offset: u64, msg: String },

    /// Non-finite values during training, tagged with the stage that produced them.
    #[error("training error in {stage}: {msg}")]
    Training { stage: &'static str, msg: String },

    /// Metrics that are undefined for the given predictions/labels.
    #[error("metric error: {0}")]
    Metric(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub(crate) fn format(offset: u64, msg: impl Into<String>) -> Self {
        Error::Format {
            offset,
            msg: msg.into(),
        }
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// Short machine-readable tag for the error family.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Config(_) => "config",
            Error::Input(_) => "input",
            Error::Format { .. } => "format",
            Error::Training { .. } => "training",
            Error::Metric(_) => "metric",
            Error::Io { .. } => "io",
            Error::Json(_) => "json",
        }
    }
}
