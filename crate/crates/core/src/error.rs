use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument outside the domain of a flux or density function.
    #[error("domain error: {0}")]
    Domain(String),

    /// Invalid scenario or model configuration; `key` is a dotted path.
    #[error("config error at `{key}`: {message}")]
    Config { key: String, message: String },

    /// A caller broke a documented precondition (e.g. speed limit above v_f).
    #[error("contract violation: {0}")]
    Contract(String),

    /// A conservation or bounds invariant failed during a run.
    #[error("invariant violated at step {step}: {message}")]
    Invariant { step: usize, message: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}
