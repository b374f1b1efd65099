use thiserror::Error;

/// Top-level CLI failure. Every variant prints as a single line so scripts
/// can match on `error: ...` output.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad configuration: malformed JSON, unknown keys, out-of-range values.
    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] qbat_core::Error),

    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },

    #[error("{0}")]
    Env(String),

    #[error("validation failed: {failed} of {total} checks")]
    Validation { failed: usize, total: usize },
}
