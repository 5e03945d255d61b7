use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] physnet::Error),

    #[error("config: {0}")]
    Config(String),

    #[error("config parse: {0}")]
    ConfigParse(#[from] toml::de::Error),

    #[error("config write: {0}")]
    ConfigWrite(#[from] toml::ser::Error),

    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    #[error("plot: {0}")]
    Plot(String),
}

pub type CliResult<T> = std::result::Result<T, CliError>;

impl CliError {
    /// Short machine-readable category.
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Core(e) => match e {
                physnet::Error::NonFiniteValue { .. } => "non_finite_value",
                physnet::Error::UnsupportedFunction(_) => "unsupported",
                physnet::Error::NotPsd { .. } => "not_psd",
                physnet::Error::DimensionMismatch { .. } => "dimension_mismatch",
                physnet::Error::InvalidMatrix(_) => "invalid_matrix",
                physnet::Error::InvalidArgument(_) => "invalid_argument",
                physnet::Error::Diverged { .. } => "diverged",
                physnet::Error::Io(_) | physnet::Error::Csv(_) | physnet::Error::Json(_) => "io",
            },
            CliError::Config(_) | CliError::ConfigParse(_) | CliError::ConfigWrite(_) => "config",
            CliError::Io { .. } => "io",
            CliError::Plot(_) => "plot",
        }
    }
}
