use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// Shape or size mismatch between tensors, kernels or buffers.
    #[error("dimension error: {0}")]
    Dimension(String),

    /// Weight payload does not match the network it is used with.
    #[error("weight error: {0}")]
    Weight(String),

    /// Malformed file contents (bad magic, version, truncation, corrupt codes).
    #[error("format error: {0}")]
    Format(String),

    /// Argument outside its documented range.
    #[error("parameter error: {0}")]
    Parameter(String),

    /// Value outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Operation called in a state that does not permit it.
    #[error("state error: {0}")]
    State(String),

    /// Network shape the streaming planner cannot handle.
    #[error("unsupported architecture: {0}")]
    UnsupportedArchitecture(String),

    /// Not enough data points to compute a statistic.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// Metric undefined for the given counts.
    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    /// Lifetime undefined (zero current draw).
    #[error("undefined lifetime: {0}")]
    UndefinedLifetime(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
