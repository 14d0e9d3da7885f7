use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A configuration value violates its invariant. `key` is the dotted
    /// config path of the offending field.
    #[error("invalid value for `{key}`: {reason}")]
    InvalidConfig { key: &'static str, reason: String },

    #[error("small cell {cell} at ({x:.3}, {y:.3}) with IRS ring radius {radius} m does not fit in a {side} m grid")]
    CellOutsideGrid {
        cell: usize,
        x: f64,
        y: f64,
        radius: f64,
        side: f64,
    },

    #[error("agent is already initialized")]
    AlreadyInitialized,

    #[error("agent has not been initialized")]
    NotInitialized,

    #[error("RSSI vector has {got} entries but the agent has {expected} candidates")]
    RssiLengthMismatch { expected: usize, got: usize },

    #[error("SNR must be non-negative, got {0}")]
    NegativeSnr(f64),

    #[error("cannot compute mean satisfaction over zero UEs")]
    NoUes,
}

pub(crate) fn invalid(key: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidConfig {
        key,
        reason: reason.into(),
    }
}
