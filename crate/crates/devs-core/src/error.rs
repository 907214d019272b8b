//! Errors raised by the formalism layer.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CoreError {
    /// Times are non-negative reals; +infinity is built via `Time::INFINITY`.
    #[error("invalid time value {value}: must be finite and non-negative")]
    InvalidTime { value: f64 },

    #[error("unknown input port {port:?} on {model}")]
    PortUnknown { model: String, port: String },

    #[error("unknown behavior kind {kind:?}")]
    UnknownKind { kind: String },

    #[error("unknown translation {id:?}")]
    UnknownTranslation { id: String },

    #[error("invalid parameter {name:?} for {kind:?}: {reason}")]
    InvalidParameter {
        kind: String,
        name: String,
        reason: String,
    },

    /// Carries every violation found by coupled-model validation, joined.
    #[error("invalid coupled model: {0}")]
    InvalidModel(String),
}
