use thiserror::Error;

/// Errors raised by the library. Absence of a witness is never an error;
/// those are reported as `None` values.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("contract violation: {0}")]
    ContractViolation(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("precondition not met: {0}")]
    Precondition(String),

    /// Too many samples could not be resolved at the supplied window.
    #[error("precision insufficient: {detail}; a window of at least {needed_window} is required")]
    PrecisionInsufficient { needed_window: u32, detail: String },

    #[error("materialization bound reached: {0}")]
    MaterializationBound(String),

    #[error("enumeration exhausted: {0}")]
    EnumerationExhausted(String),

    /// A cascade step could not be found inside the horizon. The rendered
    /// partial certificate is carried along for inspection.
    #[error("horizon exhausted after {steps_found} cascade steps (horizon {horizon})")]
    HorizonExhausted {
        horizon: u64,
        steps_found: usize,
        partial: String,
    },

    #[error("insufficient schedule: {0}")]
    InsufficientSchedule(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
