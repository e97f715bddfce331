use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument violates the operation's precondition.
    #[error("domain error: {0}")]
    Domain(String),
    /// The boundary point is not an anchor of any optimal trajectory (NUP, or BUP without a cone).
    #[error("no terminating characteristic at {0}")]
    NoCharacteristic(String),
    /// `lambda2 == 0`; the control is resolved from the adjacent arc.
    #[error("singular instant: lambda2 = 0")]
    SingularInstant,
    #[error("closed form unavailable for alpha = {0}; use numeric propagation")]
    ClosedFormUnavailable(f64),
    #[error("state ({0}, {1}) is strictly inside the target: already terminated")]
    AlreadyTerminated(f64, f64),
    #[error("no candidate reaches the target within horizon {0}")]
    HorizonExceeded(f64),
    #[error("no characteristic family passes through ({0}, {1})")]
    NoFamily(f64, f64),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
