use thiserror::Error;

/// Errors raised by the analysis library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("non-finite input: {0}")]
    NonFinite(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The abc-frame torque `ω⁻¹ eᵀi` is undefined at zero speed.
    #[error("singular rotor velocity: torque term divides by omega = {0}")]
    SingularVelocity(f64),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("degenerate network: {0}")]
    DegenerateNetwork(String),

    #[error("numeric failure: {0}")]
    NumericFailure(String),

    #[error("step size underflow at t = {t:.6e} (h = {h:.3e}); system looks stiff")]
    Stiffness { t: f64, h: f64 },

    /// Two independent computations disagree, or a computed result fails its
    /// own defining equations.
    #[error("internal inconsistency: {0}")]
    Inconsistency(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn is_numeric(&self) -> bool {
        matches!(self, Error::NumericFailure(_) | Error::Stiffness { .. })
    }
}
