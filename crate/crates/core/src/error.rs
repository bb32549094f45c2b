use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("grid spacing is not uniform (node {index})")]
    NonUniformGrid { index: usize },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("right-hand side returned a non-finite value at x = {at}")]
    NonFiniteRhs { at: f64 },
    #[error("step budget of {steps} steps exhausted at x = {at}")]
    StepBudgetExhausted { at: f64, steps: usize },
    #[error("log-divergence fit failed: {0}")]
    FitFailed(String),
    #[error("no blow-up before the integration horizon {horizon}")]
    NoBlowup { horizon: f64 },
    #[error("integration stalled (step underflow) at x = {at} before a blow-up was detected")]
    Stalled { at: f64 },
    #[error("central potential is zero: the solution is identically flat and not normalizable")]
    DegenerateFlat,
    #[error("central temporal potential must be negative, got {u_t0}")]
    WrongSign { u_t0: f64 },
    #[error("exponent {exponent} out of range while forming the Gibbs density")]
    OverflowGuard { exponent: f64 },
    #[error("U_s0 + U_t0 = {u_tot} is not negative; enlarge |U_t0|")]
    NonNegativeUtot { u_tot: f64 },
    #[error("limit state kinds do not match the operation")]
    KindMismatch,
    #[error("evaluation region reaches {requested}, inside the density floor zone beyond {last}")]
    DensityFloorReached { requested: f64, last: f64 },
}

impl Error {
    /// Stable identifier used in machine-readable error records.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidGrid(_) => "InvalidGrid",
            Error::NonUniformGrid { .. } => "NonUniformGrid",
            Error::InvalidInput(_) => "InvalidInput",
            Error::NonFiniteRhs { .. } => "NonFiniteRhs",
            Error::StepBudgetExhausted { .. } => "StepBudgetExhausted",
            Error::FitFailed(_) => "FitFailed",
            Error::NoBlowup { .. } => "NoBlowup",
            Error::Stalled { .. } => "Stalled",
            Error::DegenerateFlat => "DegenerateFlat",
            Error::WrongSign { .. } => "WrongSign",
            Error::OverflowGuard { .. } => "OverflowGuard",
            Error::NonNegativeUtot { .. } => "NonNegativeUtot",
            Error::KindMismatch => "KindMismatch",
            Error::DensityFloorReached { .. } => "DensityFloorReached",
        }
    }
}
