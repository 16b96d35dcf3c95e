use thiserror::Error;

/// Errors raised by the thermo-mechanical toolkit.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-positive temperature {0}")]
    NonPositiveTemperature(f64),

    #[error("domain violation: {0}")]
    Domain(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("constraint Jacobian is rank deficient (rank {rank} < {expected})")]
    RankDeficient { rank: usize, expected: usize },

    #[error("jet is dynamically inconsistent: constraint-force fit residual {residual:e}")]
    InconsistentJet { residual: f64 },

    #[error("guard `{guard}` violated at t = {t}: state {state:?}")]
    GuardViolation { guard: String, t: f64, state: Vec<f64> },

    #[error("maximum number of steps ({0}) exceeded")]
    MaxSteps(usize),

    #[error("step size underflow at t = {0}")]
    StepSizeUnderflow(f64),

    #[error("resonant parameters: kappa/nu = 2 mu/m, closed form degenerates")]
    Resonant,

    #[error("turning point between x0 and {x_target}")]
    TurningPoint { x_target: f64 },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
