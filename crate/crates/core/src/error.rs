use thiserror::Error;

/// Every failure the library can report. The variant name is what the CLI
/// prints on stderr, so keep them stable.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("TailNotMet: {what} did not converge within {terms} terms")]
    TailNotMet { what: &'static str, terms: usize },
    #[error("InvalidParameter: {0}")]
    InvalidParameter(String),
    #[error("ConstraintViolated: zero-sum defect {defect:e}")]
    ConstraintViolated { defect: f64 },
    #[error("ZeroCountMismatch: argument principle gives {expected}, found {found}")]
    ZeroCountMismatch { expected: i64, found: usize },
    #[error("ProbeAtZero: every probe point sits too close to a zero")]
    ProbeAtZero,
    #[error("NotPeriodic: translation defect {defect:e} at probe points")]
    NotPeriodic { defect: f64 },
    #[error("StepFailure: step size {dt:e} underflowed at t = {t}")]
    StepFailure { t: f64, dt: f64 },
    #[error("WindowOverflow: a nonzero coefficient would leave the window")]
    WindowOverflow,
    #[error("RealityViolated: g(xi) != conj f(-xi), defect {defect:e}")]
    RealityViolated { defect: f64 },
    #[error("NotAdmissible: {0}")]
    NotAdmissible(String),
    #[error("NoTransition: predicate is constant over [{lo}, {hi}]")]
    NoTransition { lo: f64, hi: f64 },
}

impl Error {
    /// Short variant name for diagnostics.
    pub fn name(&self) -> &'static str {
        match self {
            Error::TailNotMet { .. } => "TailNotMet",
            Error::InvalidParameter(_) => "InvalidParameter",
            Error::ConstraintViolated { .. } => "ConstraintViolated",
            Error::ZeroCountMismatch { .. } => "ZeroCountMismatch",
            Error::ProbeAtZero => "ProbeAtZero",
            Error::NotPeriodic { .. } => "NotPeriodic",
            Error::StepFailure { .. } => "StepFailure",
            Error::WindowOverflow => "WindowOverflow",
            Error::RealityViolated { .. } => "RealityViolated",
            Error::NotAdmissible(_) => "NotAdmissible",
            Error::NoTransition { .. } => "NoTransition",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
