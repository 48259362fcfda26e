use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Every failure the library can report.
///
/// `is_domain` separates bad input (caller's fault) from numerical failure.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("solution blew up near y = {at} (|value| = {value:e})")]
    BlowUp { at: f64, value: f64 },
    #[error("step size underflow at y = {at} (h = {h:e})")]
    StepUnderflow { at: f64, h: f64 },
    #[error("step budget of {steps} exhausted at y = {at}")]
    StepLimit { at: f64, steps: usize },
    #[error("evaluation at {at} outside [{lo}, {hi}]")]
    OutOfRange { at: f64, lo: f64, hi: f64 },
    #[error("curve passes within {dist:e} of the origin")]
    OriginOnCurve { dist: f64 },
    #[error("bracket endpoints classify identically: {lo} at b = {b_lo}, {hi} at b = {b_hi}")]
    BracketFailure { b_lo: f64, lo: String, b_hi: f64, hi: String },
    #[error("fewer than two plateaus detected ({found})")]
    NoPlateaus { found: usize },
    #[error("iteration is not contracting: sup-diff history {history:?}")]
    NonContraction { history: Vec<f64> },
    #[error("no sign change of F on [{lo}, {hi}]: F = {f_lo:e}, {f_hi:e}")]
    NoSignChange { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },
    #[error("reconstructed profile negative at x = {at} (value {value:e})")]
    PositivityViolation { at: f64, value: f64 },
    #[error("no convergence: {0}")]
    NoConvergence(String),
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// True for input-validation failures, false for numerical ones.
    pub fn is_domain(&self) -> bool {
        matches!(self, Error::Domain(_))
    }

    /// Short machine-readable tag.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "Domain",
            Error::BlowUp { .. } => "BlowUp",
            Error::StepUnderflow { .. } => "StepUnderflow",
            Error::StepLimit { .. } => "StepLimit",
            Error::OutOfRange { .. } => "OutOfRange",
            Error::OriginOnCurve { .. } => "OriginOnCurve",
            Error::BracketFailure { .. } => "BracketFailure",
            Error::NoPlateaus { .. } => "NoPlateaus",
            Error::NonContraction { .. } => "NonContraction",
            Error::NoSignChange { .. } => "NoSignChange",
            Error::PositivityViolation { .. } => "PositivityViolation",
            Error::NoConvergence(_) => "NoConvergence",
        }
    }
}
