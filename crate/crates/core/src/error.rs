use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("unstable resonator: length {length:.3e} m must be below 2 x mirror radius {radius:.3e} m")]
    UnstableResonator { length: f64, radius: f64 },

    #[error("trap light is blue detuned (effective detuning {detuning:.3e} rad/s); the beam would repel atoms")]
    BlueDetuned { detuning: f64 },

    #[error("lattice beams must share one wavelength ({first:.4e} m vs {second:.4e} m)")]
    WavelengthMismatch { first: f64, second: f64 },

    #[error("input ramp must start at 0, rise monotonically, then fall monotonically to 0 (violated at index {index})")]
    NonMonotoneRamp { index: usize },

    #[error("input {y:.4e} is below the smallest input that can switch ({y_min:.4e})")]
    BelowSwitchingRange { y: f64, y_min: f64 },

    #[error("trace is undersampled: dt = {dt:.3e} s exceeds 1/(10 x bandwidth) = {max_dt:.3e} s")]
    Undersampled { dt: f64, max_dt: f64 },

    #[error("degenerate dataset: {0}")]
    DegenerateDataset(String),

    #[error("need at least {needed} samples, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("fit did not converge: {0}")]
    FitFailed(String),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

/// Checks that `value` is finite and strictly positive.
pub(crate) fn require_positive(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("must be finite and > 0, got {value}")))
    }
}

pub(crate) fn require_non_negative(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("must be finite and >= 0, got {value}")))
    }
}
