use thiserror::Error;

/// Errors produced by the modelling and analysis routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("non-finite input `{0}`")]
    NonFinite(&'static str),

    #[error("lower magnon branch never reaches the cavity: f_afmr0 = {f_afmr0} GHz <= f_cavity = {f_cavity} GHz")]
    NoCrossing { f_afmr0: f64, f_cavity: f64 },

    #[error("field {field} T is beyond the spin-flop field {spin_flop} T")]
    BeyondSpinFlop { field: f64, spin_flop: f64 },

    #[error("invalid axis `{axis}`: {reason}")]
    InvalidAxis { axis: &'static str, reason: String },

    #[error("frequency {freq} GHz outside axis range [{min}, {max}] GHz")]
    OutOfRange { freq: f64, min: f64, max: f64 },

    #[error(
        "no peaks in window [{lo}, {hi}] T: need at least 3 columns with a peak, found {found}"
    )]
    NoPeaksInWindow { lo: f64, hi: f64, found: usize },

    #[error("no free parameters selected")]
    NothingToFit,

    #[error("lineshape fit failed: {0}")]
    Lineshape(LineshapeFailure),

    #[error("singular design: {0}")]
    SingularDesign(String),

    #[error("fit produced a non-physical trend: {0}")]
    NonPhysicalTrend(String),

    #[error("malformed input at line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

/// Why a field-domain cut could not be reduced to a single linewidth.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LineshapeFailure {
    NoPeak,
    MultiplePeaks,
    Underresolved,
    NotConverged,
}

impl std::fmt::Display for LineshapeFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let msg = match self {
            LineshapeFailure::NoPeak => "no peak (trace is flat)",
            LineshapeFailure::MultiplePeaks => "multiple peaks above half maximum",
            LineshapeFailure::Underresolved => "fewer than 5 points above half maximum",
            LineshapeFailure::NotConverged => "Lorentzian fit did not converge",
        };
        f.write_str(msg)
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_finite(value: f64, name: &'static str) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonFinite(name))
    }
}

pub(crate) fn ensure_positive(value: f64, name: &'static str) -> Result<f64> {
    ensure_finite(value, name)?;
    if value > 0.0 {
        Ok(value)
    } else {
        Err(Error::InvalidParameter {
            name,
            reason: format!("must be > 0, got {value}"),
        })
    }
}

pub(crate) fn ensure_non_negative(value: f64, name: &'static str) -> Result<f64> {
    ensure_finite(value, name)?;
    if value >= 0.0 {
        Ok(value)
    } else {
        Err(Error::InvalidParameter {
            name,
            reason: format!("must be >= 0, got {value}"),
        })
    }
}
