use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid subordinator spec: {0}")]
    InvalidSpec(String),

    #[error("invalid argument `{name}` = {value}: {reason}")]
    InvalidArgument {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("spec is not in the catalog of special Bernstein functions")]
    NotSpecialRecognized,

    #[error("series did not converge: {0}")]
    NonConvergent(String),

    #[error("quadrature reached {subdivisions} subdivisions (value {value:e}, error estimate {error:e})")]
    MaxSubdivisions {
        subdivisions: usize,
        value: f64,
        error: f64,
    },

    #[error("laplace inversion failed validation: residual {residual:e} exceeds {threshold:e}")]
    ValidationFailed { residual: f64, threshold: f64 },

    #[error("harmonic density inversion is unstable: {0}")]
    InversionUnstable(String),

    #[error("operation requires a spec without killing (q = 0), got q = {0}")]
    KillingNotAllowed(f64),

    #[error("no closed-form potential measure for spec `{0}`")]
    NoClosedFormPotential(String),

    #[error("simulation exceeded the event budget of {0} events")]
    HorizonExceeded(u64),

    #[error("empty sample")]
    EmptySample,

    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub(crate) fn check_finite(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument {
            name,
            value,
            reason: "must be finite",
        })
    }
}

pub(crate) fn check_positive(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument {
            name,
            value,
            reason: "must be a positive finite number",
        })
    }
}

pub(crate) fn check_nonnegative(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument {
            name,
            value,
            reason: "must be a nonnegative finite number",
        })
    }
}
