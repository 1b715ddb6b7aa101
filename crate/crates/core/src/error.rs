use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("filter synthesis failed: band error {max_mag_db:.3} dB / {max_phase_deg:.3} deg exceeds limit")]
    Synthesis { max_mag_db: f64, max_phase_deg: f64 },

    #[error("denominator vanishes at omega = {omega} rad/s")]
    PoleOnGrid { omega: f64 },

    #[error("expected exactly one gain crossover in bracket, found {}: {crossings:?}", crossings.len())]
    Bracket { crossings: Vec<f64> },

    #[error("infeasible design: required phase lead {required_lead_deg:.3} deg is outside [0, 90)")]
    InfeasibleDesign { required_lead_deg: f64 },

    #[error("order {value} is not a rational p/q with q <= {max_denominator}; rationalize first")]
    OrderApproximation { value: f64, max_denominator: u64 },

    #[error("numeric failure: {message} (residual {residual:e})")]
    Numeric { message: String, residual: f64 },

    #[error("polynomial degree {0} exceeds the root-finder limit")]
    DegreeTooLarge(usize),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
