//! Fractional-order operators: exact frequency responses, IIR
//! discretization and a Grünwald–Letnikov time-domain reference.

mod filter;
mod gamma;
mod gl;
mod iri;

use std::f64::consts::FRAC_PI_2;
use std::fmt;

use num_complex::Complex64;

use crate::error::{invalid, Result};

pub use filter::{BandError, DiscreteFilter, ModalForm};
pub use gamma::gamma;
pub use gl::{caputo_gl_oracle, caputo_gl_oracle_with, gl_weights};
pub use iri::{
    assess_band, iri_discretize, iri_discretize_integral, synthesize, working_band, BAND_LIMIT_DB, BAND_LIMIT_DEG,
};

/// A strictly positive, finite operator order.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct FractionalOrder(f64);

impl FractionalOrder {
    pub fn new(value: f64) -> Result<Self> {
        if value.is_finite() && value > 0.0 {
            Ok(Self(value))
        } else {
            Err(invalid(format!("fractional order must be finite and > 0, got {value}")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl fmt::Display for FractionalOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl TryFrom<f64> for FractionalOrder {
    type Error = crate::error::Error;
    fn try_from(v: f64) -> Result<Self> {
        Self::new(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorKind {
    Derivative,
    Integral,
}

/// `s^order` for a derivative, `s^{-order}` for an integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FractionalOperator {
    pub kind: OperatorKind,
    pub order: FractionalOrder,
}

impl FractionalOperator {
    pub fn derivative(order: FractionalOrder) -> Self {
        Self { kind: OperatorKind::Derivative, order }
    }

    pub fn integral(order: FractionalOrder) -> Self {
        Self { kind: OperatorKind::Integral, order }
    }

    /// Signed exponent of `s`.
    pub fn exponent(self) -> f64 {
        match self.kind {
            OperatorKind::Derivative => self.order.value(),
            OperatorKind::Integral => -self.order.value(),
        }
    }
}

/// `(jω)^order` on the principal branch. Requires `omega > 0`.
pub fn s_power_response(order: f64, omega: f64) -> Result<Complex64> {
    if !(omega > 0.0) || !omega.is_finite() {
        return Err(invalid(format!("frequency must be finite and > 0, got {omega}")));
    }
    if !order.is_finite() {
        return Err(invalid(format!("exponent must be finite, got {order}")));
    }
    Ok(jw_pow(order, omega))
}

/// Unchecked `(jω)^order`; integer exponents land exactly on the axes.
pub(crate) fn jw_pow(order: f64, omega: f64) -> Complex64 {
    let mag = omega.powf(order);
    if order == order.round() && order.abs() < 1e15 {
        let quarter = (order as i64).rem_euclid(4);
        return match quarter {
            0 => Complex64::new(mag, 0.0),
            1 => Complex64::new(0.0, mag),
            2 => Complex64::new(-mag, 0.0),
            _ => Complex64::new(0.0, -mag),
        };
    }
    Complex64::from_polar(mag, order * FRAC_PI_2)
}
