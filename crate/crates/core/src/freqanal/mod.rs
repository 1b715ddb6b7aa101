//! Frequency-domain analysis of fractional-order loops: transfer-function
//! algebra over terms `c·s^α`, closed-form observer/plant models, Bode data,
//! mean-square approximation error and crossover/margin extraction.

mod analysis;
mod models;

use std::fmt;

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::fracops::jw_pow;

pub use analysis::{
    bode_curve, bode_curve_with, crossover_and_margin, default_grid, log_grid, mse_curve, mse_curve_with, BodeCurve,
    Crossover, MseCurve, MseTable,
};
pub use models::{
    build_delta_fo, build_delta_ifo, build_p_fo, build_p_ifo, delta_from_p, open_loop, open_loop_ifo, open_loop_io,
    p_io_printed, z1_over_y_io_printed, z1_over_y_printed, LoopModel,
};

/// Exponents closer than this are merged.
const EXPONENT_TOL: f64 = 1e-12;

/// Generalized polynomial `Σ cᵢ s^{αᵢ}` with real coefficients and
/// exponents. Kept sorted by descending exponent with merged duplicates.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FoPoly {
    terms: Vec<(f64, f64)>,
}

impl FoPoly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        Self::term(c, 0.0)
    }

    /// `c·s^α`.
    pub fn term(c: f64, alpha: f64) -> Self {
        Self::from_terms(vec![(c, alpha)])
    }

    /// From `(coefficient, exponent)` pairs in any order.
    pub fn from_terms(terms: Vec<(f64, f64)>) -> Self {
        let mut terms = terms;
        terms.sort_by(|a, b| b.1.total_cmp(&a.1));
        let mut out: Vec<(f64, f64)> = Vec::with_capacity(terms.len());
        for (c, e) in terms {
            match out.last_mut() {
                Some(last) if (last.1 - e).abs() <= EXPONENT_TOL => last.0 += c,
                _ => out.push((c, e)),
            }
        }
        out.retain(|t| t.0 != 0.0);
        Self { terms: out }
    }

    /// `(coefficient, exponent)` pairs, descending exponent.
    pub fn terms(&self) -> &[(f64, f64)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(&self, other: &FoPoly) -> FoPoly {
        let mut t = self.terms.clone();
        t.extend_from_slice(&other.terms);
        FoPoly::from_terms(t)
    }

    pub fn sub(&self, other: &FoPoly) -> FoPoly {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, k: f64) -> FoPoly {
        FoPoly::from_terms(self.terms.iter().map(|&(c, e)| (c * k, e)).collect())
    }

    pub fn mul(&self, other: &FoPoly) -> FoPoly {
        let mut t = Vec::with_capacity(self.terms.len() * other.terms.len());
        for &(c1, e1) in &self.terms {
            for &(c2, e2) in &other.terms {
                t.push((c1 * c2, e1 + e2));
            }
        }
        FoPoly::from_terms(t)
    }

    /// Multiplies by `s^α`.
    pub fn shift(&self, alpha: f64) -> FoPoly {
        FoPoly::from_terms(self.terms.iter().map(|&(c, e)| (c, e + alpha)).collect())
    }

    pub fn pow(&self, k: u32) -> FoPoly {
        (0..k).fold(FoPoly::constant(1.0), |acc, _| acc.mul(self))
    }

    /// Value at `s = jω`.
    pub fn eval(&self, omega: f64) -> Complex64 {
        self.terms.iter().map(|&(c, e)| c * jw_pow(e, omega)).sum()
    }
}

impl fmt::Display for FoPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (c, e)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " {} ", if *c < 0.0 { '-' } else { '+' })?;
            } else if *c < 0.0 {
                write!(f, "-")?;
            }
            write!(f, "{}", c.abs())?;
            if *e != 0.0 {
                write!(f, "·s^{e}")?;
            }
        }
        Ok(())
    }
}

/// Ratio of two generalized polynomials in `s`.
#[derive(Debug, Clone, PartialEq)]
pub struct FoTransferFunction {
    pub numerator: FoPoly,
    pub denominator: FoPoly,
}

impl FoTransferFunction {
    pub fn new(numerator: FoPoly, denominator: FoPoly) -> Result<Self> {
        if denominator.is_zero() {
            return Err(invalid("transfer function denominator is identically zero"));
        }
        if numerator.terms.iter().chain(&denominator.terms).any(|t| !t.0.is_finite() || !t.1.is_finite()) {
            return Err(invalid("transfer function terms must be finite"));
        }
        Ok(Self { numerator, denominator })
    }

    /// `k·s^α`.
    pub fn gain_power(k: f64, alpha: f64) -> Self {
        Self { numerator: FoPoly::term(k, alpha), denominator: FoPoly::constant(1.0) }
    }

    pub fn mul(&self, other: &FoTransferFunction) -> FoTransferFunction {
        Self { numerator: self.numerator.mul(&other.numerator), denominator: self.denominator.mul(&other.denominator) }
    }

    pub fn scale(&self, k: f64) -> FoTransferFunction {
        Self { numerator: self.numerator.scale(k), denominator: self.denominator.clone() }
    }

    /// Value at `s = jω`.
    pub fn eval(&self, omega: f64) -> Result<Complex64> {
        eval_fotf(self, omega)
    }
}

/// Evaluates `tf` at `s = jω`, `ω > 0`.
pub fn eval_fotf(tf: &FoTransferFunction, omega: f64) -> Result<Complex64> {
    if !(omega > 0.0) || !omega.is_finite() {
        return Err(invalid(format!("frequency must be finite and > 0, got {omega}")));
    }
    let d = tf.denominator.eval(omega);
    if d == Complex64::new(0.0, 0.0) {
        return Err(Error::PoleOnGrid { omega });
    }
    Ok(tf.numerator.eval(omega) / d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn poly_algebra() {
        let a = FoPoly::from_terms(vec![(1.0, 0.5), (2.0, 0.0)]);
        let sq = a.mul(&a);
        assert_eq!(sq.terms(), &[(1.0, 1.0), (4.0, 0.5), (4.0, 0.0)]);
        assert!(a.sub(&a).is_zero());
        assert_eq!(a.pow(0), FoPoly::constant(1.0));
        assert_eq!(a.shift(1.0).terms(), &[(1.0, 1.5), (2.0, 1.0)]);
    }

    #[test]
    fn inverse_power_half() {
        let tf = FoTransferFunction::new(FoPoly::constant(1.0), FoPoly::term(1.0, 1.5)).unwrap();
        let z = eval_fotf(&tf, 1.0).unwrap();
        assert!((z.norm() - 1.0).abs() < 1e-15);
        assert!((z.arg().to_degrees() + 135.0).abs() < 1e-12);
    }

    #[test]
    fn self_ratio_is_one() {
        let p = FoPoly::from_terms(vec![(1.0, 1.0), (1.0, 0.0)]);
        let tf = FoTransferFunction::new(p.clone(), p).unwrap();
        for w in [0.1, 1.0, 37.0, 1e4] {
            let z = eval_fotf(&tf, w).unwrap();
            assert!((z - 1.0).norm() < 1e-15);
        }
    }

    #[test]
    fn pole_on_grid() {
        // s² + 1 vanishes at ω = 1
        let tf =
            FoTransferFunction::new(FoPoly::constant(1.0), FoPoly::from_terms(vec![(1.0, 2.0), (1.0, 0.0)])).unwrap();
        assert_eq!(eval_fotf(&tf, 1.0), Err(Error::PoleOnGrid { omega: 1.0 }));
        assert!(eval_fotf(&tf, 0.0).is_err());
    }

    #[test]
    fn zero_denominator_rejected() {
        assert!(FoTransferFunction::new(FoPoly::constant(1.0), FoPoly::zero()).is_err());
    }
}
