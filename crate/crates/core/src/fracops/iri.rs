//! Impulse-response-invariant IIR approximation of `s^α`.
//!
//! `s^α` is approximated by a modal expansion `d + Σ cₖ/(s + pₖ)` with poles
//! log-spaced from `fs/80000` Hz up to Nyquist. Each mode maps to
//! `rₖ/(1 − e^{−pₖT} z^{−1})` under impulse invariance; the residues and the
//! direct term are fitted in relative least squares against `(jω)^α`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::filter::{BandError, DiscreteFilter, ModalForm};
use super::{jw_pow, FractionalOperator, FractionalOrder};
use crate::error::{invalid, Error, Result};

/// Synthesis is rejected when the in-band magnitude error exceeds this.
pub const BAND_LIMIT_DB: f64 = 3.0;
/// Synthesis is rejected when the in-band phase error exceeds this.
pub const BAND_LIMIT_DEG: f64 = 15.0;

const FIT_POINTS: usize = 800;
const BAND_POINTS: usize = 400;

/// Fidelity band in Hz for a given sample rate.
pub fn working_band(sample_rate: f64) -> (f64, f64) {
    (sample_rate / 8000.0, sample_rate / 20.0)
}

fn logspace(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    let (l, h) = (lo.log10(), hi.log10());
    (0..n).map(move |i| 10f64.powf(l + (h - l) * i as f64 / (n - 1) as f64))
}

/// Derivative filter approximating `s^order`.
pub fn iri_discretize(order: FractionalOrder, sample_rate: f64, approx_order: usize) -> Result<DiscreteFilter> {
    synthesize(FractionalOperator::derivative(order), sample_rate, approx_order)
}

/// Integrator filter approximating `s^{-order}`.
pub fn iri_discretize_integral(
    order: FractionalOrder,
    sample_rate: f64,
    approx_order: usize,
) -> Result<DiscreteFilter> {
    synthesize(FractionalOperator::integral(order), sample_rate, approx_order)
}

pub fn synthesize(op: FractionalOperator, sample_rate: f64, approx_order: usize) -> Result<DiscreteFilter> {
    if !(sample_rate > 0.0) || !sample_rate.is_finite() {
        return Err(invalid(format!("sample rate must be > 0, got {sample_rate}")));
    }
    if approx_order == 0 {
        return Err(invalid("approximation order must be at least 1"));
    }
    let alpha = op.exponent();
    let t = 1.0 / sample_rate;
    let n = approx_order;

    let discrete_poles: Vec<f64> = logspace(sample_rate / 80_000.0, sample_rate / 2.0, n.max(2))
        .take(n)
        .map(|f_hz| (-2.0 * PI * f_hz * t).exp())
        .collect();
    // a single mode sits at the low end of the band
    let discrete_poles = if n == 1 { vec![(-2.0 * PI * sample_rate / 80_000.0 * t).exp()] } else { discrete_poles };

    let freqs: Vec<f64> = logspace(sample_rate / 16_000.0, sample_rate / 10.0, FIT_POINTS).collect();
    let rows = 2 * freqs.len();
    let cols = n + 1;
    let mut a = DMatrix::<f64>::zeros(rows, cols);
    let mut y = DVector::<f64>::zeros(rows);
    for (i, &f) in freqs.iter().enumerate() {
        let zinv = Complex64::from_polar(1.0, -2.0 * PI * f * t);
        let target = jw_pow(alpha, 2.0 * PI * f);
        let mut put = |col: usize, v: Complex64| {
            let rel = v / target;
            a[(i, col)] = rel.re;
            a[(freqs.len() + i, col)] = rel.im;
        };
        put(0, Complex64::new(1.0, 0.0));
        for (k, &pk) in discrete_poles.iter().enumerate() {
            put(k + 1, 1.0 / (1.0 - pk * zinv));
        }
        y[i] = 1.0;
    }
    // unit-norm columns keep the SVD cut-off meaningful
    let norms: Vec<f64> = (0..cols).map(|j| a.column(j).norm()).collect();
    for (j, &nj) in norms.iter().enumerate() {
        a.column_mut(j).scale_mut(1.0 / nj);
    }
    let x = a
        .svd(true, true)
        .solve(&y, 1e-13)
        .map_err(|e| Error::Numeric { message: format!("least-squares fit failed: {e}"), residual: f64::NAN })?;
    let direct = x[0] / norms[0];
    let residues: Vec<f64> = (0..n).map(|k| x[k + 1] / norms[k + 1]).collect();

    let filter = DiscreteFilter::from_modal(ModalForm { direct, residues, poles: discrete_poles }, sample_rate)?;
    if !filter.is_stable()? {
        return Err(Error::Numeric { message: "synthesized filter is unstable".into(), residual: f64::NAN });
    }
    let err = assess_band(&filter, alpha, working_band(sample_rate));
    if !(err.max_mag_db <= BAND_LIMIT_DB && err.max_phase_deg <= BAND_LIMIT_DEG) {
        return Err(Error::Synthesis { max_mag_db: err.max_mag_db, max_phase_deg: err.max_phase_deg });
    }
    Ok(filter.with_operator(op, err))
}

/// Worst magnitude (dB) and phase (deg) deviation from `(jω)^exponent`.
pub fn assess_band(filter: &DiscreteFilter, exponent: f64, band_hz: (f64, f64)) -> BandError {
    let mut max_mag_db: f64 = 0.0;
    let mut max_phase_deg: f64 = 0.0;
    for f in logspace(band_hz.0, band_hz.1, BAND_POINTS) {
        let ratio = filter.frequency_response(f) / jw_pow(exponent, 2.0 * PI * f);
        max_mag_db = max_mag_db.max((20.0 * ratio.norm().log10()).abs());
        max_phase_deg = max_phase_deg.max(ratio.arg().to_degrees().abs());
    }
    BandError { max_mag_db, max_phase_deg, band_hz }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn order(v: f64) -> FractionalOrder {
        FractionalOrder::new(v).unwrap()
    }

    #[test]
    fn low_orders_are_rejected_and_adequate_orders_pass() {
        for alpha in [0.25, 0.5, 0.75] {
            for op in [FractionalOperator::derivative(order(alpha)), FractionalOperator::integral(order(alpha))] {
                for n in 1..=2 {
                    assert!(matches!(synthesize(op, 8000.0, n), Err(Error::Synthesis { .. })));
                }
                for n in 4..=9 {
                    let f = synthesize(op, 8000.0, n).unwrap();
                    let e = f.band_error().unwrap();
                    assert!(e.max_mag_db < 1.5 && e.max_phase_deg < 8.0, "n={n} {e:?}");
                    assert!(f.is_stable().unwrap());
                }
            }
        }
    }

    #[test]
    fn three_quarter_order_fidelity() {
        let f = iri_discretize(order(0.75), 8000.0, 7).unwrap();
        let e = assess_band(&f, 0.75, (1.0, 400.0));
        assert!(e.max_mag_db < 1.0 && e.max_phase_deg < 3.0, "{e:?}");
        assert_eq!(f.denominator()[0], 1.0);
        assert!(f.numerator().len() <= 8 && f.denominator().len() <= 8);
    }

    #[test]
    fn half_order_midband_phase() {
        let f = iri_discretize(order(0.5), 8000.0, 7).unwrap();
        let phase = f.frequency_response(20.0).arg().to_degrees();
        assert!((phase - 45.0).abs() < 3.0, "{phase}");
    }

    #[test]
    fn differentiator_slope() {
        let f = iri_discretize(order(1.0), 8000.0, 7).unwrap();
        let e = assess_band(&f, 1.0, (1.0, 400.0));
        assert!(e.max_mag_db < 0.5, "{e:?}");
        let g1 = 20.0 * f.frequency_response(4.0).norm().log10();
        let g2 = 20.0 * f.frequency_response(40.0).norm().log10();
        assert!((g2 - g1 - 20.0).abs() < 0.5);
    }

    #[test]
    fn deterministic() {
        let a = iri_discretize(order(0.75), 8000.0, 7).unwrap();
        let b = iri_discretize(order(0.75), 8000.0, 7).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(iri_discretize(order(0.5), 0.0, 7).is_err());
        assert!(iri_discretize(order(0.5), 8000.0, 0).is_err());
    }
}
