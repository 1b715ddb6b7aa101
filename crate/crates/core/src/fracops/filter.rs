use std::f64::consts::PI;

use num_complex::Complex64;

use super::FractionalOperator;
use crate::error::{invalid, Error, Result};
use crate::poly::roots_descending;

/// Worst in-band deviation of a synthesized filter from its target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandError {
    pub max_mag_db: f64,
    pub max_phase_deg: f64,
    pub band_hz: (f64, f64),
}

/// Parallel first-order sections `d + Σ rₖ/(1 − pₖ z^{-1})`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModalForm {
    pub direct: f64,
    pub residues: Vec<f64>,
    pub poles: Vec<f64>,
}

impl ModalForm {
    /// Expanded numerator and monic denominator in powers of `z^{-1}`.
    pub fn to_polynomials(&self) -> (Vec<f64>, Vec<f64>) {
        let factor = |p: f64| [1.0, -p];
        let mut den = vec![1.0];
        for &p in &self.poles {
            den = convolve(&den, &factor(p));
        }
        let mut num: Vec<f64> = den.iter().map(|c| c * self.direct).collect();
        for (k, &rk) in self.residues.iter().enumerate() {
            let mut partial = vec![rk];
            for (j, &p) in self.poles.iter().enumerate() {
                if j != k {
                    partial = convolve(&partial, &factor(p));
                }
            }
            for (i, c) in partial.iter().enumerate() {
                num[i] += c;
            }
        }
        (num, den)
    }
}

pub(crate) fn convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
enum Realization {
    /// Transposed direct form II delay line.
    Direct(Vec<f64>),
    /// One state per real pole.
    Modal(ModalForm, Vec<f64>),
}

/// IIR filter in powers of `z^{-1}`:
/// `y[k] = Σ bᵢ x[k−i] − Σ_{i≥1} aᵢ y[k−i]` with `a₀ = 1`.
///
/// Filters built from a modal expansion run as parallel first-order
/// sections; the expanded polynomials of high-order fractional
/// approximants lose several digits to cancellation.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteFilter {
    numerator: Vec<f64>,
    denominator: Vec<f64>,
    realization: Realization,
    sample_rate: f64,
    operator: Option<FractionalOperator>,
    band_error: Option<BandError>,
}

impl DiscreteFilter {
    /// Builds a filter from raw coefficients. The denominator is normalized
    /// so that its leading coefficient is 1.
    pub fn new(numerator: Vec<f64>, denominator: Vec<f64>, sample_rate: f64) -> Result<Self> {
        if !(sample_rate > 0.0) || !sample_rate.is_finite() {
            return Err(invalid(format!("sample rate must be > 0, got {sample_rate}")));
        }
        if numerator.is_empty() || denominator.is_empty() {
            return Err(invalid("filter coefficient lists must be non-empty"));
        }
        if numerator.iter().chain(&denominator).any(|c| !c.is_finite()) {
            return Err(invalid("filter coefficients must be finite"));
        }
        let a0 = denominator[0];
        if a0 == 0.0 {
            return Err(invalid("leading denominator coefficient is zero"));
        }
        let numerator: Vec<f64> = numerator.iter().map(|c| c / a0).collect();
        let denominator: Vec<f64> = denominator.iter().map(|c| c / a0).collect();
        let len = numerator.len().max(denominator.len());
        Ok(Self {
            numerator,
            denominator,
            realization: Realization::Direct(vec![0.0; len - 1]),
            sample_rate,
            operator: None,
            band_error: None,
        })
    }

    /// Builds a filter from parallel first-order sections.
    pub fn from_modal(modal: ModalForm, sample_rate: f64) -> Result<Self> {
        if modal.residues.len() != modal.poles.len() {
            return Err(invalid("modal form needs one residue per pole"));
        }
        if !modal.direct.is_finite() || modal.residues.iter().chain(&modal.poles).any(|c| !c.is_finite()) {
            return Err(invalid("modal coefficients must be finite"));
        }
        let (num, den) = modal.to_polynomials();
        let mut f = Self::new(num, den, sample_rate)?;
        let n = modal.poles.len();
        f.realization = Realization::Modal(modal, vec![0.0; n]);
        Ok(f)
    }

    /// Parallel-section coefficients, when the filter has them.
    pub fn modal_form(&self) -> Option<&ModalForm> {
        match &self.realization {
            Realization::Modal(m, _) => Some(m),
            Realization::Direct(_) => None,
        }
    }

    pub fn identity(sample_rate: f64) -> Result<Self> {
        Self::new(vec![1.0], vec![1.0], sample_rate)
    }

    pub(crate) fn with_operator(mut self, op: FractionalOperator, err: BandError) -> Self {
        self.operator = Some(op);
        self.band_error = Some(err);
        self
    }

    pub fn numerator(&self) -> &[f64] {
        &self.numerator
    }

    pub fn denominator(&self) -> &[f64] {
        &self.denominator
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    /// The fractional operator this filter approximates, if synthesized.
    pub fn operator(&self) -> Option<FractionalOperator> {
        self.operator
    }

    /// In-band error reported at synthesis time.
    pub fn band_error(&self) -> Option<BandError> {
        self.band_error
    }

    /// Current internal state (delay line or per-section states).
    pub fn state(&self) -> &[f64] {
        match &self.realization {
            Realization::Direct(s) | Realization::Modal(_, s) => s,
        }
    }

    /// Direct feedthrough `h[0]`.
    pub fn feedthrough(&self) -> f64 {
        match &self.realization {
            Realization::Direct(_) => self.numerator[0],
            Realization::Modal(m, _) => m.direct + m.residues.iter().sum::<f64>(),
        }
    }

    /// Output the next `step(input)` would produce, without advancing.
    pub fn peek(&self, input: f64) -> f64 {
        match &self.realization {
            Realization::Direct(s) => self.numerator[0] * input + s.first().copied().unwrap_or(0.0),
            Realization::Modal(m, s) => {
                let mut y = m.direct * input;
                for ((r, p), x) in m.residues.iter().zip(&m.poles).zip(s) {
                    y += r * (p * x + input);
                }
                y
            }
        }
    }

    /// Advances one sample.
    pub fn step(&mut self, input: f64) -> f64 {
        let y = self.peek(input);
        match &mut self.realization {
            Realization::Direct(state) => {
                let n = state.len();
                for i in 0..n {
                    let next = if i + 1 < n { state[i + 1] } else { 0.0 };
                    let b = self.numerator.get(i + 1).copied().unwrap_or(0.0);
                    let a = self.denominator.get(i + 1).copied().unwrap_or(0.0);
                    state[i] = next + b * input - a * y;
                }
            }
            Realization::Modal(m, state) => {
                for (x, p) in state.iter_mut().zip(&m.poles) {
                    *x = p * *x + input;
                }
            }
        }
        y
    }

    /// Zeroes the internal state (system at rest).
    pub fn reset(&mut self) {
        match &mut self.realization {
            Realization::Direct(s) | Realization::Modal(_, s) => s.iter_mut().for_each(|v| *v = 0.0),
        }
    }

    /// `H(e^{j2πf/fs})` at `freq_hz`.
    pub fn frequency_response(&self, freq_hz: f64) -> Complex64 {
        let theta = 2.0 * PI * freq_hz / self.sample_rate;
        let zinv = Complex64::from_polar(1.0, -theta);
        match &self.realization {
            Realization::Direct(_) => {
                let horner = |c: &[f64]| c.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &x| acc * zinv + x);
                horner(&self.numerator) / horner(&self.denominator)
            }
            Realization::Modal(m, _) => m
                .residues
                .iter()
                .zip(&m.poles)
                .fold(Complex64::new(m.direct, 0.0), |acc, (r, p)| acc + r / (1.0 - p * zinv)),
        }
    }

    /// Poles in the z-plane.
    pub fn poles(&self) -> Result<Vec<Complex64>> {
        if let Realization::Modal(m, _) = &self.realization {
            return Ok(m.poles.iter().map(|&p| Complex64::new(p, 0.0)).collect());
        }
        if self.denominator.len() < 2 {
            return Ok(Vec::new());
        }
        roots_descending(&self.denominator)
    }

    /// All poles satisfy `|p| < 1 − 1e−9`.
    pub fn is_stable(&self) -> Result<bool> {
        Ok(self.poles()?.iter().all(|p| p.norm() < 1.0 - 1e-9))
    }

    /// First `len` samples of the impulse response, from rest.
    pub fn impulse_response(&self, len: usize) -> Vec<f64> {
        let mut f = self.clone();
        f.reset();
        (0..len).map(|k| f.step(if k == 0 { 1.0 } else { 0.0 })).collect()
    }

    /// Text form: numerator, denominator and sample rate on three lines.
    /// Modal filters append two lines (poles, then direct term followed by
    /// residues) so that a reload reproduces the same realization.
    pub fn to_coefficient_text(&self) -> String {
        let join = |c: &[f64]| c.iter().map(|x| format!("{x:e}")).collect::<Vec<_>>().join(" ");
        let mut out = format!("{}\n{}\n{}\n", join(&self.numerator), join(&self.denominator), self.sample_rate);
        if let Realization::Modal(m, _) = &self.realization {
            let mut dr = vec![m.direct];
            dr.extend(&m.residues);
            out.push_str(&format!("{}\n{}\n", join(&m.poles), join(&dr)));
        }
        out
    }

    pub fn from_coefficient_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        let mut parse_line = |what: &str| -> Result<Vec<f64>> {
            let line = lines.next().ok_or_else(|| invalid(format!("coefficient file: missing {what} line")))?;
            parse_numbers(line, what)
        };
        let num = parse_line("numerator")?;
        let den = parse_line("denominator")?;
        let fs = parse_line("sample rate")?;
        let [fs] = fs[..] else {
            return Err(Error::InvalidArgument("coefficient file: sample rate line must hold one value".into()));
        };
        let poles = match lines.next() {
            None => return Self::new(num, den, fs),
            Some(line) => parse_numbers(line, "poles")?,
        };
        let dr = match lines.next() {
            Some(line) => parse_numbers(line, "residues")?,
            None => return Err(invalid("coefficient file: poles line without residues line")),
        };
        if dr.len() != poles.len() + 1 {
            return Err(invalid("coefficient file: residue line must hold direct term plus one per pole"));
        }
        Self::from_modal(ModalForm { direct: dr[0], residues: dr[1..].to_vec(), poles }, fs)
    }
}

fn parse_numbers(line: &str, what: &str) -> Result<Vec<f64>> {
    line.split_whitespace()
        .map(|tok| tok.parse::<f64>().map_err(|_| invalid(format!("coefficient file: bad number '{tok}' in {what}"))))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_passes_input() {
        let mut f = DiscreteFilter::identity(1000.0).unwrap();
        for x in [1.0, -2.5, 3.25] {
            assert_eq!(f.step(x), x);
        }
    }

    #[test]
    fn unit_delay() {
        let mut f = DiscreteFilter::new(vec![0.0, 1.0], vec![1.0], 1.0).unwrap();
        assert_eq!(f.step(1.0), 0.0);
        assert_eq!(f.step(0.0), 1.0);
        assert_eq!(f.step(0.0), 0.0);
    }

    #[test]
    fn one_pole_recursion() {
        // y[k] = x[k] + 0.5 y[k−1]
        let f = DiscreteFilter::new(vec![1.0], vec![1.0, -0.5], 1.0).unwrap();
        let h = f.impulse_response(5);
        for (k, v) in h.iter().enumerate() {
            assert!((v - 0.5f64.powi(k as i32)).abs() < 1e-15);
        }
        assert!(f.is_stable().unwrap());
    }

    #[test]
    fn denominator_is_normalized() {
        let f = DiscreteFilter::new(vec![2.0, 4.0], vec![2.0, -1.0], 10.0).unwrap();
        assert_eq!(f.denominator(), &[1.0, -0.5]);
        assert_eq!(f.numerator(), &[1.0, 2.0]);
    }

    #[test]
    fn unstable_filter_is_detected() {
        let f = DiscreteFilter::new(vec![1.0], vec![1.0, -1.5], 1.0).unwrap();
        assert!(!f.is_stable().unwrap());
    }

    #[test]
    fn peek_does_not_advance() {
        let mut f = DiscreteFilter::new(vec![0.3, 0.2], vec![1.0, -0.9], 1.0).unwrap();
        f.step(1.0);
        let p = f.peek(2.0);
        assert_eq!(f.step(2.0), p);
    }

    #[test]
    fn coefficient_text_round_trip() {
        let f = DiscreteFilter::new(vec![0.1, 1.0 / 3.0, -2e-17], vec![1.0, -0.75, 1e-300], 8000.0).unwrap();
        let back = DiscreteFilter::from_coefficient_text(&f.to_coefficient_text()).unwrap();
        assert_eq!(back.numerator(), f.numerator());
        assert_eq!(back.denominator(), f.denominator());
        assert_eq!(back.sample_rate(), 8000.0);
    }

    #[test]
    fn modal_matches_expanded_form() {
        let m = ModalForm { direct: 0.2, residues: vec![0.5, -0.3], poles: vec![0.9, 0.4] };
        let modal = DiscreteFilter::from_modal(m.clone(), 100.0).unwrap();
        let (num, den) = m.to_polynomials();
        let direct = DiscreteFilter::new(num, den, 100.0).unwrap();
        let a = modal.impulse_response(30);
        let b = direct.impulse_response(30);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-14);
        }
        assert!((modal.feedthrough() - direct.feedthrough()).abs() < 1e-15);
        let back = DiscreteFilter::from_coefficient_text(&modal.to_coefficient_text()).unwrap();
        assert_eq!(back.modal_form(), Some(&m));
    }

    #[test]
    fn coefficient_text_rejects_garbage() {
        assert!(DiscreteFilter::from_coefficient_text("1 2\n1 x\n8000\n").is_err());
        assert!(DiscreteFilter::from_coefficient_text("1 2\n1\n").is_err());
        assert!(DiscreteFilter::from_coefficient_text("1\n1\n8000 1\n").is_err());
    }
}
