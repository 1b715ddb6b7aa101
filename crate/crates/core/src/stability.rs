//! Stability certificates: the observer error characteristic polynomial and
//! its Kharitonov-type boundary polynomials, the commensurate-order
//! closed-loop polynomial with its root-argument test, and Routh tables.

use std::f64::consts::PI;
use std::fmt::{self, Write as _};

use num_complex::Complex64;

use crate::adrc::AuxController;
use crate::error::{invalid, Error, Result};
use crate::freqanal::FoPoly;
use crate::observers::bandwidth_gains;
use crate::plants::PlantModel;
use crate::poly::Poly;

/// Default cap on rational-order denominators.
pub const MAX_ORDER_DENOMINATOR: u64 = 64;
/// Roots this close to the critical ray are reported marginal.
pub const MARGINAL_BAND: f64 = 1e-9;
/// Relative residual above which a root is flagged low-confidence.
pub const RESIDUAL_LIMIT: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Kharitonov,
    DirectRoot,
    Routh,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Kharitonov => "kharitonov",
            Method::DirectRoot => "direct-root",
            Method::Routh => "routh",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    pub method: Method,
    pub stable: bool,
    /// A root lies on the critical ray, or a Routh row vanished.
    pub marginal: bool,
    pub roots: Vec<Complex64>,
    /// `min |arg wᵢ| − threshold`; for Routh tables the smallest
    /// first-column entry.
    pub min_arg_margin: f64,
    pub threshold: f64,
    /// Some root failed the residual check.
    pub low_confidence: bool,
    pub routh_first_column: Vec<f64>,
}

impl StabilityReport {
    fn from_roots(method: Method, roots: Vec<Complex64>, threshold: f64, low_confidence: bool) -> Self {
        let min_arg = roots.iter().map(|z| z.arg().abs()).fold(f64::INFINITY, f64::min);
        let margin = min_arg - threshold;
        let marginal = margin.abs() <= MARGINAL_BAND;
        Self {
            method,
            stable: margin > MARGINAL_BAND,
            marginal,
            roots,
            min_arg_margin: margin,
            threshold,
            low_confidence,
            routh_first_column: Vec::new(),
        }
    }

    /// Root with the smallest `|arg|`.
    pub fn worst_root(&self) -> Option<Complex64> {
        self.roots.iter().copied().min_by(|a, b| a.arg().abs().total_cmp(&b.arg().abs()))
    }

    /// Plain-text block: method, verdict, worst root, margin.
    pub fn to_text(&self) -> String {
        let verdict = if self.stable {
            "stable"
        } else if self.marginal {
            "marginal"
        } else {
            "unstable"
        };
        let mut s = String::new();
        let _ = writeln!(s, "method = {}", self.method);
        let _ = writeln!(s, "verdict = {verdict}");
        match self.method {
            Method::Routh => {
                let col: Vec<String> = self.routh_first_column.iter().map(|v| format!("{v:e}")).collect();
                let _ = writeln!(s, "first_column = {}", col.join(" "));
                let _ = writeln!(s, "min_first_column = {:e}", self.min_arg_margin);
            }
            _ => {
                if let Some(w) = self.worst_root() {
                    let _ = writeln!(s, "worst_root = {:e} {:+e}i", w.re, w.im);
                }
                let _ = writeln!(s, "threshold_rad = {}", self.threshold);
                let _ = writeln!(s, "margin_rad = {}", self.min_arg_margin);
                let _ = writeln!(s, "root_count = {}", self.roots.len());
            }
        }
        if self.low_confidence {
            let _ = writeln!(s, "low_confidence = true");
        }
        s
    }
}

fn checked_roots(p: &Poly) -> Result<(Vec<Complex64>, bool)> {
    let roots = p.roots()?;
    let mut worst = 0.0f64;
    for z in &roots {
        let r = p.relative_residual(*z);
        if !r.is_finite() {
            return Err(Error::Numeric { message: "root finder produced a non-finite root".into(), residual: r });
        }
        worst = worst.max(r);
    }
    Ok((roots, worst > RESIDUAL_LIMIT))
}

fn check_orders(betas: &[f64], n: usize, gamma: f64, nu: f64) -> Result<()> {
    if n == 0 || betas.len() != n + 1 {
        return Err(invalid(format!("expected n + 1 = {} gains, got {}", n + 1, betas.len())));
    }
    if !(0.0 < nu && nu < gamma) {
        return Err(invalid(format!("orders must satisfy 0 < ν < γ, got ν = {nu}, γ = {gamma}")));
    }
    Ok(())
}

/// `λ(s) = s^{ν+γ}(s^{nγ} + Σ_{i<n} βᵢ s^{(n−i)γ}) + β_n s^γ + β_{n+1}`.
pub fn eso_char_poly(betas: &[f64], n: usize, gamma: f64, nu: f64) -> Result<FoPoly> {
    check_orders(betas, n, gamma, nu)?;
    let mut inner = vec![(1.0, n as f64 * gamma)];
    for (i, b) in betas.iter().enumerate().take(n - 1) {
        inner.push((*b, (n - i - 1) as f64 * gamma));
    }
    Ok(FoPoly::from_terms(inner)
        .shift(nu + gamma)
        .add(&FoPoly::from_terms(vec![(betas[n - 1], gamma), (betas[n], 0.0)])))
}

/// The two boundary polynomials in `w`, descending coefficients.
pub fn kharitonov_boundary(betas: &[f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    let head: f64 = 1.0 + betas[..n - 1].iter().sum::<f64>();
    let first = vec![head, betas[n - 1] + betas[n]];
    // w^{n+1} + β₁wⁿ + … + β_{n−1}w² + β_n w + β_{n+1}
    let mut second = vec![1.0];
    second.extend_from_slice(betas);
    (first, second)
}

/// Root-argument test on both boundary polynomials with threshold
/// `π/(2(ν+γ))`.
pub fn kharitonov_eso_check(betas: &[f64], n: usize, gamma: f64, nu: f64) -> Result<StabilityReport> {
    check_orders(betas, n, gamma, nu)?;
    let (p1, p2) = kharitonov_boundary(betas, n);
    let mut roots = Vec::new();
    let mut lc = false;
    for p in [Poly::from_descending(&p1), Poly::from_descending(&p2)] {
        match p.degree() {
            // identically zero: every w is a root, including the origin
            None => roots.push(Complex64::new(0.0, 0.0)),
            Some(0) => {}
            Some(_) => {
                let (r, l) = checked_roots(&p)?;
                roots.extend(r);
                lc |= l;
            }
        }
    }
    Ok(StabilityReport::from_roots(Method::Kharitonov, roots, PI / (2.0 * (nu + gamma)), lc))
}

/// Closed-loop polynomial in `w = s^{1/(q₁q₂)}` with `ν = p₁/q₁`, `γ = p₂/q₂`.
#[derive(Debug, Clone, PartialEq)]
pub struct CommensurateForm {
    pub p1: u64,
    pub q1: u64,
    pub p2: u64,
    pub q2: u64,
    /// Descending powers of `w`.
    pub w_polynomial: Vec<f64>,
}

impl CommensurateForm {
    /// `1/(q₁q₂)`.
    pub fn base_order(&self) -> f64 {
        1.0 / (self.q1 * self.q2) as f64
    }

    pub fn degree(&self) -> usize {
        self.w_polynomial.len().saturating_sub(1)
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Coprime `(p, q)` with `p/q = value`, `q ≤ max_den`.
pub fn rationalize(value: f64, max_den: u64) -> Result<(u64, u64)> {
    if value.is_finite() && value > 0.0 {
        for q in 1..=max_den {
            let p = (value * q as f64).round();
            if p >= 1.0 && (p / q as f64 - value).abs() <= 1e-12 * value.max(1.0) {
                let p = p as u64;
                let g = gcd(p, q);
                return Ok((p / g, q / g));
            }
        }
    }
    Err(Error::OrderApproximation { value, max_denominator: max_den })
}

/// Expands the closed-loop characteristic polynomial
/// `P(s) = s^γ A(s)(k_p + Σk_{dᵢ}sⁱ + s^{nγ} + Σ_{i≤n} βᵢs^{(n−i)γ})
///       + (s^{nγ} + k_p + Σk_{dᵢ}sⁱ) λ(s)`
/// in integer powers of `w`, where `A(s)` is the plant denominator
/// without its leading term.
pub fn closed_loop_poly_w(
    plant: &PlantModel,
    aux: &AuxController,
    betas: &[f64],
    n: usize,
    gamma: f64,
    nu: f64,
) -> Result<CommensurateForm> {
    closed_loop_poly_w_capped(plant, aux, betas, n, gamma, nu, MAX_ORDER_DENOMINATOR)
}

pub fn closed_loop_poly_w_capped(
    plant: &PlantModel,
    aux: &AuxController,
    betas: &[f64],
    n: usize,
    gamma: f64,
    nu: f64,
    max_den: u64,
) -> Result<CommensurateForm> {
    check_orders(betas, n, gamma, nu)?;
    let m = plant.order();
    if aux.k_d().len() > m.saturating_sub(2) {
        return Err(invalid(format!(
            "tracking law has {} derivative gains; a plant of order {m} allows {}",
            aux.k_d().len(),
            m.saturating_sub(2)
        )));
    }
    let (p1, q1) = rationalize(nu, max_den)?;
    let (p2, q2) = rationalize(gamma, max_den)?;
    let g = (p2 * q1) as usize; // s^γ
    let one = (q1 * q2) as usize; // s
    let nu_w = (p1 * q2) as usize; // s^ν
    let mono = |c: f64, d: usize| Poly::monomial(c, d);

    let mut tracking = Poly::constant(aux.k_p()).add(&mono(1.0, n * g));
    for (i, k) in aux.k_d().iter().enumerate() {
        tracking = tracking.add(&mono(*k, (i + 1) * one));
    }
    let mut gm = tracking.clone();
    for (i, b) in betas.iter().enumerate().take(n) {
        gm = gm.add(&mono(*b, (n - i - 1) * g));
    }
    let mut plant_poly = Poly::zero();
    for i in 0..m {
        plant_poly = plant_poly.add(&mono(plant.a(i), i * one));
    }
    let mut eso_inner = mono(1.0, n * g);
    for (i, b) in betas.iter().enumerate().take(n - 1) {
        eso_inner = eso_inner.add(&mono(*b, (n - i - 1) * g));
    }
    let lambda = eso_inner.mul(&mono(1.0, nu_w + g)).add(&mono(betas[n - 1], g)).add(&Poly::constant(betas[n]));
    let p = mono(1.0, g).mul(&plant_poly).mul(&gm).add(&tracking.mul(&lambda));
    Ok(CommensurateForm { p1, q1, p2, q2, w_polynomial: p.descending() })
}

/// Stable iff every root satisfies `|arg w| > π/(2q₁q₂)`.
pub fn commensurate_root_test(form: &CommensurateForm) -> Result<StabilityReport> {
    let p = Poly::from_descending(&form.w_polynomial);
    match p.degree() {
        None | Some(0) => return Err(invalid("root test needs a polynomial of degree ≥ 1")),
        _ => {}
    }
    let (roots, lc) = checked_roots(&p)?;
    Ok(StabilityReport::from_roots(Method::DirectRoot, roots, PI / 2.0 * form.base_order(), lc))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RouthTable {
    pub rows: Vec<Vec<f64>>,
    pub stable: bool,
    /// A zero row was replaced by the derivative of its auxiliary polynomial.
    pub marginal: bool,
}

impl RouthTable {
    pub fn first_column(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r[0]).collect()
    }
}

/// Routh array of a real polynomial (descending coefficients).
pub fn routh_table(coeffs: &[f64]) -> Result<RouthTable> {
    let start = coeffs.iter().position(|&c| c != 0.0).ok_or_else(|| invalid("zero polynomial"))?;
    let c = &coeffs[start..];
    if c[0] < 0.0 {
        return Err(invalid("leading coefficient must be positive"));
    }
    if c.iter().any(|v| !v.is_finite()) {
        return Err(invalid("coefficients must be finite"));
    }
    let deg = c.len() - 1;
    let width = deg / 2 + 1;
    let eps = 1e-12 * c.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let mut rows: Vec<Vec<f64>> = vec![vec![0.0; width], vec![0.0; width]];
    for (i, v) in c.iter().enumerate() {
        rows[i % 2][i / 2] = *v;
    }
    let mut marginal = false;
    for k in 2..=deg {
        let (above, prev) = (&rows[k - 2], &rows[k - 1]);
        let mut pivot_row = prev.clone();
        if pivot_row.iter().all(|v| *v == 0.0) {
            // auxiliary polynomial from the row above, differentiated
            marginal = true;
            let order = deg + 2 - k;
            for (j, v) in above.iter().enumerate() {
                let power = order as i64 - 2 * j as i64;
                pivot_row[j] = if power > 0 { v * power as f64 } else { 0.0 };
            }
            rows[k - 1] = pivot_row.clone();
        }
        if pivot_row[0] == 0.0 {
            pivot_row[0] = eps;
            rows[k - 1][0] = eps;
        }
        let above = &rows[k - 2];
        let mut next = vec![0.0; width];
        for j in 0..width - 1 {
            next[j] = (pivot_row[0] * above[j + 1] - above[0] * pivot_row[j + 1]) / pivot_row[0];
        }
        rows.push(next);
    }
    rows.truncate(deg + 1);
    if deg == 0 {
        rows.truncate(1);
    }
    let stable = !marginal && rows.iter().all(|r| r[0] > 0.0);
    Ok(RouthTable { rows, stable, marginal })
}

/// Boundary polynomials for `m = n = 2` with bandwidth gains:
/// `(¹P, ²P)`, descending coefficients.
pub fn proposition1_polynomials(a0: f64, a1: f64, k_p: f64, omega_o: f64) -> ([f64; 3], [f64; 6]) {
    let w = omega_o;
    let (w2, w3) = (w * w, w * w * w);
    let s = 1.0 + k_p + 3.0 * w + 3.0 * w2;
    let a = [(1.0 + k_p) * (1.0 + 3.0 * w), a1 * s, a0 * s + (1.0 + k_p) * (3.0 * w2 + w3)];
    let b = [
        1.0,
        a1 + 3.0 * w,
        a0 + k_p + 3.0 * a1 * w + 3.0 * w2,
        a1 * k_p + 3.0 * a0 * w + 3.0 * k_p * w + 3.0 * a1 * w2 + w3,
        a0 * k_p + 3.0 * a0 * w2 + 3.0 * k_p * w2,
        k_p * w3,
    ];
    (a, b)
}

/// Routh certificate for the second-order loop with bandwidth gains.
/// Stable iff both boundary polynomials pass.
pub fn proposition1_certify(a0: f64, a1: f64, k_p: f64, omega_o: f64) -> Result<StabilityReport> {
    if !(a0 >= 0.0 && a1 >= 0.0 && k_p > 0.0 && omega_o > 0.0) {
        return Err(invalid("requires a0 ≥ 0, a1 ≥ 0, k_p > 0, ω_o > 0"));
    }
    let (p1, p2) = proposition1_polynomials(a0, a1, k_p, omega_o);
    let t1 = routh_table(&p1)?;
    let t2 = routh_table(&p2)?;
    let mut col = t1.first_column();
    col.extend(t2.first_column());
    let min = col.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(StabilityReport {
        method: Method::Routh,
        stable: t1.stable && t2.stable,
        marginal: t1.marginal || t2.marginal,
        roots: Vec::new(),
        min_arg_margin: min,
        threshold: 0.0,
        low_confidence: false,
        routh_first_column: col,
    })
}

/// Closed-form first-column entries `C₁…C₄` of the ²P Routh table.
pub fn proposition1_c_entries(a0: f64, a1: f64, k_p: f64, omega_o: f64) -> [f64; 4] {
    let (w, kp) = (omega_o, k_p);
    let n5 = a0 * a1 + 3.0 * a1 * a1 * w + 9.0 * a1 * w.powi(2) + 8.0 * w.powi(3);
    let d5 = a1 + 3.0 * w;
    let d6 = n5;
    let n6 = 3.0 * a1 * (a0 * a0 + a1 * a1 * kp) * w
        + (9.0 * a0 * a1 * a1 + 15.0 * a1 * a1 * kp) * w.powi(2)
        + a1 * (10.0 * a0 + 9.0 * a1 * a1 + 18.0 * kp) * w.powi(3)
        + 30.0 * a1 * a1 * w.powi(4)
        + 33.0 * a1 * w.powi(5)
        + 8.0 * w.powi(6)
        - 3.0 * a1 * a0 * kp * w
        - 9.0 * a0 * kp * w.powi(2)
        - 3.0 * a0 * w.powi(4);
    let n7 = 3.0 * (a0.powi(3) * a1 * kp + a0 * a1.powi(3) * kp * kp)
        + (9.0 * a0 * a0 * a1 * a1 * kp + 15.0 * a0 * a1 * a1 * kp * kp) * w
        + (9.0 * a0.powi(3) * a1
            + 9.0 * a0 * a0 * a1 * kp
            + 18.0 * a0 * a1.powi(3) * kp
            + 9.0 * a0 * a1 * kp * kp
            + 9.0 * a1.powi(3) * kp * kp)
            * w.powi(2)
        + (27.0 * a0 * a0 * a1 * a1 + 96.0 * a0 * a1 * a1 * kp - 24.0 * a0 * kp * kp + 42.0 * a1 * a1 * kp * kp)
            * w.powi(3)
        + (30.0 * a0 * a0 * a1
            + 27.0 * a0 * a1.powi(3)
            + 108.0 * a0 * a1 * kp
            + 18.0 * a1.powi(3) * kp
            + 48.0 * a1 * kp * kp)
            * w.powi(4)
        + (90.0 * a0 * a1 * a1 + 54.0 * a1 * a1 * kp) * w.powi(5)
        + (99.0 * a0 * a1 + 48.0 * a1 * kp) * w.powi(6)
        + 24.0 * a0 * w.powi(7)
        - 3.0 * a0 * a0 * a1 * kp * kp
        - 9.0 * a0 * a0 * kp * kp * w
        - 30.0 * a0 * a0 * kp * w.powi(3)
        - 9.0 * a0 * a0 * w.powi(5);
    let d7 = 3.0 * a1 * (a0 * a0 + a1 * a1 * kp)
        + (9.0 * a0 * a1 * a1 + 15.0 * a1 * a1 * kp) * w
        + a1 * (10.0 * a0 + 9.0 * a1 * a1 + 18.0 * kp) * w.powi(2)
        + 30.0 * a1 * a1 * w.powi(3)
        + 33.0 * a1 * w.powi(4)
        + 8.0 * w.powi(5)
        - 3.0 * a1 * a0 * kp
        - 9.0 * a0 * kp * w
        - 3.0 * a0 * w.powi(3);
    [n5 / d5, n6 / d6, n7 / d7, kp * w.powi(3)]
}

/// Bandwidth gains for the `n = 2` observer used by the certificate.
pub fn proposition1_gains(omega_o: f64) -> Vec<f64> {
    bandwidth_gains(omega_o, 2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn char_poly_example() {
        let p = eso_char_poly(&[3.0, 3.0, 1.0], 2, 0.75, 0.5).unwrap();
        assert_eq!(p.terms(), &[(1.0, 2.75), (3.0, 2.0), (3.0, 0.75), (1.0, 0.0)]);
        let z = eso_char_poly(&[0.0, 0.0, 0.0], 2, 0.75, 0.5).unwrap();
        assert_eq!(z.terms(), &[(1.0, 2.75)]);
        assert!(eso_char_poly(&[1.0, 1.0], 2, 0.75, 0.5).is_err());
        assert!(eso_char_poly(&[1.0, 1.0, 1.0], 2, 0.5, 0.75).is_err());
    }

    #[test]
    fn second_boundary_is_binomial() {
        let (_, p2) = kharitonov_boundary(&bandwidth_gains(1.0, 2), 2);
        assert_eq!(p2, vec![1.0, 3.0, 3.0, 1.0]);
    }

    #[test]
    fn negative_gain_is_unstable() {
        let r = kharitonov_eso_check(&[-1.0, 0.0, 0.0], 2, 0.75, 0.5).unwrap();
        assert!(!r.stable);
    }

    #[test]
    fn rationalization() {
        assert_eq!(rationalize(0.75, 64).unwrap(), (3, 4));
        assert_eq!(rationalize(0.5, 64).unwrap(), (1, 2));
        assert_eq!(rationalize(2.0, 64).unwrap(), (2, 1));
        assert!(matches!(rationalize(std::f64::consts::FRAC_1_SQRT_2, 64), Err(Error::OrderApproximation { .. })));
        assert!(rationalize(0.01, 64).is_err());
        assert_eq!(rationalize(0.01, 100).unwrap(), (1, 100));
    }

    #[test]
    fn root_test_examples() {
        let f = |poly: Vec<f64>| CommensurateForm { p1: 1, q1: 2, p2: 1, q2: 2, w_polynomial: poly };
        let r = commensurate_root_test(&f(vec![1.0, 1.0])).unwrap();
        assert!(r.stable);
        assert!((r.min_arg_margin - (PI - PI / 8.0)).abs() < 1e-12);
        assert!(!commensurate_root_test(&f(vec![1.0, -1.0])).unwrap().stable);
        assert!(commensurate_root_test(&f(vec![1.0])).is_err());
    }

    #[test]
    fn routh_examples() {
        assert!(routh_table(&[1.0, 2.0, 1.0]).unwrap().stable);
        assert!(!routh_table(&[1.0, 1.0, -1.0, 1.0]).unwrap().stable);
        // s³ + s² + s + 1 has roots ±j: zero row
        let t = routh_table(&[1.0, 1.0, 1.0, 1.0]).unwrap();
        assert!(t.marginal && !t.stable);
        // zero pivot replaced by ε: s⁴ + s³ + 2s² + 2s + 3 (unstable)
        assert!(!routh_table(&[1.0, 1.0, 2.0, 2.0, 3.0]).unwrap().stable);
        assert!(routh_table(&[-1.0, 1.0]).is_err());
        assert!(routh_table(&[2.0]).unwrap().stable);
    }

    #[test]
    fn closed_form_entries_match_table() {
        for &(a0, a1, kp, w) in &[(3819.7, 138.1, 750.0, 700.0), (2.0, 3.0, 5.0, 7.0), (0.0, 26.08, 50.0, 100.0)] {
            let (_, b) = proposition1_polynomials(a0, a1, kp, w);
            let col = routh_table(&b).unwrap().first_column();
            for (c, t) in proposition1_c_entries(a0, a1, kp, w).iter().zip(&col[2..]) {
                assert!((c - t).abs() <= 1e-9 * t.abs(), "{c} vs {t}");
            }
        }
    }

    #[test]
    fn boundary_coefficients_for_unit_case() {
        let (a, b) = proposition1_polynomials(0.0, 0.0, 1.0, 1.0);
        assert_eq!(a, [8.0, 0.0, 8.0]);
        assert_eq!(b, [1.0, 3.0, 4.0, 4.0, 3.0, 1.0]);
        let c = proposition1_c_entries(0.0, 0.0, 1.0, 1.0);
        assert!((c[0] - 8.0 / 3.0).abs() < 1e-15);
        let t = routh_table(&b).unwrap();
        assert!((t.rows[2][0] - c[0]).abs() < 1e-12);
    }
}
