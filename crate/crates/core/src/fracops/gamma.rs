//! Euler gamma function via the Lanczos approximation (g = 7, 9 terms).

use std::f64::consts::PI;

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEFFS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Γ(x) for real x. Poles at non-positive integers return NaN.
pub fn gamma(x: f64) -> f64 {
    if x <= 0.0 && x == x.floor() {
        return f64::NAN;
    }
    if x < 0.5 {
        // reflection: Γ(x)Γ(1−x) = π / sin(πx)
        return PI / ((PI * x).sin() * gamma(1.0 - x));
    }
    let x = x - 1.0;
    let mut acc = LANCZOS_COEFFS[0];
    for (i, c) in LANCZOS_COEFFS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    (2.0 * PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * acc
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn integers_are_factorials() {
        let mut fact = 1.0;
        for n in 1..20u32 {
            assert!(rel(gamma(n as f64), fact) < 1e-13, "n={n}");
            fact *= n as f64;
        }
    }

    #[test]
    fn half_integers() {
        let sqrt_pi = PI.sqrt();
        assert!(rel(gamma(0.5), sqrt_pi) < 1e-14);
        assert!(rel(gamma(1.5), sqrt_pi / 2.0) < 1e-14);
        assert!(rel(gamma(2.5), 0.75 * sqrt_pi) < 1e-14);
        assert!(rel(gamma(-0.5), -2.0 * sqrt_pi) < 1e-14);
    }

    #[test]
    fn recurrence_holds() {
        for &x in &[0.1, 0.25, 0.75, 1.25, 2.25, 3.7, 7.3] {
            assert!(rel(gamma(x + 1.0), x * gamma(x)) < 1e-13, "x={x}");
        }
    }

    #[test]
    fn poles_are_nan() {
        assert!(gamma(0.0).is_nan());
        assert!(gamma(-3.0).is_nan());
    }
}
