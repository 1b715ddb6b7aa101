//! Integer-order LTI plants `G(s) = b / (s^m + a_{m−1}s^{m−1} + … + a₀)`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{invalid, Result};
use crate::fracops::jw_pow;

#[derive(Debug, Clone, PartialEq)]
pub struct PlantModel {
    denom: Vec<f64>,
    gain_b: f64,
}

impl PlantModel {
    /// `denom = [a₀, a₁, …, a_{m−1}]`; the leading `s^m` is implied.
    pub fn new(denom: Vec<f64>, gain_b: f64) -> Result<Self> {
        if denom.is_empty() {
            return Err(invalid("plant order must be at least 1"));
        }
        if !gain_b.is_finite() || gain_b == 0.0 {
            return Err(invalid(format!("plant gain must be finite and nonzero, got {gain_b}")));
        }
        if denom.iter().any(|a| !a.is_finite()) {
            return Err(invalid("plant denominator coefficients must be finite"));
        }
        Ok(Self { denom, gain_b })
    }

    /// `b / (s² + a₁s + a₀)`.
    pub fn second_order(a0: f64, a1: f64, b: f64) -> Result<Self> {
        Self::new(vec![a0, a1], b)
    }

    pub fn order(&self) -> usize {
        self.denom.len()
    }

    pub fn denom_coeffs(&self) -> &[f64] {
        &self.denom
    }

    pub fn gain(&self) -> f64 {
        self.gain_b
    }

    /// `aᵢ`, zero beyond the stored list.
    pub fn a(&self, i: usize) -> f64 {
        self.denom.get(i).copied().unwrap_or(0.0)
    }

    /// Copy with a different numerator gain.
    pub fn with_gain(&self, gain_b: f64) -> Result<Self> {
        Self::new(self.denom.clone(), gain_b)
    }

    /// Denominator at `jω`.
    pub fn denominator_response(&self, omega: f64) -> Complex64 {
        let m = self.order();
        let mut d = jw_pow(m as f64, omega);
        for (i, a) in self.denom.iter().enumerate() {
            d += a * jw_pow(i as f64, omega);
        }
        d
    }

    pub fn frequency_response(&self, omega: f64) -> Complex64 {
        self.gain_b / self.denominator_response(omega)
    }

    /// Steady-state gain, `None` with a pole at the origin.
    pub fn dc_gain(&self) -> Option<f64> {
        (self.denom[0] != 0.0).then(|| self.gain_b / self.denom[0])
    }

    /// `ẋ = Ax + B(u + d)` in controllable canonical form with `x₁ = y`.
    fn derivative(&self, x: &[f64], input: f64, out: &mut [f64]) {
        let m = self.order();
        out[..m - 1].copy_from_slice(&x[1..m]);
        let mut top = self.gain_b * input;
        for (i, a) in self.denom.iter().enumerate() {
            top -= a * x[i];
        }
        out[m - 1] = top;
    }
}

/// Integration state of a plant; starts at rest.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantState {
    x: Vec<f64>,
}

impl PlantState {
    pub fn at_rest(plant: &PlantModel) -> Self {
        Self { x: vec![0.0; plant.order()] }
    }

    /// `[y, ẏ, …, y^{(m−1)}]`.
    pub fn values(&self) -> &[f64] {
        &self.x
    }

    pub fn output(&self) -> f64 {
        self.x[0]
    }

    pub fn is_finite(&self) -> bool {
        self.x.iter().all(|v| v.is_finite())
    }
}

/// One RK4 step with the input held constant; returns the new output.
///
/// Here `u_plus_d` is `u + d/b`, i.e. the disturbance referred to the
/// input channel. See [`DisturbanceSignal`] for the physical scaling.
pub fn plant_step(plant: &PlantModel, state: &mut PlantState, u_plus_d: f64, step: f64) -> Result<f64> {
    if !(step > 0.0) || !step.is_finite() {
        return Err(invalid(format!("integration step must be > 0, got {step}")));
    }
    let m = plant.order();
    let x = &state.x;
    let mut k1 = vec![0.0; m];
    let mut k2 = vec![0.0; m];
    let mut k3 = vec![0.0; m];
    let mut k4 = vec![0.0; m];
    let mut tmp = vec![0.0; m];
    plant.derivative(x, u_plus_d, &mut k1);
    for i in 0..m {
        tmp[i] = x[i] + 0.5 * step * k1[i];
    }
    plant.derivative(&tmp, u_plus_d, &mut k2);
    for i in 0..m {
        tmp[i] = x[i] + 0.5 * step * k2[i];
    }
    plant.derivative(&tmp, u_plus_d, &mut k3);
    for i in 0..m {
        tmp[i] = x[i] + step * k3[i];
    }
    plant.derivative(&tmp, u_plus_d, &mut k4);
    for i in 0..m {
        state.x[i] += step / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    Ok(state.output())
}

/// The worked second-order example: `383.635 / (s (s + 26.08))`.
pub fn example_plant() -> PlantModel {
    PlantModel { denom: vec![0.0, 26.08], gain_b: 383.635 }
}

/// Speed-loop plant from iq to speed in r/min:
/// `375 Cm K₁ / (Tᵢ GD² s² + (K_v B Tᵢ + GD²) s + K_v B)`, normalized monic.
pub fn pmsm_speed_plant(p: &PmsmParams) -> Result<PlantModel> {
    let lead = p.filter_ti * p.flywheel_gd2;
    if !(lead > 0.0) || !lead.is_finite() {
        return Err(invalid("Ti·GD² must be positive"));
    }
    let a1 = (p.speed_factor_kv * p.viscous_b * p.filter_ti + p.flywheel_gd2) / lead;
    let a0 = p.speed_factor_kv * p.viscous_b / lead;
    let b = 375.0 * p.torque_coeff_cm * p.speed_conv_k1 / lead;
    PlantModel::second_order(a0, a1, b)
}

/// Motor constants. Resistance, inductance and back-EMF coefficient are
/// carried for completeness only; the speed-loop plant assumes an ideal
/// current loop and does not use them.
#[derive(Debug, Clone, PartialEq)]
pub struct PmsmParams {
    pub torque_coeff_cm: f64,
    pub flywheel_gd2: f64,
    pub viscous_b: f64,
    pub speed_factor_kv: f64,
    pub speed_conv_k1: f64,
    pub filter_ti: f64,
    pub phase_resistance_rs: f64,
    pub q_inductance_lq: f64,
    pub emf_coeff_ce: f64,
}

impl PmsmParams {
    /// Conversion from rad/s to r/min.
    pub const KV: f64 = 30.0 / PI;

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("Cm", self.torque_coeff_cm),
            ("GD2", self.flywheel_gd2),
            ("B", self.viscous_b),
            ("Kv", self.speed_factor_kv),
            ("K1", self.speed_conv_k1),
            ("Ti", self.filter_ti),
            ("Rs", self.phase_resistance_rs),
            ("Lq", self.q_inductance_lq),
            ("Ce", self.emf_coeff_ce),
        ];
        for (name, v) in fields {
            if !(v > 0.0) || !v.is_finite() {
                return Err(invalid(format!("PMSM parameter {name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// Speed-loop plant with fixed numeric coefficients.
pub fn pmsm_numeric_plant() -> PlantModel {
    PlantModel { denom: vec![3819.7, 138.1], gain_b: 2380.9 }
}

/// Bounded additive disturbance `d(t)` entering the highest derivative.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum DisturbanceSignal {
    #[default]
    Zero,
    Constant(f64),
    Step {
        amplitude: f64,
        onset: f64,
    },
    Sinusoid {
        amplitude: f64,
        omega: f64,
    },
}

impl DisturbanceSignal {
    pub fn value(&self, t: f64) -> f64 {
        match *self {
            DisturbanceSignal::Zero => 0.0,
            DisturbanceSignal::Constant(a) => a,
            DisturbanceSignal::Step { amplitude, onset } => {
                if t >= onset {
                    amplitude
                } else {
                    0.0
                }
            }
            DisturbanceSignal::Sinusoid { amplitude, omega } => amplitude * (omega * t).sin(),
        }
    }

    /// Upper bound on `|d(t)|`.
    pub fn bound(&self) -> f64 {
        match *self {
            DisturbanceSignal::Zero => 0.0,
            DisturbanceSignal::Constant(a)
            | DisturbanceSignal::Step { amplitude: a, .. }
            | DisturbanceSignal::Sinusoid { amplitude: a, .. } => a.abs(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn example_plant_values() {
        let p = example_plant();
        assert_eq!(p.order(), 2);
        assert_eq!(p.denom_coeffs(), &[0.0, 26.08]);
        assert_eq!(p.gain(), 383.635);
        assert_eq!(p.dc_gain(), None);
        let sg = p.frequency_response(1e-6) * Complex64::new(0.0, 1e-6);
        assert!((sg.re - 383.635 / 26.08).abs() < 1e-6);
    }

    #[test]
    fn rejects_invalid_plants() {
        assert!(PlantModel::new(vec![], 1.0).is_err());
        assert!(PlantModel::new(vec![1.0], 0.0).is_err());
        assert!(PlantModel::new(vec![f64::NAN], 1.0).is_err());
    }

    #[test]
    fn rest_stays_at_rest() {
        let p = example_plant();
        let mut s = PlantState::at_rest(&p);
        for _ in 0..100 {
            assert_eq!(plant_step(&p, &mut s, 0.0, 1e-4).unwrap(), 0.0);
        }
    }

    #[test]
    fn integrator_velocity_limit() {
        let p = example_plant();
        let mut s = PlantState::at_rest(&p);
        for _ in 0..8000 {
            plant_step(&p, &mut s, 1.0, 1.0 / 8000.0).unwrap();
        }
        assert!((s.values()[1] - 383.635 / 26.08).abs() < 1e-6);
    }

    #[test]
    fn pmsm_numeric_dc_gain() {
        let p = pmsm_numeric_plant();
        let mut s = PlantState::at_rest(&p);
        for _ in 0..16000 {
            plant_step(&p, &mut s, 1.0, 1.0 / 8000.0).unwrap();
        }
        assert!((s.output() - 2380.9 / 3819.7).abs() < 1e-6);
    }

    #[test]
    fn pmsm_gain_is_linear_in_cm() {
        let base = PmsmParams {
            torque_coeff_cm: 0.5,
            flywheel_gd2: 0.02,
            viscous_b: 0.001,
            speed_factor_kv: PmsmParams::KV,
            speed_conv_k1: 1.0 / 1200.0,
            filter_ti: 0.01,
            phase_resistance_rs: 1.0,
            q_inductance_lq: 0.01,
            emf_coeff_ce: 0.1,
        };
        let p1 = pmsm_speed_plant(&base).unwrap();
        let p2 = pmsm_speed_plant(&PmsmParams { torque_coeff_cm: 1.0, ..base.clone() }).unwrap();
        assert!((p2.gain() - 2.0 * p1.gain()).abs() < 1e-12 * p1.gain());
        assert_eq!(p1.denom_coeffs(), p2.denom_coeffs());
        assert!(p1.denom_coeffs().iter().all(|&a| a > 0.0));
    }

    #[test]
    fn disturbance_values() {
        let d = DisturbanceSignal::Step { amplitude: 2.0, onset: 0.5 };
        assert_eq!(d.value(0.4), 0.0);
        assert_eq!(d.value(0.5), 2.0);
        assert_eq!(d.bound(), 2.0);
        assert_eq!(DisturbanceSignal::Zero.value(1.0), 0.0);
    }
}
