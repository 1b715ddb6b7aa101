//! Fixed-step closed-loop simulation and step-response metrics.
//!
//! Each controller sample reads `y`, forms the observer estimate, solves the
//! control law and then integrates the plant across the sample period with
//! `u` held. The plant may be sub-stepped at a finer integration step.

use std::fmt::Write as _;

use crate::adrc::AdrcLoop;
use crate::error::{invalid, Error, Result};
use crate::observers::ObserverState;
use crate::par::Strategy;
use crate::plants::{plant_step, DisturbanceSignal, PlantState};

/// Outputs beyond this magnitude are treated as divergence.
const BLOW_UP: f64 = 1e100;

/// Reference input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Reference {
    Zero,
    /// Applied at `t = 0⁺`. Its first derivative is the discrete impulse
    /// `amplitude/T` at the first sample and zero afterwards.
    Step {
        amplitude: f64,
    },
}

impl Reference {
    pub fn value(&self, _t: f64) -> f64 {
        match *self {
            Reference::Zero => 0.0,
            Reference::Step { amplitude } => amplitude,
        }
    }

    /// `[r, ṙ, r̈, …]` with `count` entries at sample `k`.
    fn derivatives(&self, k: usize, period: f64, count: usize) -> Vec<f64> {
        let mut d = vec![0.0; count];
        if let Reference::Step { amplitude } = *self {
            d[0] = amplitude;
            if count > 1 && k == 0 {
                d[1] = amplitude / period;
            }
        }
        d
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SimulationTrace {
    /// Controller period.
    pub period: f64,
    pub time: Vec<f64>,
    pub reference: Vec<f64>,
    pub output: Vec<f64>,
    pub control: Vec<f64>,
    pub aux_control: Vec<f64>,
    pub observer_states: Vec<Vec<f64>>,
    pub q_hat: Vec<f64>,
    pub f_hat: Vec<f64>,
    /// The run hit a non-finite value and was cut short.
    pub diverged: bool,
}

impl SimulationTrace {
    pub fn len(&self) -> usize {
        self.time.len()
    }

    pub fn is_empty(&self) -> bool {
        self.time.is_empty()
    }

    #[allow(clippy::too_many_arguments)]
    fn push(&mut self, t: f64, r: f64, y: f64, u: f64, u0: f64, z: Vec<f64>, q: f64, f: f64) {
        self.time.push(t);
        self.reference.push(r);
        self.output.push(y);
        self.control.push(u);
        self.aux_control.push(u0);
        self.observer_states.push(z);
        self.q_hat.push(q);
        self.f_hat.push(f);
    }

    /// Columns `t,r,y,u,u0,q_hat,f_hat`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,r,y,u,u0,q_hat,f_hat\n");
        for i in 0..self.len() {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{}",
                self.time[i],
                self.reference[i],
                self.output[i],
                self.control[i],
                self.aux_control[i],
                self.q_hat[i],
                self.f_hat[i]
            );
        }
        s
    }

    /// Columns `t,z1..zk,q_hat,f_hat,e1` with `e1 = y − z1`.
    pub fn observer_csv(&self) -> String {
        let width = self.observer_states.first().map_or(0, Vec::len);
        let mut s = String::from("t");
        for i in 1..=width {
            let _ = write!(s, ",z{i}");
        }
        s.push_str(",q_hat,f_hat,e1\n");
        for i in 0..self.len() {
            let z = &self.observer_states[i];
            let _ = write!(s, "{}", self.time[i]);
            for v in z {
                let _ = write!(s, ",{v}");
            }
            let _ = writeln!(s, ",{},{},{}", self.q_hat[i], self.f_hat[i], self.output[i] - z[0]);
        }
        s
    }
}

/// Runs the loop from rest over `[0, horizon]`.
///
/// The controller period comes from the observer's sample rate; `step` is
/// the plant integration step and must divide that period.
pub fn simulate(
    lp: &AdrcLoop,
    reference: &Reference,
    disturbance: &DisturbanceSignal,
    horizon: f64,
    step: f64,
) -> Result<SimulationTrace> {
    lp.validate()?;
    let period = lp.observer.sample_period();
    let substeps = whole_ratio(period, step)
        .ok_or_else(|| invalid(format!("integration step {step} does not divide the sample period {period}")))?;
    let samples = whole_ratio(horizon, period)
        .ok_or_else(|| invalid(format!("horizon {horizon} is not a whole number of sample periods {period}")))?;
    let h = period / substeps as f64;
    let b = lp.plant.gain();
    let need = 1 + lp.aux.k_d().len() + usize::from(lp.aux.reference_feedforward());

    let mut observer = ObserverState::new(&lp.observer)?;
    let mut plant = PlantState::at_rest(&lp.plant);
    let mut trace = SimulationTrace { period, ..Default::default() };

    for k in 0..=samples {
        let t = k as f64 * period;
        let y = plant.output();
        if !plant.is_finite() || y.abs() > BLOW_UP {
            trace.diverged = true;
            break;
        }
        let r_derivs = reference.derivatives(k, period, need);
        let est = observer.observe(y);
        let sol = match lp.solve_control(&est, &r_derivs, y) {
            Ok(sol) => sol,
            // a blown-up state swamps the dependence on u
            Err(Error::Numeric { .. }) => {
                trace.diverged = true;
                break;
            }
            Err(e) => return Err(e),
        };
        let out = observer.commit(sol.u, y);
        if !sol.u.is_finite() || !observer.is_valid() {
            trace.diverged = true;
            break;
        }
        trace.push(t, r_derivs[0], y, sol.u, sol.u0, out.z, out.q_hat, out.f_hat);
        if k == samples {
            break;
        }
        for j in 0..substeps {
            let d = disturbance.value(t + j as f64 * h);
            plant_step(&lp.plant, &mut plant, sol.u + d / b, h)?;
        }
    }
    Ok(trace)
}

/// `a/b` when it is a positive integer to within rounding.
fn whole_ratio(a: f64, b: f64) -> Option<usize> {
    if !(a > 0.0 && b > 0.0) || !a.is_finite() || !b.is_finite() {
        return None;
    }
    let r = a / b;
    let n = r.round();
    ((r - n).abs() <= 1e-9 * n.max(1.0) && n >= 1.0).then_some(n as usize)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepMetrics {
    pub overshoot_pct: f64,
    /// Time after which the output stays within the band. `None` if it is
    /// still outside at the end of the run.
    pub settling_time: Option<f64>,
    pub steady_state_error: f64,
    pub peak_value: f64,
    /// False for diverged traces.
    pub valid: bool,
}

impl StepMetrics {
    pub fn to_key_value(&self) -> String {
        let settling = self.settling_time.map_or_else(|| "unsettled".to_string(), |t| t.to_string());
        format!(
            "overshoot_pct={}\nsettling_time={settling}\nsteady_state_error={}\npeak_value={}\nvalid={}\n",
            self.overshoot_pct, self.steady_state_error, self.peak_value, self.valid
        )
    }
}

/// Overshoot, settling time (last exit from the `±settle_band_pct` band),
/// final error and peak of a step response.
pub fn step_metrics(trace: &SimulationTrace, reference_value: f64, settle_band_pct: f64) -> Result<StepMetrics> {
    if reference_value == 0.0 || !reference_value.is_finite() {
        return Err(invalid("step metrics need a nonzero reference"));
    }
    if !(settle_band_pct > 0.0) {
        return Err(invalid(format!("settling band must be > 0, got {settle_band_pct}")));
    }
    if trace.is_empty() {
        return Err(invalid("empty trace"));
    }
    let sign = reference_value.signum();
    let peak = trace.output.iter().copied().fold(f64::NEG_INFINITY, |a, y| a.max(sign * y)) * sign;
    let overshoot = (100.0 * (peak - reference_value) / reference_value).max(0.0);
    let band = settle_band_pct / 100.0 * reference_value.abs();
    let last_out = trace.output.iter().rposition(|y| (y - reference_value).abs() > band);
    let settling_time = match last_out {
        None => Some(trace.time[0]),
        Some(i) if i + 1 < trace.len() => Some(trace.time[i + 1]),
        Some(_) => None,
    };
    let last = *trace.output.last().unwrap_or(&f64::NAN);
    Ok(StepMetrics {
        overshoot_pct: overshoot,
        settling_time,
        steady_state_error: (reference_value - last).abs(),
        peak_value: peak,
        valid: !trace.diverged,
    })
}

/// `(max − min)/reference · 100` over the peaks of gain-scaled runs.
pub fn overshoot_fluctuation(peaks: &[f64], reference: f64) -> f64 {
    let max = peaks.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = peaks.iter().copied().fold(f64::INFINITY, f64::min);
    if peaks.is_empty() {
        return 0.0;
    }
    (max - min) / reference.abs() * 100.0
}

/// One run of a gain sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRun {
    pub k: f64,
    pub trace: Result<SimulationTrace>,
}

/// Reruns the loop with the tracking gain scaled by each `K`. Runs are
/// independent; failures are recorded per run.
pub fn gain_sweep(
    strategy: Strategy,
    lp: &AdrcLoop,
    k_values: &[f64],
    reference: &Reference,
    disturbance: &DisturbanceSignal,
    horizon: f64,
    step: f64,
) -> Vec<SweepRun> {
    strategy.map_slice(k_values, |&k| SweepRun {
        k,
        trace: simulate(&lp.with_gain_scale(k), reference, disturbance, horizon, step),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn analytic(zeta: f64) -> SimulationTrace {
        let wn = 10.0;
        let mut tr = SimulationTrace { period: 1e-3, ..Default::default() };
        for k in 0..=5000 {
            let t = k as f64 * 1e-3;
            let y = if zeta < 1.0 {
                let wd = wn * (1.0 - zeta * zeta).sqrt();
                1.0 - (-zeta * wn * t).exp() * ((wd * t).cos() + zeta * wn / wd * (wd * t).sin())
            } else {
                1.0 - (-wn * t).exp() * (1.0 + wn * t)
            };
            tr.push(t, 1.0, y, 0.0, 0.0, vec![y], 0.0, 0.0);
        }
        tr
    }

    #[test]
    fn second_order_overshoot() {
        let m = step_metrics(&analytic(0.5), 1.0, 2.0).unwrap();
        let expect = 100.0 * (-0.5 * std::f64::consts::PI / 0.75f64.sqrt()).exp();
        assert!((m.overshoot_pct - expect).abs() < 0.01, "{}", m.overshoot_pct);
        assert!(m.settling_time.unwrap() < 1.0);
        let c = step_metrics(&analytic(1.0), 1.0, 2.0).unwrap();
        assert_eq!(c.overshoot_pct, 0.0);
    }

    #[test]
    fn fluctuation() {
        assert_eq!(overshoot_fluctuation(&[1.2, 1.2, 1.2], 1.0), 0.0);
        assert!((overshoot_fluctuation(&[1.10, 1.05, 1.00], 1.0) - 10.0).abs() < 1e-12);
    }

    #[test]
    fn ratios() {
        assert_eq!(whole_ratio(1.0, 1.0 / 8000.0), Some(8000));
        assert_eq!(whole_ratio(1.0 / 8000.0, 1.0 / 16000.0), Some(2));
        assert_eq!(whole_ratio(1.0, 0.3), None);
    }
}
