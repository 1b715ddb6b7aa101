//! Independent oracles: each check recomputes a quantity by a route that
//! shares no code with the implementation under test.

mod common;

use common::*;
use fadrc::fracops::{caputo_gl_oracle, gamma, iri_discretize, FractionalOrder};
use fadrc::freqanal::{eval_fotf, FoPoly, LoopModel};
use fadrc::observers::{bandwidth_gains, ObserverConfig, ObserverKind, ObserverState};
use fadrc::plants::{example_plant, plant_step, PlantState};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

fn pow(s: Complex64, e: f64) -> Complex64 {
    // principal branch
    Complex64::from_polar(s.norm().powf(e), s.arg() * e)
}

/// Solves observer, plant and control law at `s = jω` with `u₀ = 1`.
/// Unknowns `[Z₁, Z₂, Z₃, W, U, Y]`; returns `(Y, Z₁/Y)`.
fn loop_by_linear_solve(m: &LoopModel, kind: ObserverKind, omega: f64) -> (Complex64, Complex64) {
    let s = Complex64::new(0.0, omega);
    let c = |v: f64| Complex64::new(v, 0.0);
    let [b1, b2, b3] = m.betas;
    let unit = if kind == ObserverKind::Io { 1.0 } else { m.gamma };
    let sg = pow(s, unit);
    let nu = 2.0 - 2.0 * m.gamma;
    let dp = s * s + c(m.a1) * s + c(m.a0);
    let mut a = DMatrix::<Complex64>::zeros(6, 6);
    let mut rhs = DVector::<Complex64>::zeros(6);
    // sg Z1 = Z2 + β1 (Y − Z1)
    a[(0, 0)] = sg + c(b1);
    a[(0, 1)] = c(-1.0);
    a[(0, 5)] = c(-b1);
    // sg Z3 = β3 (Y − Z1)
    a[(2, 0)] = c(b3);
    a[(2, 2)] = sg;
    a[(2, 5)] = c(-b3);
    // plant: Dp Y = b U
    a[(4, 4)] = c(-m.b);
    a[(4, 5)] = dp;
    match kind {
        ObserverKind::Ifo => {
            // sg Z2 = W, s^ν W = Z3 + b0 U + β2 (Y − Z1)
            a[(1, 1)] = sg;
            a[(1, 3)] = c(-1.0);
            a[(3, 0)] = c(b2);
            a[(3, 2)] = c(-1.0);
            a[(3, 3)] = pow(s, nu);
            a[(3, 4)] = c(-m.b0);
            a[(3, 5)] = c(-b2);
            // b0 U = u0 − q̂ − Z3 with q̂ = W − (Z3 + b0 U + β2 E)
            a[(5, 0)] = c(b2);
            a[(5, 3)] = c(1.0);
            a[(5, 5)] = c(-b2);
        }
        _ => {
            // sg Z2 = Z3 + b0 U + β2 (Y − Z1), W unused
            a[(1, 0)] = c(b2);
            a[(1, 1)] = sg;
            a[(1, 2)] = c(-1.0);
            a[(1, 4)] = c(-m.b0);
            a[(1, 5)] = c(-b2);
            a[(3, 3)] = c(1.0);
            // b0 U = u0 − Z3
            a[(5, 2)] = c(1.0);
            a[(5, 4)] = c(m.b0);
        }
    }
    rhs[5] = c(1.0);
    let x = a.lu().solve(&rhs).expect("nonsingular loop equations");
    (x[5], x[0] / x[5])
}

#[test]
fn closed_forms_match_linear_solve() {
    let cases = [
        (0.0, AO, B0, B0, WO, GAMMA),
        (0.0, AO, 1.3 * B0, B0, WO, GAMMA),
        (3819.7, 138.1, PMSM_B, PMSM_B, WO, GAMMA),
        (5.0, 10.0, 80.0, 100.0, 2000.0, 0.6),
        (0.0, 100.0, 500.0, 450.0, 500.0, 0.9),
    ];
    for &(a0, a1, b, b0, wo, g) in &cases {
        let m = LoopModel::bandwidth(a0, a1, b, b0, wo, g).unwrap();
        for kind in [ObserverKind::Ifo, ObserverKind::Fo, ObserverKind::Io] {
            for omega in [0.5, 7.0, 42.0, 310.0, 2200.0, 3e4] {
                let (p, z) = loop_by_linear_solve(&m, kind, omega);
                let p_cf = eval_fotf(&m.p(kind), omega).unwrap();
                let z_cf = eval_fotf(&m.z1_over_y(kind), omega).unwrap();
                assert!((p - p_cf).norm() <= 1e-9 * p.norm(), "{kind:?} P at ω={omega}: {p} vs {p_cf}");
                assert!((z - z_cf).norm() <= 1e-9 * z.norm(), "{kind:?} Z1/Y at ω={omega}: {z} vs {z_cf}");
            }
        }
    }
}

#[test]
fn rk4_matches_matrix_exponential() {
    let plant = example_plant();
    let t = 1.0 / FS;
    // augmented [x; u] so the held input is part of the exponential
    let mut aug = DMatrix::<f64>::zeros(3, 3);
    aug[(0, 1)] = 1.0;
    aug[(1, 1)] = -AO;
    aug[(1, 2)] = B0;
    let phi = (aug * t).exp();
    let mut exact = DVector::from_vec(vec![0.0, 0.0, 0.0]);
    let mut state = PlantState::at_rest(&plant);
    let mut worst = 0.0f64;
    for k in 0..8000 {
        let u = (20.0 * k as f64 * t).sin() + 0.3;
        exact[2] = u;
        exact = &phi * &exact;
        let y = plant_step(&plant, &mut state, u, t).unwrap();
        worst = worst.max((y - exact[0]).abs());
    }
    assert!(worst < 1e-8, "max |Δy| = {worst:e}");
}

#[test]
fn gl_oracle_matches_closed_form_derivatives() {
    let h = 1e-4;
    let t: Vec<f64> = (0..=10_000).map(|k| k as f64 * h).collect();
    let t2: Vec<f64> = t.iter().map(|v| v * v).collect();
    for alpha in [0.5, 0.75] {
        let d1 = caputo_gl_oracle(&t, FractionalOrder::new(alpha).unwrap(), h).unwrap();
        let d2 = caputo_gl_oracle(&t2, FractionalOrder::new(alpha).unwrap(), h).unwrap();
        let e1 = 1.0 / gamma(2.0 - alpha);
        let e2 = 2.0 / gamma(3.0 - alpha);
        assert!((d1[10_000] - e1).abs() < 1e-2 * e1);
        assert!((d2[10_000] - e2).abs() < 1e-2 * e2);
    }
}

#[test]
fn gamma_known_values() {
    let sqrt_pi = std::f64::consts::PI.sqrt();
    for (x, v) in [(0.5, sqrt_pi), (1.5, sqrt_pi / 2.0), (5.0, 24.0), (1.0, 1.0), (-0.5, -2.0 * sqrt_pi)] {
        assert!((gamma(x) - v).abs() <= 1e-12 * v.abs(), "Γ({x}) = {}", gamma(x));
    }
}

#[test]
fn derivative_filter_matches_power_law() {
    let f = iri_discretize(FractionalOrder::new(0.5).unwrap(), FS, N_APPROX).unwrap();
    for hz in [1.0, 10.0, 100.0, 400.0] {
        let w = 2.0 * std::f64::consts::PI * hz;
        let target = Complex64::from_polar(w.sqrt(), std::f64::consts::FRAC_PI_4);
        let h = f.frequency_response(hz);
        assert!((h / target).norm().log10().abs() * 20.0 < 1.0);
        assert!((h / target).arg().to_degrees().abs() < 3.0);
    }
}

/// Fits `a sin ωt + b cos ωt + c` to the tail of a signal.
fn sinusoid_fit(t: &[f64], x: &[f64], omega: f64) -> Complex64 {
    let rows = t.len();
    let a = DMatrix::from_fn(rows, 3, |i, j| match j {
        0 => (omega * t[i]).sin(),
        1 => (omega * t[i]).cos(),
        _ => 1.0,
    });
    let sol = a.svd(true, true).solve(&DVector::from_column_slice(x), 1e-12).unwrap();
    // a sin + b cos = Im{(a + jb) e^{jωt}}
    Complex64::new(sol[0], sol[1])
}

fn observer_y_response(kind: ObserverKind, omega: f64) -> Complex64 {
    let [b1, b2, b3]: [f64; 3] = bandwidth_gains(WO, 2).try_into().unwrap();
    let g = if kind == ObserverKind::Io { 1.0 } else { GAMMA };
    let lead = if kind == ObserverKind::Ifo { 2.0 } else { 2.0 * g };
    let num = FoPoly::from_terms(vec![(b1, lead), (b2, g), (b3, 0.0)]);
    let den = num.add(&FoPoly::term(1.0, lead + g));
    num.eval(omega) / den.eval(omega)
}

#[test]
fn discrete_observers_track_continuous_response() {
    for kind in [ObserverKind::Ifo, ObserverKind::Fo, ObserverKind::Io] {
        let cfg: ObserverConfig = observer(kind, B0);
        for omega in [200.0, 700.0, 1500.0] {
            let mut st = ObserverState::new(&cfg).unwrap();
            let samples = (3.0 * FS) as usize;
            let mut t = Vec::new();
            let mut z1 = Vec::new();
            for k in 0..samples {
                let tk = k as f64 / FS;
                let out = st.commit(0.0, (omega * tk).sin());
                if k >= samples / 2 {
                    t.push(tk);
                    z1.push(out.z[0]);
                }
            }
            let got = sinusoid_fit(&t, &z1, omega);
            let want = observer_y_response(kind, omega);
            let mag_db = 20.0 * (got.norm() / want.norm()).log10();
            let phase = (got / want).arg().to_degrees();
            assert!(mag_db.abs() < 0.3 && phase.abs() < 3.0, "{kind:?} ω={omega}: {mag_db} dB, {phase}°");
        }
    }
}
