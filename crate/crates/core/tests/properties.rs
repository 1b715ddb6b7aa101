mod common;

use common::*;
use fadrc::adrc::{match_crossover_design, AuxController};
use fadrc::fracops::{
    assess_band, caputo_gl_oracle, s_power_response, synthesize, working_band, FractionalOperator, FractionalOrder,
    BAND_LIMIT_DB, BAND_LIMIT_DEG,
};
use fadrc::freqanal::{
    build_delta_fo, build_delta_ifo, crossover_and_margin, delta_from_p, eval_fotf, open_loop, open_loop_io,
    FoTransferFunction, LoopModel,
};
use fadrc::observers::{bandwidth_gains, fractional_state_count, ObserverKind};
use fadrc::plants::{pmsm_speed_plant, PlantModel, PmsmParams};
use fadrc::poly::Poly;
use fadrc::stability::{
    closed_loop_poly_w, commensurate_root_test, kharitonov_eso_check, proposition1_certify, routh_table,
};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn power_responses_are_reciprocal(g in 0.01f64..3.0, w in 1e-3f64..1e5) {
        let p = s_power_response(g, w).unwrap() * s_power_response(-g, w).unwrap();
        prop_assert!((p - num_complex::Complex64::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn pmsm_plant_is_hurwitz(cm in 0.01f64..10.0, gd2 in 1e-3f64..1.0, b in 1e-4f64..1.0, ti in 1e-4f64..0.1) {
        let p = PmsmParams {
            torque_coeff_cm: cm,
            flywheel_gd2: gd2,
            viscous_b: b,
            speed_factor_kv: PmsmParams::KV,
            speed_conv_k1: 1.0,
            filter_ti: ti,
            phase_resistance_rs: 1.0,
            q_inductance_lq: 1e-3,
            emf_coeff_ce: 0.1,
        };
        let plant = pmsm_speed_plant(&p).unwrap();
        prop_assert!(plant.denom_coeffs().iter().all(|&a| a > 0.0));
        prop_assert!(plant.gain() > 0.0);
    }

    #[test]
    fn printed_deltas_match_derived(w in 0.1f64..1e5, ao in 1.0f64..200.0, wo in 50.0f64..5000.0, g in 0.51f64..0.99) {
        let m = LoopModel::bandwidth(0.0, ao, B0, B0, wo, g).unwrap();
        for (printed, kind) in [(build_delta_ifo(ao, wo, g), ObserverKind::Ifo), (build_delta_fo(ao, wo, g), ObserverKind::Fo)] {
            let a = eval_fotf(&printed, w).unwrap();
            let b = eval_fotf(&delta_from_p(&m.p(kind), g), w).unwrap();
            prop_assert!((a - b).norm() <= 1e-9 * b.norm().max(1e-300), "{kind:?}: {a} vs {b}");
        }
    }

    #[test]
    fn crossover_ignores_common_scaling(k in 1e-3f64..1e3) {
        let tf = open_loop_io(&nominal_model(), K_IP, K_ID);
        let scaled = FoTransferFunction::new(tf.numerator.scale(k), tf.denominator.scale(k)).unwrap();
        let a = crossover_and_margin(&tf, (1.0, 1e4)).unwrap();
        let b = crossover_and_margin(&scaled, (1.0, 1e4)).unwrap();
        prop_assert!((a.omega_c - b.omega_c).abs() <= 1e-9 * a.omega_c);
        prop_assert!((a.phase_margin_deg - b.phase_margin_deg).abs() <= 1e-7);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn synthesized_filters_meet_their_bound(alpha in 0.1f64..1.9, integral in any::<bool>(), n in 4usize..10, fs in prop::sample::select(vec![1000.0, 8000.0, 20000.0])) {
        let order = FractionalOrder::new(alpha).unwrap();
        let op = if integral { FractionalOperator::integral(order) } else { FractionalOperator::derivative(order) };
        let f = match synthesize(op, fs, n) {
            Ok(f) => f,
            // rejection is the contract when the band cannot be met
            Err(fadrc::Error::Synthesis { max_mag_db, max_phase_deg }) => {
                prop_assert!(max_mag_db > BAND_LIMIT_DB || max_phase_deg > BAND_LIMIT_DEG);
                return Ok(());
            }
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        };
        prop_assert!(f.is_stable().unwrap());
        let reported = f.band_error().unwrap();
        prop_assert!(reported.max_mag_db <= BAND_LIMIT_DB && reported.max_phase_deg <= BAND_LIMIT_DEG);
        let again = assess_band(&f, op.exponent(), working_band(fs));
        prop_assert!(again.max_mag_db <= reported.max_mag_db + 1e-12);
        prop_assert!(again.max_phase_deg <= reported.max_phase_deg + 1e-12);
    }

    #[test]
    fn designed_pd_hits_its_targets(wc in 20.0f64..200.0, pm in 30.0f64..70.0) {
        let m = nominal_model();
        let plant_only = open_loop(&m, ObserverKind::Io, &AuxController::p(1.0)).unwrap();
        match match_crossover_design(&plant_only, wc, pm) {
            Ok(pd) => {
                let (k_ip, k_id) = pd.pd_parameters().unwrap();
                let c = crossover_and_margin(&open_loop_io(&m, k_ip, k_id), (wc / 10.0, wc * 10.0)).unwrap();
                prop_assert!((c.omega_c - wc).abs() <= 1e-6 * wc);
                prop_assert!((c.phase_margin_deg - pm).abs() <= 1e-6);
            }
            Err(fadrc::Error::InfeasibleDesign { .. }) => {}
            Err(e) => prop_assert!(false, "{e}"),
        }
    }

    #[test]
    fn gl_orders_compose(g in 0.1f64..0.6, d in 0.1f64..0.6) {
        let h = 1e-3;
        let f: Vec<f64> = (0..=1000).map(|k| (k as f64 * h).powi(3)).collect();
        let once = caputo_gl_oracle(&f, FractionalOrder::new(g + d).unwrap(), h).unwrap();
        let inner = caputo_gl_oracle(&f, FractionalOrder::new(d).unwrap(), h).unwrap();
        let twice = caputo_gl_oracle(&inner, FractionalOrder::new(g).unwrap(), h).unwrap();
        let (a, b) = (once[1000], twice[1000]);
        prop_assert!((a - b).abs() < 2e-2 * a.abs(), "{a} vs {b}");
    }

    #[test]
    fn routh_agrees_with_roots(coeffs in prop::collection::vec(-5i32..=5, 1..=6), lead in 1i32..=5) {
        let mut desc = vec![lead as f64];
        desc.extend(coeffs.iter().map(|&c| c as f64));
        let table = routh_table(&desc).unwrap();
        let roots = Poly::from_descending(&desc).roots().unwrap();
        let left = roots.iter().all(|z| z.re < -1e-9);
        prop_assert_eq!(table.stable, left, "{:?} roots {:?}", desc, roots);
    }
}

#[test]
fn bandwidth_observers_are_certified() {
    for wo in [10.0, 100.0, 700.0, 2000.0] {
        for g in [0.6, 0.75, 0.9] {
            // γ = 0.6 needs n = 3 for 0 < ν < γ
            let n = fractional_state_count(2, g).unwrap();
            let nu = 2.0 - n as f64 * g;
            let r = kharitonov_eso_check(&bandwidth_gains(wo, n), n, g, nu).unwrap();
            assert!(r.stable && !r.low_confidence, "ω_o={wo} γ={g}");
        }
    }
}

#[test]
fn certificate_agrees_with_root_test_at_high_bandwidth() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x5eed);
    for _ in 0..50 {
        let a0: f64 = rng.random_range(0.0..5000.0);
        let a1: f64 = rng.random_range(0.0..300.0);
        let kp: f64 = rng.random_range(0.1..1000.0);
        let wo: f64 = rng.random_range(200.0..3000.0);
        let cert = proposition1_certify(a0, a1, kp, wo).unwrap();
        let plant = PlantModel::second_order(a0, a1, 1.0).unwrap();
        let form = closed_loop_poly_w(&plant, &AuxController::p(kp), &bandwidth_gains(wo, 2), 2, 0.75, 0.5).unwrap();
        let direct = commensurate_root_test(&form).unwrap();
        assert_eq!(cert.stable, direct.stable, "a0={a0} a1={a1} kp={kp} ω_o={wo}");
    }
}

/// At low bandwidth the boundary-polynomial certificate is not exact: this
/// lightly damped plant passes it but has a right-half-plane root.
#[test]
fn certificate_can_miss_low_bandwidth_instability() {
    let (a0, a1, kp, wo) = (3517.5, 3.7, 293.8, 43.18);
    assert!(proposition1_certify(a0, a1, kp, wo).unwrap().stable);
    let b = bandwidth_gains(wo, 2);
    let plant = PlantModel::second_order(a0, a1, 1.0).unwrap();
    let form = closed_loop_poly_w(&plant, &AuxController::p(kp), &b, 2, 0.75, 0.5).unwrap();
    let report = commensurate_root_test(&form).unwrap();
    assert!(!report.stable);
    // check the offending root on the principal sheet directly
    let w = report.worst_root().unwrap();
    let s = w.powi(8);
    let sp = |e: f64| (s.ln() * e).exp();
    let p = sp(0.75) * (a0 + a1 * s) * (kp + sp(1.5) + b[0] * sp(0.75) + b[1])
        + (sp(1.5) + kp) * (sp(2.75) + b[0] * s * s + b[1] * sp(0.75) + b[2]);
    let scale = (sp(0.75) * (a0 + a1 * s) * kp).norm();
    assert!(s.re > 0.0 && p.norm() < 1e-10 * scale);
}
