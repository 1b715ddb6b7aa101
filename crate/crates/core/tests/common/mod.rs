#![allow(dead_code)]

use fadrc::adrc::{AdrcLoop, AuxController};
use fadrc::freqanal::LoopModel;
use fadrc::observers::{ObserverConfig, ObserverKind};
use fadrc::plants::{example_plant, pmsm_numeric_plant, PlantModel};

pub const AO: f64 = 26.08;
pub const B0: f64 = 383.635;
pub const WO: f64 = 700.0;
pub const GAMMA: f64 = 0.75;
pub const K_FP: f64 = 356.0;
pub const K_IP: f64 = 1559.83;
pub const K_ID: f64 = 0.0199;
pub const FS: f64 = 8000.0;
pub const N_APPROX: usize = 7;

pub const PMSM_B: f64 = 2380.9;
pub const PMSM_K_FP: f64 = 750.0;
pub const PMSM_K_IP: f64 = 2314.69;
pub const PMSM_K_ID: f64 = 0.0185;

pub fn observer(kind: ObserverKind, b0: f64) -> ObserverConfig {
    ObserverConfig::with_bandwidth(kind, 2, GAMMA, b0, WO, FS, N_APPROX).unwrap()
}

fn build(plant: PlantModel, b0: f64, kind: ObserverKind, k_fp: f64, pd: (f64, f64)) -> AdrcLoop {
    let aux = match kind {
        ObserverKind::Io => AuxController::pd(pd.0, pd.1),
        _ => AuxController::p(k_fp),
    };
    AdrcLoop::new(plant, observer(kind, b0), aux).unwrap()
}

/// Integrator-type example loop at nominal gains.
pub fn nominal_loop(kind: ObserverKind) -> AdrcLoop {
    build(example_plant(), B0, kind, K_FP, (K_IP, K_ID))
}

/// Example loop whose true plant gain differs from `b0`.
pub fn mismatched_loop(kind: ObserverKind, ratio: f64) -> AdrcLoop {
    build(example_plant().with_gain(ratio * B0).unwrap(), B0, kind, K_FP, (K_IP, K_ID))
}

pub fn pmsm_loop(kind: ObserverKind) -> AdrcLoop {
    build(pmsm_numeric_plant(), PMSM_B, kind, PMSM_K_FP, (PMSM_K_IP, PMSM_K_ID))
}

pub fn nominal_model() -> LoopModel {
    LoopModel::bandwidth(0.0, AO, B0, B0, WO, GAMMA).unwrap()
}

pub fn pmsm_model() -> LoopModel {
    LoopModel::bandwidth(3819.7, 138.1, PMSM_B, PMSM_B, WO, GAMMA).unwrap()
}

pub fn rms_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    (a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / a.len() as f64).sqrt()
}
