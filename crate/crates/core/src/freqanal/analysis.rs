use std::fmt::Write as _;

use super::{eval_fotf, FoTransferFunction, LoopModel};
use crate::error::{invalid, Error, Result};
use crate::observers::ObserverKind;
use crate::par::Strategy;

/// `n` log-spaced points over `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi > lo) || !hi.is_finite() {
        return Err(invalid(format!("grid needs 0 < lo < hi, got [{lo}, {hi}]")));
    }
    if n < 2 {
        return Err(invalid("grid needs at least two points"));
    }
    let (l, h) = (lo.log10(), hi.log10());
    Ok((0..n).map(|i| 10f64.powf(l + (h - l) * i as f64 / (n - 1) as f64)).collect())
}

/// 600 points over `[1e-1, 1e5]` rad/s.
pub fn default_grid() -> Vec<f64> {
    log_grid(1e-1, 1e5, 600).expect("static grid")
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(invalid("empty frequency grid"));
    }
    if grid.iter().any(|w| !(*w > 0.0)) || grid.windows(2).any(|p| p[1] <= p[0]) {
        return Err(invalid("frequency grid must be positive and strictly ascending"));
    }
    Ok(())
}

fn unwrap_deg(raw: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(raw.len());
    let mut offset = 0.0;
    for (i, &p) in raw.iter().enumerate() {
        if i > 0 {
            let prev = raw[i - 1];
            let d = p - prev;
            if d > 180.0 {
                offset -= 360.0;
            } else if d < -180.0 {
                offset += 360.0;
            }
        }
        out.push(p + offset);
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct BodeCurve {
    pub omegas: Vec<f64>,
    pub mag_db: Vec<f64>,
    pub phase_deg: Vec<f64>,
}

impl BodeCurve {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("omega_rad_s,mag_db,phase_deg\n");
        for i in 0..self.omegas.len() {
            let _ = writeln!(s, "{},{},{}", self.omegas[i], self.mag_db[i], self.phase_deg[i]);
        }
        s
    }
}

pub fn bode_curve(tf: &FoTransferFunction, grid: &[f64]) -> Result<BodeCurve> {
    bode_curve_with(Strategy::default(), tf, grid)
}

/// Magnitude (dB) and unwrapped phase (deg) on an ascending grid.
pub fn bode_curve_with(strategy: Strategy, tf: &FoTransferFunction, grid: &[f64]) -> Result<BodeCurve> {
    check_grid(grid)?;
    let vals = strategy.map_slice(grid, |&w| eval_fotf(tf, w));
    let vals: Vec<_> = vals.into_iter().collect::<Result<_>>()?;
    let mag_db = vals.iter().map(|z| 20.0 * z.norm().log10()).collect();
    let raw: Vec<f64> = vals.iter().map(|z| z.arg().to_degrees()).collect();
    Ok(BodeCurve { omegas: grid.to_vec(), mag_db, phase_deg: unwrap_deg(&raw) })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Crossover {
    pub omega_c: f64,
    pub phase_margin_deg: f64,
}

const SCAN_POINTS: usize = 2000;

/// Gain crossover and phase margin of an open loop inside `bracket`.
///
/// The bracket is scanned for sign changes of `log|G|`; exactly one is
/// required. The crossing is refined by bisection in `log ω` and the phase
/// is unwrapped along the scan from the lower bracket end.
pub fn crossover_and_margin(tf: &FoTransferFunction, bracket: (f64, f64)) -> Result<Crossover> {
    let grid = log_grid(bracket.0, bracket.1, SCAN_POINTS)?;
    let logmag = |w: f64| -> Result<f64> { Ok(eval_fotf(tf, w)?.norm().ln()) };
    let mags: Vec<f64> = grid.iter().map(|&w| logmag(w)).collect::<Result<_>>()?;
    let mut crossings = Vec::new();
    for i in 0..grid.len() - 1 {
        if (mags[i] > 0.0) != (mags[i + 1] > 0.0) {
            crossings.push(i);
        }
    }
    if crossings.len() != 1 || (mags[0] > 0.0) == (mags[mags.len() - 1] > 0.0) {
        return Err(Error::Bracket { crossings: crossings.iter().map(|&i| (grid[i] * grid[i + 1]).sqrt()).collect() });
    }
    let i = crossings[0];
    let (mut lo, mut hi) = (grid[i], grid[i + 1]);
    let lo_positive = mags[i] > 0.0;
    while (hi - lo) > 1e-12 * hi {
        let mid = (lo * hi).sqrt();
        if (logmag(mid)? > 0.0) == lo_positive {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let omega_c = (lo * hi).sqrt();

    let mut raw: Vec<f64> =
        grid[..=i].iter().map(|&w| eval_fotf(tf, w).map(|z| z.arg().to_degrees())).collect::<Result<_>>()?;
    raw.push(eval_fotf(tf, omega_c)?.arg().to_degrees());
    let phase = *unwrap_deg(&raw).last().unwrap();
    Ok(Crossover { omega_c, phase_margin_deg: 180.0 + phase })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MseCurve {
    pub omegas: Vec<f64>,
    pub values: Vec<f64>,
}

pub fn mse_curve(model: &LoopModel, kind: ObserverKind, grid: &[f64]) -> Result<MseCurve> {
    mse_curve_with(Strategy::default(), model, kind, grid)
}

/// `e(ω) = |1 − (jω)^{2γ}P(jω)|²` on the grid.
pub fn mse_curve_with(strategy: Strategy, model: &LoopModel, kind: ObserverKind, grid: &[f64]) -> Result<MseCurve> {
    check_grid(grid)?;
    let delta = model.delta(kind);
    let values =
        strategy.map_slice(grid, |&w| eval_fotf(&delta, w).map(|z| z.norm_sqr())).into_iter().collect::<Result<_>>()?;
    Ok(MseCurve { omegas: grid.to_vec(), values })
}

/// IFO and FO error curves on a shared grid.
#[derive(Debug, Clone, PartialEq)]
pub struct MseTable {
    pub omegas: Vec<f64>,
    pub e_ifo: Vec<f64>,
    pub e_fo: Vec<f64>,
}

impl MseTable {
    pub fn compute(strategy: Strategy, model: &LoopModel, grid: &[f64]) -> Result<Self> {
        let ifo = mse_curve_with(strategy, model, ObserverKind::Ifo, grid)?;
        let fo = mse_curve_with(strategy, model, ObserverKind::Fo, grid)?;
        Ok(Self { omegas: ifo.omegas, e_ifo: ifo.values, e_fo: fo.values })
    }

    /// Grid points where `e_ifo > e_fo + tol`.
    pub fn ordering_violations(&self, tol: f64) -> Vec<f64> {
        (0..self.omegas.len()).filter(|&i| self.e_ifo[i] > self.e_fo[i] + tol).map(|i| self.omegas[i]).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("omega_rad_s,e_ifo,e_fo\n");
        for i in 0..self.omegas.len() {
            let _ = writeln!(s, "{},{},{}", self.omegas[i], self.e_ifo[i], self.e_fo[i]);
        }
        s
    }
}
