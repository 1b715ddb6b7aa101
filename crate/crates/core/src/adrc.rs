//! Control laws built on observer estimates: the disturbance-cancelling
//! law, auxiliary tracking controllers and crossover-matching PD design.

use crate::error::{invalid, Error, Result};
use crate::freqanal::{eval_fotf, FoPoly, FoTransferFunction};
use crate::observers::{AffineEstimate, ObserverConfig, ObserverKind, ObserverOutput};
use crate::plants::PlantModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AuxKind {
    P,
    Pd,
    FullState,
}

impl std::str::FromStr for AuxKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "p" => Ok(AuxKind::P),
            "pd" => Ok(AuxKind::Pd),
            "full" | "full_state" | "fullstate" => Ok(AuxKind::FullState),
            other => Err(invalid(format!("unknown controller kind '{other}' (expected p, pd or full_state)"))),
        }
    }
}

/// `u₀ = k_p(r − z₁) + Σ k_{dᵢ}(r^{(i)} − z₁^{(i)}) [+ r^{(nγ)}]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AuxController {
    kind: AuxKind,
    k_p: f64,
    k_d: Vec<f64>,
    reference_feedforward: bool,
}

impl AuxController {
    pub fn p(k_p: f64) -> Self {
        Self { kind: AuxKind::P, k_p, k_d: Vec::new(), reference_feedforward: false }
    }

    /// `K_ip(1 + K_id s)`.
    pub fn pd(k_ip: f64, k_id: f64) -> Self {
        Self { kind: AuxKind::Pd, k_p: k_ip, k_d: vec![k_ip * k_id], reference_feedforward: false }
    }

    /// Full-state law with explicit derivative gains.
    pub fn full_state(k_p: f64, k_d: Vec<f64>, reference_feedforward: bool) -> Self {
        Self { kind: AuxKind::FullState, k_p, k_d, reference_feedforward }
    }

    pub fn new(kind: AuxKind, k_p: f64, k_d: Vec<f64>, reference_feedforward: bool) -> Result<Self> {
        match kind {
            AuxKind::P if !k_d.is_empty() => return Err(invalid("P controller takes no derivative gains")),
            AuxKind::Pd if k_d.len() != 1 => return Err(invalid("PD controller takes exactly one derivative gain")),
            _ => {}
        }
        if !k_p.is_finite() || k_d.iter().any(|k| !k.is_finite()) {
            return Err(invalid("controller gains must be finite"));
        }
        Ok(Self { kind, k_p, k_d, reference_feedforward })
    }

    pub fn kind(&self) -> AuxKind {
        self.kind
    }

    pub fn k_p(&self) -> f64 {
        self.k_p
    }

    pub fn k_d(&self) -> &[f64] {
        &self.k_d
    }

    pub fn reference_feedforward(&self) -> bool {
        self.reference_feedforward
    }

    /// `(K_ip, K_id)` of a PD controller.
    pub fn pd_parameters(&self) -> Option<(f64, f64)> {
        (self.kind == AuxKind::Pd).then(|| (self.k_p, self.k_d[0] / self.k_p))
    }

    /// Number of tuning gains.
    pub fn gain_count(&self) -> usize {
        1 + self.k_d.len()
    }

    /// Scales the proportional gain; for PD the whole `K_ip(1 + K_id s)`.
    pub fn scaled(&self, k: f64) -> Self {
        let mut out = self.clone();
        out.k_p *= k;
        if self.kind == AuxKind::Pd {
            out.k_d.iter_mut().for_each(|d| *d *= k);
        }
        out
    }

    /// `C(s) = k_p + Σ k_{dᵢ} sⁱ`.
    pub fn transfer_function(&self) -> Result<FoTransferFunction> {
        let mut terms = vec![(self.k_p, 0.0)];
        for (i, k) in self.k_d.iter().enumerate() {
            terms.push((*k, (i + 1) as f64));
        }
        FoTransferFunction::new(FoPoly::from_terms(terms), FoPoly::constant(1.0))
    }
}

/// Gains a tracking law needs for a plant of order `m`: the fractional
/// observers cancel `m − 1` integer derivative terms, the integer observer
/// one fewer.
pub fn aux_gain_count(kind: ObserverKind, m: usize) -> usize {
    match kind {
        ObserverKind::Io => m,
        ObserverKind::Ifo | ObserverKind::Fo => m.saturating_sub(1).max(1),
    }
}

/// `(u₀ − q̂ − f̂)/b₀`.
pub fn adrc_control(u0: f64, q_hat: f64, f_hat: f64, b0: f64) -> f64 {
    (u0 - q_hat - f_hat) / b0
}

/// Tracking law output.
///
/// `r_derivatives = [r, ṙ, …]` and `z1_derivatives = [z₁, ż₁, …]` must
/// cover every derivative gain. With feedforward enabled, `r^{(nγ)}` is
/// taken from the element after the integer derivatives.
pub fn aux_output(aux: &AuxController, r_derivatives: &[f64], z1_derivatives: &[f64]) -> Result<f64> {
    let need = 1 + aux.k_d.len();
    let r_need = need + usize::from(aux.reference_feedforward);
    if r_derivatives.len() < r_need || z1_derivatives.len() < need {
        return Err(invalid(format!(
            "controller needs {r_need} reference and {need} output derivatives, got {} and {}",
            r_derivatives.len(),
            z1_derivatives.len()
        )));
    }
    let mut u0 = aux.k_p * (r_derivatives[0] - z1_derivatives[0]);
    for (i, k) in aux.k_d.iter().enumerate() {
        u0 += k * (r_derivatives[i + 1] - z1_derivatives[i + 1]);
    }
    if aux.reference_feedforward {
        u0 += r_derivatives[need];
    }
    Ok(u0)
}

/// Estimates of `[z₁, ż₁, …]` up to order `count − 1`.
///
/// The integer observer's first derivative is exact from its own dynamics.
/// Otherwise `z_{i+1}` stands in for the `i`-th derivative; for the
/// fractional observers it estimates `y^{(iγ)}`, which is only close to
/// `y^{(i)}` as `γ → 1`.
pub fn z1_derivatives(cfg: &ObserverConfig, out: &ObserverOutput, y: f64, count: usize) -> Vec<f64> {
    let z = &out.z;
    (0..count)
        .map(|i| match i {
            0 => z[0],
            1 if cfg.kind == ObserverKind::Io => z[1] + cfg.gains[0] * (y - z[0]),
            _ => z.get(i).copied().unwrap_or(0.0),
        })
        .collect()
}

/// Plant, observer and tracking law.
#[derive(Debug, Clone, PartialEq)]
pub struct AdrcLoop {
    pub plant: PlantModel,
    pub observer: ObserverConfig,
    pub aux: AuxController,
    pub b0: f64,
}

impl AdrcLoop {
    pub fn new(plant: PlantModel, observer: ObserverConfig, aux: AuxController) -> Result<Self> {
        let b0 = observer.b0;
        let lp = Self { plant, observer, aux, b0 };
        lp.validate()?;
        Ok(lp)
    }

    pub fn validate(&self) -> Result<()> {
        self.observer.validate()?;
        if self.observer.b0 != self.b0 {
            return Err(invalid("observer b0 differs from loop b0"));
        }
        if self.observer.m != self.plant.order() {
            return Err(invalid(format!(
                "observer plant order {} differs from plant order {}",
                self.observer.m,
                self.plant.order()
            )));
        }
        Ok(())
    }

    /// Copy with the tracking gain scaled by `k`.
    pub fn with_gain_scale(&self, k: f64) -> Self {
        Self { aux: self.aux.scaled(k), ..self.clone() }
    }

    /// Solves the control law for this sample. The estimate depends
    /// affinely on `u` through the observer's direct feedthrough, so the
    /// implicit law `b₀u = u₀(u) − q̂(u) − f̂(u)` is solved exactly.
    pub fn solve_control(&self, est: &AffineEstimate, r_derivatives: &[f64], y: f64) -> Result<ControlSolution> {
        let need = 1 + self.aux.k_d.len();
        let residual = |u: f64| -> Result<(f64, f64, ObserverOutput)> {
            let out = est.at(u);
            let zd = z1_derivatives(&self.observer, &out, y, need);
            let u0 = aux_output(&self.aux, r_derivatives, &zd)?;
            Ok((self.b0 * u - (u0 - out.q_hat - out.f_hat), u0, out))
        };
        let (r0, _, _) = residual(0.0)?;
        let (r1, _, _) = residual(1.0)?;
        let slope = r1 - r0;
        if slope == 0.0 || !slope.is_finite() {
            return Err(Error::Numeric { message: "control law is singular in u".into(), residual: slope });
        }
        let u = -r0 / slope;
        let (_, u0, out) = residual(u)?;
        Ok(ControlSolution { u, u0, estimate: out })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControlSolution {
    pub u: f64,
    pub u0: f64,
    pub estimate: ObserverOutput,
}

/// PD gains placing the crossover of `C_pd·G` at `target_wc` with margin
/// `target_pm_deg`. `open_loop` is the loop with a unity controller.
pub fn match_crossover_design(
    open_loop: &FoTransferFunction,
    target_wc: f64,
    target_pm_deg: f64,
) -> Result<AuxController> {
    if !(target_wc > 0.0) || !target_wc.is_finite() {
        return Err(invalid(format!("target crossover must be > 0, got {target_wc}")));
    }
    let g = eval_fotf(open_loop, target_wc)?;
    let mut lead = -180.0 + target_pm_deg - g.arg().to_degrees();
    lead = (lead + 180.0).rem_euclid(360.0) - 180.0;
    if lead.abs() < 1e-9 {
        lead = 0.0;
    }
    if !(0.0..90.0).contains(&lead) {
        return Err(Error::InfeasibleDesign { required_lead_deg: lead });
    }
    let k_id = lead.to_radians().tan() / target_wc;
    let k_ip = 1.0 / (g * num_complex::Complex64::new(1.0, target_wc * k_id)).norm();
    Ok(AuxController::pd(k_ip, k_id))
}
