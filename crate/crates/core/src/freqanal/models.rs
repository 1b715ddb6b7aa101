//! Closed-form loop models for a second-order plant `b/(s² + a₁s + a₀)`
//! with a three-state extended observer (`n = m = 2`).
//!
//! Two families are provided. The `build_*` functions reproduce the
//! closed-form expressions for the integrator-type plant `b/(s(s + a_o))`
//! with bandwidth gains. The [`LoopModel`] methods derive the same
//! quantities for arbitrary `a₀, a₁, b, b₀` and gains.

use super::{FoPoly, FoTransferFunction};
use crate::adrc::AuxController;
use crate::error::{invalid, Result};
use crate::observers::{bandwidth_gains, ObserverKind};

fn p(terms: &[(f64, f64)]) -> FoPoly {
    FoPoly::from_terms(terms.to_vec())
}

fn tf(num: FoPoly, den: FoPoly) -> FoTransferFunction {
    FoTransferFunction { numerator: num, denominator: den }
}

/// `s^{2+γ} + 3ω s² + 3ω² s^γ + ω³`.
fn ifo_observer_den(w: f64, g: f64) -> FoPoly {
    p(&[(1.0, 2.0 + g), (3.0 * w, 2.0), (3.0 * w * w, g), (w * w * w, 0.0)])
}

/// `s^{2γ} + 3ω s^γ + 3ω²`.
fn quad(w: f64, g: f64) -> FoPoly {
    p(&[(1.0, 2.0 * g), (3.0 * w, g), (3.0 * w * w, 0.0)])
}

/// Closed-form `Y/U₀` for the IFO-compensated integrator-type plant.
pub fn build_p_ifo(a_o: f64, b: f64, b0: f64, omega_o: f64, gamma: f64) -> FoTransferFunction {
    let (w, g) = (omega_o, gamma);
    let n1 = ifo_observer_den(w, g).scale(b);
    let d1 = p(&[(-3.0, 2.0), (3.0, 2.0 * g), (w, g)])
        .shift(g)
        .scale(b * w * w)
        .add(&quad(w, g).shift(1.0 + g).scale(a_o * b0))
        .add(&quad(w, g).shift(2.0 + g).scale(b0));
    tf(n1, d1)
}

/// Closed-form `Y/U₀` for the FO-compensated integrator-type plant.
///
/// This expression is exact only for `b = b₀`; with a gain mismatch
/// the first denominator term should carry `b₀`. See
/// [`LoopModel::p_fo`] for the general form.
pub fn build_p_fo(a_o: f64, b: f64, b0: f64, omega_o: f64, gamma: f64) -> FoTransferFunction {
    let (w, g) = (omega_o, gamma);
    let cube = p(&[(1.0, g), (w, 0.0)]).pow(3);
    let n2 = cube.scale(b);
    let d2 = p(&[(1.0, 2.0), (a_o, 1.0)])
        .mul(&cube)
        .scale(b)
        .add(&p(&[(b, 2.0 * g), (-b0, 2.0), (-a_o * b0, 1.0)]).scale(w * w * w));
    tf(n2, d2)
}

/// Closed-form approximation error of the IFO model, as a function of `s`.
pub fn build_delta_ifo(a_o: f64, omega_o: f64, gamma: f64) -> FoTransferFunction {
    let (w, g) = (omega_o, gamma);
    let n3 = quad(w, g).shift(1.0).scale(a_o);
    let d3 = n3.add(&ifo_observer_den(w, g).shift(g));
    tf(n3, d3)
}

/// Closed-form approximation error of the FO model, as a function of `s`.
pub fn build_delta_fo(a_o: f64, omega_o: f64, gamma: f64) -> FoTransferFunction {
    let (w, g) = (omega_o, gamma);
    let w3 = w * w * w;
    let cube = p(&[(1.0, g), (w, 0.0)]).pow(3);
    let mixed = p(&[(a_o, 1.0), (1.0, 2.0)]).mul(&quad(w, g));
    let n4 = FoPoly::term(w3, g).sub(&cube.shift(g)).add(&mixed);
    let d4 = FoPoly::term(w3, g).add(&mixed);
    tf(n4, d4)
}

/// Closed-form `Z₁/Y` of the IFO observer on the integrator-type plant.
pub fn z1_over_y_printed(a_o: f64, omega_o: f64, gamma: f64) -> FoTransferFunction {
    let (w, g) = (omega_o, gamma);
    let den = ifo_observer_den(w, g);
    tf(den.add(&FoPoly::term(a_o, 1.0 + g)), den)
}

/// Closed-form `Y/U₀` of the IO-compensated integrator-type plant.
pub fn p_io_printed(a_o: f64, omega_o: f64) -> FoTransferFunction {
    let cube = p(&[(1.0, 1.0), (omega_o, 0.0)]).pow(3);
    let den = p(&[(1.0, 2.0), (a_o, 1.0)]).mul(&cube).add(&FoPoly::term(-a_o * omega_o.powi(3), 1.0));
    tf(cube, den)
}

/// Closed-form `Z₁/Y` of the IO observer on the integrator-type plant.
pub fn z1_over_y_io_printed(a_o: f64, omega_o: f64) -> FoTransferFunction {
    let w = omega_o;
    let den = p(&[(1.0, 1.0), (w, 0.0)]).pow(3);
    let num = p(&[(1.0, 3.0), (3.0 * w + a_o, 2.0), (3.0 * w * w, 1.0), (w * w * w, 0.0)]);
    tf(num, den)
}

/// `Δ = 1 − s^{2γ}P`, formed symbolically.
pub fn delta_from_p(p: &FoTransferFunction, gamma: f64) -> FoTransferFunction {
    tf(p.denominator.sub(&p.numerator.shift(2.0 * gamma)), p.denominator.clone())
}

/// Second-order plant with a three-state observer and arbitrary gains.
#[derive(Debug, Clone, PartialEq)]
pub struct LoopModel {
    pub a0: f64,
    pub a1: f64,
    pub b: f64,
    pub b0: f64,
    pub betas: [f64; 3],
    pub gamma: f64,
}

impl LoopModel {
    pub fn new(a0: f64, a1: f64, b: f64, b0: f64, betas: [f64; 3], gamma: f64) -> Result<Self> {
        if b == 0.0 || b0 == 0.0 {
            return Err(invalid("plant and nominal gains must be nonzero"));
        }
        if !(gamma > 0.0) {
            return Err(invalid("γ must be > 0"));
        }
        if [a0, a1, b, b0, gamma].iter().chain(&betas).any(|v| !v.is_finite()) {
            return Err(invalid("loop model parameters must be finite"));
        }
        Ok(Self { a0, a1, b, b0, betas, gamma })
    }

    /// Bandwidth-parameterized gains `[3ω, 3ω², ω³]`.
    pub fn bandwidth(a0: f64, a1: f64, b: f64, b0: f64, omega_o: f64, gamma: f64) -> Result<Self> {
        let g = bandwidth_gains(omega_o, 2);
        Self::new(a0, a1, b, b0, [g[0], g[1], g[2]], gamma)
    }

    fn k(&self) -> f64 {
        self.b0 / self.b
    }

    fn dp(&self) -> FoPoly {
        p(&[(1.0, 2.0), (self.a1, 1.0), (self.a0, 0.0)])
    }

    /// Observer characteristic polynomial, orders by kind.
    fn observer_den(&self, kind: ObserverKind) -> FoPoly {
        let g = self.gamma;
        let [b1, b2, b3] = self.betas;
        match kind {
            ObserverKind::Ifo => p(&[(1.0, 2.0 + g), (b1, 2.0), (b2, g), (b3, 0.0)]),
            ObserverKind::Fo => p(&[(1.0, 3.0 * g), (b1, 2.0 * g), (b2, g), (b3, 0.0)]),
            ObserverKind::Io => p(&[(1.0, 3.0), (b1, 2.0), (b2, 1.0), (b3, 0.0)]),
        }
    }

    fn observer_y_num(&self, kind: ObserverKind) -> FoPoly {
        let g = self.gamma;
        let [b1, b2, b3] = self.betas;
        match kind {
            ObserverKind::Ifo => p(&[(b1, 2.0), (b2, g), (b3, 0.0)]),
            ObserverKind::Fo => p(&[(b1, 2.0 * g), (b2, g), (b3, 0.0)]),
            ObserverKind::Io => p(&[(b1, 2.0), (b2, 1.0), (b3, 0.0)]),
        }
    }

    fn unit_order(&self, kind: ObserverKind) -> f64 {
        if kind == ObserverKind::Io {
            1.0
        } else {
            self.gamma
        }
    }

    /// `Z₁/Y` with the plant relation substituted for `U`.
    pub fn z1_over_y(&self, kind: ObserverKind) -> FoTransferFunction {
        let num = self.observer_y_num(kind).add(&self.dp().shift(self.unit_order(kind)).scale(self.k()));
        tf(num, self.observer_den(kind))
    }

    /// `Y/U₀` of the compensated plant.
    pub fn p(&self, kind: ObserverKind) -> FoTransferFunction {
        match kind {
            ObserverKind::Ifo => self.p_ifo(),
            ObserverKind::Fo => self.p_fo(),
            ObserverKind::Io => self.p_io(),
        }
    }

    pub fn p_ifo(&self) -> FoTransferFunction {
        let g = self.gamma;
        let [b1, b2, b3] = self.betas;
        let dobs = self.observer_den(ObserverKind::Ifo);
        // β₂(s^{3γ} − s^{2+γ}) + β₃s^{2γ} + k·Dp·s^γ(s^{2γ} + β₁s^γ + β₂)
        let den = p(&[(b2, 3.0 * g), (-b2, 2.0 + g), (b3, 2.0 * g)])
            .add(&self.dp().mul(&p(&[(1.0, 3.0 * g), (b1, 2.0 * g), (b2, g)])).scale(self.k()));
        tf(dobs, den)
    }

    pub fn p_fo(&self) -> FoTransferFunction {
        self.p_commensurate(ObserverKind::Fo, self.gamma)
    }

    pub fn p_io(&self) -> FoTransferFunction {
        self.p_commensurate(ObserverKind::Io, 1.0)
    }

    fn p_commensurate(&self, kind: ObserverKind, g: f64) -> FoTransferFunction {
        let d = self.observer_den(kind);
        let kdp = self.dp().scale(self.k());
        let den = kdp.mul(&d).add(&FoPoly::term(1.0, 2.0 * g).sub(&kdp).scale(self.betas[2]));
        tf(d, den)
    }

    /// Approximation error `1 − s^{2γ}P` of the IFO or FO model.
    pub fn delta(&self, kind: ObserverKind) -> FoTransferFunction {
        delta_from_p(&self.p(kind), self.unit_order(kind))
    }
}

/// `C(s)·P(s)·Z₁(s)/Y(s)` with `C` the auxiliary controller.
pub fn open_loop(model: &LoopModel, kind: ObserverKind, aux: &AuxController) -> Result<FoTransferFunction> {
    let c = aux.transfer_function()?;
    Ok(c.mul(&model.p(kind)).mul(&model.z1_over_y(kind)))
}

/// `K_fp·P_ifo·Z₁/Y`.
pub fn open_loop_ifo(model: &LoopModel, k_fp: f64) -> FoTransferFunction {
    model.p_ifo().mul(&model.z1_over_y(ObserverKind::Ifo)).scale(k_fp)
}

/// `K_ip(1 + K_id s)·P_io·Z₁/Y`.
pub fn open_loop_io(model: &LoopModel, k_ip: f64, k_id: f64) -> FoTransferFunction {
    let c = tf(p(&[(k_ip * k_id, 1.0), (k_ip, 0.0)]), FoPoly::constant(1.0));
    c.mul(&model.p_io()).mul(&model.z1_over_y(ObserverKind::Io))
}
