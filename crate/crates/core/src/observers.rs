//! Extended state observers: improved fractional (IFO), plain fractional
//! (FO) and integer-order (IO), stepped at a fixed sample rate.
//!
//! The fractional observers pass each channel's right-hand side through a
//! discrete `s^{-γ}` filter. Those filters have direct feedthrough, so every
//! sample solves a small linear system for the new state. The matrix depends
//! only on the configuration and is inverted once.
//!
//! In the IFO observer, channel `n` carries `q̂ = z_n^{(γ)} − z_n^{(ν+γ)}`
//! with `ν = m − nγ`. Substituting `q̂` turns that channel into
//! `z_n^{(ν+γ)} = z_{n+1} + b₀u + β_n e`, realized as `s^{-ν}` followed by
//! `s^{-γ}`; `q̂` is then read off as the difference between the
//! intermediate signal `z_n^{(γ)}` and the channel input.

use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Error, Result};
use crate::fracops::{iri_discretize_integral, DiscreteFilter, FractionalOrder};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ObserverKind {
    Ifo,
    Fo,
    Io,
}

impl ObserverKind {
    pub fn label(self) -> &'static str {
        match self {
            ObserverKind::Ifo => "ifo",
            ObserverKind::Fo => "fo",
            ObserverKind::Io => "io",
        }
    }
}

impl std::str::FromStr for ObserverKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ifo" => Ok(ObserverKind::Ifo),
            "fo" => Ok(ObserverKind::Fo),
            "io" => Ok(ObserverKind::Io),
            other => Err(invalid(format!("unknown observer kind '{other}' (expected ifo, fo or io)"))),
        }
    }
}

/// `[C(n+1,1)ω, C(n+1,2)ω², …, ω^{n+1}]`.
pub fn bandwidth_gains(omega_o: f64, n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    let mut binom = 1.0;
    let mut pow = 1.0;
    for i in 1..=n + 1 {
        binom = binom * (n + 2 - i) as f64 / i as f64;
        pow *= omega_o;
        out.push(binom * pow);
    }
    out
}

/// Smallest `n` with `nγ < m < (n+1)γ`, if `m/γ` is not an integer.
pub fn fractional_state_count(m: usize, gamma: f64) -> Option<usize> {
    let ratio = m as f64 / gamma;
    let n = ratio.ceil() as usize - 1;
    let ok = (n as f64) * gamma < m as f64 && (m as f64) < (n as f64 + 1.0) * gamma;
    (n >= 1 && ok).then_some(n)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObserverConfig {
    pub kind: ObserverKind,
    pub n: usize,
    pub m: usize,
    pub gamma: FractionalOrder,
    pub b0: f64,
    pub gains: Vec<f64>,
    pub sample_rate: f64,
    pub approx_order: usize,
}

impl ObserverConfig {
    /// Observer with bandwidth-parameterized gains. For the fractional kinds
    /// `n` follows from `m` and `γ`; the integer observer uses `n = m`.
    pub fn with_bandwidth(
        kind: ObserverKind,
        m: usize,
        gamma: f64,
        b0: f64,
        omega_o: f64,
        sample_rate: f64,
        approx_order: usize,
    ) -> Result<Self> {
        if !(omega_o > 0.0) || !omega_o.is_finite() {
            return Err(invalid(format!("observer bandwidth must be > 0, got {omega_o}")));
        }
        let n = match kind {
            ObserverKind::Io => m,
            _ => fractional_state_count(m, gamma)
                .ok_or_else(|| invalid(format!("no integer n with nγ < m < (n+1)γ for m = {m}, γ = {gamma}")))?,
        };
        let cfg = Self {
            kind,
            n,
            m,
            gamma: FractionalOrder::new(gamma)?,
            b0,
            gains: bandwidth_gains(omega_o, n),
            sample_rate,
            approx_order,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.m == 0 {
            return Err(invalid("observer needs n ≥ 1 and m ≥ 1"));
        }
        if self.gains.len() != self.n + 1 {
            return Err(invalid(format!("expected {} observer gains, got {}", self.n + 1, self.gains.len())));
        }
        if self.gains.iter().any(|g| !g.is_finite()) {
            return Err(invalid("observer gains must be finite"));
        }
        if !self.b0.is_finite() || self.b0 == 0.0 {
            return Err(invalid("b0 must be finite and nonzero"));
        }
        if !(self.sample_rate > 0.0) || !self.sample_rate.is_finite() {
            return Err(invalid("observer sample rate must be > 0"));
        }
        match self.kind {
            ObserverKind::Io => {
                if self.n != self.m {
                    return Err(invalid("integer-order observer requires n = m"));
                }
            }
            ObserverKind::Ifo | ObserverKind::Fo => {
                let g = self.gamma.value();
                let (n, m) = (self.n as f64, self.m as f64);
                if !(n * g < m && m < (n + 1.0) * g) {
                    return Err(invalid(format!(
                        "order constraint nγ < m < (n+1)γ violated: n = {}, m = {}, γ = {g}",
                        self.n, self.m
                    )));
                }
                if self.approx_order == 0 {
                    return Err(invalid("approximation order must be ≥ 1"));
                }
            }
        }
        Ok(())
    }

    /// `ν = m − nγ`.
    pub fn nu(&self) -> f64 {
        self.m as f64 - self.n as f64 * self.gamma.value()
    }

    /// `χ = m − nγ + γ`, the order of the second operator in `q̂`.
    pub fn chi(&self) -> f64 {
        self.nu() + self.gamma.value()
    }

    pub fn sample_period(&self) -> f64 {
        1.0 / self.sample_rate
    }

    /// Number of estimated states, `n + 1`.
    pub fn state_len(&self) -> usize {
        self.n + 1
    }
}

/// Observer outputs at one sample.
#[derive(Debug, Clone, PartialEq)]
pub struct ObserverOutput {
    pub z: Vec<f64>,
    pub q_hat: f64,
    pub f_hat: f64,
}

/// Estimate as an affine function of the control applied at this sample:
/// `z(u) = z_base + u·z_slope`, likewise for `q̂`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineEstimate {
    pub z_base: Vec<f64>,
    pub z_slope: Vec<f64>,
    pub q_base: f64,
    pub q_slope: f64,
}

impl AffineEstimate {
    pub fn at(&self, u: f64) -> ObserverOutput {
        let z: Vec<f64> = self.z_base.iter().zip(&self.z_slope).map(|(b, s)| b + u * s).collect();
        let f_hat = *z.last().unwrap_or(&0.0);
        ObserverOutput { z, q_hat: self.q_base + u * self.q_slope, f_hat }
    }
}

#[derive(Debug, Clone)]
struct FractionalEngine {
    /// One `s^{-γ}` filter per channel; in IFO, channel `n`'s filter acts on `w`.
    channels: Vec<DiscreteFilter>,
    /// `s^{-ν}` stage of the IFO channel `n`.
    nu_stage: Option<DiscreteFilter>,
    /// Inverse of the per-sample system matrix.
    inv: DMatrix<f64>,
    inv_cy: DVector<f64>,
    inv_cu: DVector<f64>,
}

#[derive(Debug, Clone)]
struct IntegerEngine {
    prev: Option<(f64, f64)>,
}

#[derive(Debug, Clone)]
enum Engine {
    Fractional(Box<FractionalEngine>),
    Integer(IntegerEngine),
}

/// Observer configuration plus its evolving state; starts at rest.
#[derive(Debug, Clone)]
pub struct ObserverState {
    config: ObserverConfig,
    engine: Engine,
    z: Vec<f64>,
    q_hat: f64,
    valid: bool,
}

impl ObserverState {
    pub fn new(config: &ObserverConfig) -> Result<Self> {
        config.validate()?;
        let engine = match config.kind {
            ObserverKind::Io => Engine::Integer(IntegerEngine { prev: None }),
            ObserverKind::Ifo | ObserverKind::Fo => Engine::Fractional(Box::new(FractionalEngine::new(config)?)),
        };
        Ok(Self { config: config.clone(), engine, z: vec![0.0; config.n + 1], q_hat: 0.0, valid: true })
    }

    pub fn config(&self) -> &ObserverConfig {
        &self.config
    }

    pub fn z(&self) -> &[f64] {
        &self.z
    }

    pub fn q_hat(&self) -> f64 {
        self.q_hat
    }

    pub fn f_hat(&self) -> f64 {
        *self.z.last().unwrap()
    }

    /// False once a non-finite input or state has been seen.
    pub fn is_valid(&self) -> bool {
        self.valid
    }

    /// Estimate at this sample given the measurement, as a function of the
    /// control `u` that will be committed. Does not change the state.
    pub fn observe(&self, y: f64) -> AffineEstimate {
        match &self.engine {
            Engine::Fractional(e) => e.observe(&self.config, y),
            Engine::Integer(e) => {
                let z = match e.prev {
                    None => self.z.clone(),
                    Some((y_prev, u_prev)) => io_integrate(&self.config, &self.z, y_prev, y, u_prev),
                };
                let n = z.len();
                AffineEstimate { z_base: z, z_slope: vec![0.0; n], q_base: 0.0, q_slope: 0.0 }
            }
        }
    }

    /// Advances one sample with measurement `y` and applied control `u`.
    pub fn commit(&mut self, u: f64, y: f64) -> ObserverOutput {
        if !u.is_finite() || !y.is_finite() {
            self.valid = false;
        }
        let out = self.observe(y).at(u);
        match &mut self.engine {
            Engine::Fractional(e) => e.advance(&self.config, &out, u, y),
            Engine::Integer(e) => e.prev = Some((y, u)),
        }
        if out.z.iter().any(|v| !v.is_finite()) || !out.q_hat.is_finite() {
            self.valid = false;
        }
        self.z.clone_from(&out.z);
        self.q_hat = out.q_hat;
        out
    }

    pub fn reset(&mut self) -> Result<()> {
        *self = Self::new(&self.config)?;
        Ok(())
    }
}

impl FractionalEngine {
    fn new(cfg: &ObserverConfig) -> Result<Self> {
        let n = cfg.n;
        let ifo = cfg.kind == ObserverKind::Ifo;
        let integ = iri_discretize_integral(cfg.gamma, cfg.sample_rate, cfg.approx_order)?;
        let nu_stage = if ifo {
            Some(iri_discretize_integral(FractionalOrder::new(cfg.nu())?, cfg.sample_rate, cfg.approx_order)?)
        } else {
            None
        };
        let h = integ.feedthrough();
        let beta = &cfg.gains;
        // unknowns: z_1..z_{n+1}, then w (IFO only)
        let dim = n + 1 + usize::from(ifo);
        let w_idx = n + 1;
        let mut m = DMatrix::<f64>::zeros(dim, dim);
        let mut cy = DVector::<f64>::zeros(dim);
        let mut cu = DVector::<f64>::zeros(dim);
        for i in 0..n - 1 {
            // z_i = S + h (z_{i+1} + β_i (y − z_1))
            m[(i, i)] += 1.0;
            m[(i, i + 1)] -= h;
            m[(i, 0)] += h * beta[i];
            cy[i] = h * beta[i];
        }
        let row = n - 1;
        m[(row, row)] += 1.0;
        if let Some(nu_f) = &nu_stage {
            // z_n = S + h w ;  w = S_ν + h_ν (z_{n+1} + b₀u + β_n (y − z_1))
            let hn = nu_f.feedthrough();
            m[(row, w_idx)] -= h;
            m[(w_idx, w_idx)] += 1.0;
            m[(w_idx, n)] -= hn;
            m[(w_idx, 0)] += hn * beta[n - 1];
            cy[w_idx] = hn * beta[n - 1];
            cu[w_idx] = hn * cfg.b0;
        } else {
            m[(row, n)] -= h;
            m[(row, 0)] += h * beta[n - 1];
            cy[row] = h * beta[n - 1];
            cu[row] = h * cfg.b0;
        }
        // z_{n+1} = S + h β_{n+1} (y − z_1)
        m[(n, n)] += 1.0;
        m[(n, 0)] += h * beta[n];
        cy[n] = h * beta[n];

        let inv = m.try_inverse().ok_or_else(|| Error::Numeric {
            message: "observer update matrix is singular".into(),
            residual: f64::NAN,
        })?;
        let inv_cy = &inv * &cy;
        let inv_cu = &inv * &cu;
        Ok(Self { channels: vec![integ; n + 1], nu_stage, inv, inv_cy, inv_cu })
    }

    fn states(&self) -> DVector<f64> {
        let dim = self.inv.nrows();
        let mut s = DVector::<f64>::zeros(dim);
        for (i, f) in self.channels.iter().enumerate() {
            s[i] = f.peek(0.0);
        }
        if let Some(f) = &self.nu_stage {
            s[dim - 1] = f.peek(0.0);
        }
        s
    }

    fn observe(&self, cfg: &ObserverConfig, y: f64) -> AffineEstimate {
        let n = cfg.n;
        let base = &self.inv * self.states() + &self.inv_cy * y;
        let slope = &self.inv_cu;
        let (q_base, q_slope) = if self.nu_stage.is_some() {
            // q̂ = w − (z_{n+1} + b₀u + β_n (y − z_1))
            let bn = cfg.gains[n - 1];
            let w = n + 1;
            (base[w] - (base[n] + bn * (y - base[0])), slope[w] - (slope[n] + cfg.b0 - bn * slope[0]))
        } else {
            (0.0, 0.0)
        };
        AffineEstimate {
            z_base: base.iter().take(n + 1).copied().collect(),
            z_slope: slope.iter().take(n + 1).copied().collect(),
            q_base,
            q_slope,
        }
    }

    fn advance(&mut self, cfg: &ObserverConfig, out: &ObserverOutput, u: f64, y: f64) {
        let n = cfg.n;
        let z = &out.z;
        let e = y - z[0];
        let beta = &cfg.gains;
        for i in 0..n - 1 {
            self.channels[i].step(z[i + 1] + beta[i] * e);
        }
        let top = z[n] + cfg.b0 * u + beta[n - 1] * e;
        match &mut self.nu_stage {
            Some(nu_f) => {
                let w = nu_f.step(top);
                self.channels[n - 1].step(w);
            }
            None => {
                self.channels[n - 1].step(top);
            }
        }
        self.channels[n].step(beta[n] * e);
    }
}

/// RK4 across one sample period with the previous control held and the
/// measurement interpolated linearly between samples.
fn io_integrate(cfg: &ObserverConfig, z0: &[f64], y_prev: f64, y: f64, u_prev: f64) -> Vec<f64> {
    let t = cfg.sample_period();
    let n = cfg.n;
    let beta = &cfg.gains;
    let rhs = |tau: f64, z: &[f64]| -> Vec<f64> {
        let yt = y_prev + (y - y_prev) * tau / t;
        let e = yt - z[0];
        let mut d = vec![0.0; n + 1];
        for i in 0..n {
            d[i] = z[i + 1] + beta[i] * e;
        }
        d[n - 1] += cfg.b0 * u_prev;
        d[n] = beta[n] * e;
        d
    };
    let axpy = |a: &[f64], k: &[f64], h: f64| -> Vec<f64> { a.iter().zip(k).map(|(x, d)| x + h * d).collect() };
    let k1 = rhs(0.0, z0);
    let k2 = rhs(0.5 * t, &axpy(z0, &k1, 0.5 * t));
    let k3 = rhs(0.5 * t, &axpy(z0, &k2, 0.5 * t));
    let k4 = rhs(t, &axpy(z0, &k3, t));
    (0..=n).map(|i| z0[i] + t / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])).collect()
}

fn step_kind(expected: ObserverKind, state: &mut ObserverState, u: f64, y: f64) -> Result<ObserverOutput> {
    if state.config.kind != expected {
        return Err(invalid(format!("observer is {}, not {}", state.config.kind.label(), expected.label())));
    }
    let out = state.commit(u, y);
    if !state.valid {
        return Err(Error::Numeric { message: "observer saw a non-finite value".into(), residual: f64::NAN });
    }
    Ok(out)
}

/// One IFO observer sample.
pub fn ifo_eso_step(state: &mut ObserverState, u: f64, y: f64) -> Result<ObserverOutput> {
    step_kind(ObserverKind::Ifo, state, u, y)
}

/// One FO observer sample; `q_hat` is always zero.
pub fn fo_eso_step(state: &mut ObserverState, u: f64, y: f64) -> Result<ObserverOutput> {
    step_kind(ObserverKind::Fo, state, u, y)
}

/// One IO observer sample.
pub fn io_eso_step(state: &mut ObserverState, u: f64, y: f64) -> Result<ObserverOutput> {
    step_kind(ObserverKind::Io, state, u, y)
}
