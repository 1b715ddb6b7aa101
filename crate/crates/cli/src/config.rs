//! Sectioned `key = value` run configuration.
//!
//! ```text
//! [plant]       model = second_order | pmsm; a0, a1, b (second_order)
//! [pmsm]        cm, gd2, viscous_b, ti, k1, rs, lq, ce; kv optional
//! [observer]    omega_o, gamma, b0; sample_rate, approx_order, kinds optional
//! [controller]  k_p; kind, k_d, feedforward, io_k_ip, io_k_id optional
//! [sim]         horizon, step, reference, gains, disturbance, settle_band_pct,
//!               grid_lo, grid_hi, grid_points, bracket_lo, bracket_hi,
//!               sweep_a_o, sweep_omega_o, sweep_gamma (all optional)
//! ```
//!
//! Lists are comma separated. `#` and `;` start comments.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use fadrc::adrc::AuxKind;
use fadrc::observers::ObserverKind;
use fadrc::plants::{DisturbanceSignal, PlantModel, PmsmParams};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Section {
    Plant,
    Pmsm,
    Observer,
    Controller,
    Sim,
}

impl Section {
    const ALL: [Section; 5] = [Section::Plant, Section::Pmsm, Section::Observer, Section::Controller, Section::Sim];

    fn name(self) -> &'static str {
        match self {
            Section::Plant => "plant",
            Section::Pmsm => "pmsm",
            Section::Observer => "observer",
            Section::Controller => "controller",
            Section::Sim => "sim",
        }
    }

    fn keys(self) -> &'static [&'static str] {
        match self {
            Section::Plant => &["model", "a0", "a1", "b"],
            Section::Pmsm => &["cm", "gd2", "viscous_b", "kv", "k1", "ti", "rs", "lq", "ce"],
            Section::Observer => &["omega_o", "gamma", "b0", "sample_rate", "approx_order", "kinds"],
            Section::Controller => &["kind", "k_p", "k_d", "feedforward", "io_k_ip", "io_k_id"],
            Section::Sim => &[
                "horizon",
                "step",
                "reference",
                "gains",
                "disturbance",
                "settle_band_pct",
                "grid_lo",
                "grid_hi",
                "grid_points",
                "bracket_lo",
                "bracket_hi",
                "sweep_a_o",
                "sweep_omega_o",
                "sweep_gamma",
            ],
        }
    }
}

impl fmt::Display for Section {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}]", self.name())
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: unknown section [{name}]")]
    UnknownSection { line: usize, name: String },
    #[error("line {line}: unknown key '{key}' in {section}")]
    UnknownKey { line: usize, section: Section, key: String },
    #[error("line {line}: duplicate key '{key}' in {section}")]
    Duplicate { line: usize, section: Section, key: String },
    #[error("missing required key '{key}' in {section}")]
    Missing { section: Section, key: &'static str },
    #[error("{section}: {message}")]
    Invalid { section: Section, message: String },
    #[error("{section} {key} = '{value}': {reason}")]
    BadValue { section: Section, key: &'static str, value: String, reason: String },
}

/// Raw values by section, with the line each came from.
#[derive(Debug, Default)]
struct Raw(BTreeMap<Section, BTreeMap<String, (String, usize)>>);

impl Raw {
    fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut raw = Raw::default();
        let mut current = None;
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = line.split(['#', ';']).next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| ConfigError::Syntax {
                        line: line_no,
                        message: "unterminated section header".into(),
                    })?
                    .trim();
                let section = Section::ALL
                    .into_iter()
                    .find(|s| s.name() == name)
                    .ok_or_else(|| ConfigError::UnknownSection { line: line_no, name: name.to_string() })?;
                raw.0.entry(section).or_default();
                current = Some(section);
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line: line_no,
                message: format!("expected key = value, got '{line}'"),
            })?;
            let (key, value) = (key.trim(), value.trim());
            let section = current.ok_or_else(|| ConfigError::Syntax {
                line: line_no,
                message: format!("key '{key}' before any section"),
            })?;
            if !section.keys().contains(&key) {
                return Err(ConfigError::UnknownKey { line: line_no, section, key: key.to_string() });
            }
            let entries = raw.0.entry(section).or_default();
            if entries.insert(key.to_string(), (value.to_string(), line_no)).is_some() {
                return Err(ConfigError::Duplicate { line: line_no, section, key: key.to_string() });
            }
        }
        Ok(raw)
    }

    fn has_section(&self, section: Section) -> bool {
        self.0.contains_key(&section)
    }

    fn get(&self, section: Section, key: &'static str) -> Option<&str> {
        self.0.get(&section).and_then(|m| m.get(key)).map(|(v, _)| v.as_str())
    }

    fn parsed<T: FromStr>(&self, section: Section, key: &'static str) -> Result<Option<T>, ConfigError>
    where
        T::Err: fmt::Display,
    {
        self.get(section, key)
            .map(|v| {
                v.parse::<T>().map_err(|e| ConfigError::BadValue {
                    section,
                    key,
                    value: v.to_string(),
                    reason: e.to_string(),
                })
            })
            .transpose()
    }

    fn required<T: FromStr>(&self, section: Section, key: &'static str) -> Result<T, ConfigError>
    where
        T::Err: fmt::Display,
    {
        self.parsed(section, key)?.ok_or(ConfigError::Missing { section, key })
    }

    fn list<T: FromStr>(&self, section: Section, key: &'static str) -> Result<Option<Vec<T>>, ConfigError>
    where
        T::Err: fmt::Display,
    {
        let Some(v) = self.get(section, key) else { return Ok(None) };
        v.split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|item| {
                item.parse::<T>().map_err(|e| ConfigError::BadValue {
                    section,
                    key,
                    value: v.to_string(),
                    reason: e.to_string(),
                })
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Some)
    }
}

fn bad(section: Section, key: &'static str, value: impl fmt::Display, reason: impl Into<String>) -> ConfigError {
    ConfigError::BadValue { section, key, value: value.to_string(), reason: reason.into() }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PlantSpec {
    SecondOrder { a0: f64, a1: f64, b: f64 },
    Pmsm,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObserverSpec {
    pub omega_o: f64,
    pub gamma: f64,
    pub b0: f64,
    pub sample_rate: f64,
    pub approx_order: usize,
    pub kinds: Vec<ObserverKind>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControllerSpec {
    pub kind: AuxKind,
    pub k_p: f64,
    pub k_d: Vec<f64>,
    pub feedforward: bool,
    /// PD gains for the integer-order loop; designed when absent.
    pub io_pd: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimSpec {
    pub horizon: Option<f64>,
    pub step: Option<f64>,
    pub reference: f64,
    pub gains: Option<Vec<f64>>,
    pub disturbance: DisturbanceSignal,
    pub settle_band_pct: f64,
    pub grid: (f64, f64, usize),
    pub bracket: (f64, f64),
    pub sweep_a_o: Vec<f64>,
    pub sweep_omega_o: Vec<f64>,
    pub sweep_gamma: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub plant: Option<PlantSpec>,
    pub pmsm: Option<PmsmParams>,
    pub observer: ObserverSpec,
    pub controller: ControllerSpec,
    pub sim: SimSpec,
}

impl RunConfig {
    pub fn from_text(text: &str) -> Result<Self, ConfigError> {
        let raw = Raw::parse(text)?;
        let pmsm = raw.has_section(Section::Pmsm).then(|| pmsm_params(&raw)).transpose()?;
        let plant = raw.has_section(Section::Plant).then(|| plant_spec(&raw)).transpose()?;
        if plant == Some(PlantSpec::Pmsm) && pmsm.is_none() {
            return Err(ConfigError::Missing { section: Section::Pmsm, key: "cm" });
        }
        Ok(Self {
            plant,
            pmsm,
            observer: observer_spec(&raw)?,
            controller: controller_spec(&raw)?,
            sim: sim_spec(&raw)?,
        })
    }

    pub fn load(path: &Path) -> Result<Self, crate::CliError> {
        let text =
            std::fs::read_to_string(path).map_err(|source| crate::CliError::Io { path: path.to_path_buf(), source })?;
        Ok(Self::from_text(&text)?)
    }

    /// Plant from `[plant]`, or from `[pmsm]` when `model = pmsm`.
    pub fn plant_model(&self) -> Result<PlantModel, crate::CliError> {
        match &self.plant {
            Some(PlantSpec::SecondOrder { a0, a1, b }) => Ok(PlantModel::second_order(*a0, *a1, *b)?),
            Some(PlantSpec::Pmsm) => self.pmsm_model(),
            None => Err(ConfigError::Missing { section: Section::Plant, key: "model" }.into()),
        }
    }

    pub fn pmsm_model(&self) -> Result<PlantModel, crate::CliError> {
        let p = self.pmsm.as_ref().ok_or(ConfigError::Missing { section: Section::Pmsm, key: "cm" })?;
        Ok(fadrc::plants::pmsm_speed_plant(p)?)
    }

    pub fn horizon(&self) -> Result<f64, ConfigError> {
        self.sim.horizon.ok_or(ConfigError::Missing { section: Section::Sim, key: "horizon" })
    }
}

fn plant_spec(raw: &Raw) -> Result<PlantSpec, ConfigError> {
    let s = Section::Plant;
    let model: String = raw.required(s, "model")?;
    match model.as_str() {
        "second_order" => Ok(PlantSpec::SecondOrder {
            a0: raw.parsed(s, "a0")?.unwrap_or(0.0),
            a1: raw.required(s, "a1")?,
            b: raw.required(s, "b")?,
        }),
        "pmsm" => {
            for key in ["a0", "a1", "b"] {
                if raw.get(s, key).is_some() {
                    return Err(bad(s, "model", &model, format!("'{key}' is derived from [pmsm] for this model")));
                }
            }
            Ok(PlantSpec::Pmsm)
        }
        _ => Err(bad(s, "model", &model, "expected second_order or pmsm")),
    }
}

fn pmsm_params(raw: &Raw) -> Result<PmsmParams, ConfigError> {
    let s = Section::Pmsm;
    let p = PmsmParams {
        torque_coeff_cm: raw.required(s, "cm")?,
        flywheel_gd2: raw.required(s, "gd2")?,
        viscous_b: raw.required(s, "viscous_b")?,
        speed_factor_kv: raw.parsed(s, "kv")?.unwrap_or(PmsmParams::KV),
        speed_conv_k1: raw.required(s, "k1")?,
        filter_ti: raw.required(s, "ti")?,
        phase_resistance_rs: raw.required(s, "rs")?,
        q_inductance_lq: raw.required(s, "lq")?,
        emf_coeff_ce: raw.required(s, "ce")?,
    };
    p.validate().map_err(|e| ConfigError::Invalid { section: s, message: e.to_string() })?;
    Ok(p)
}

fn observer_spec(raw: &Raw) -> Result<ObserverSpec, ConfigError> {
    let s = Section::Observer;
    let kinds = raw
        .list::<ObserverKind>(s, "kinds")?
        .unwrap_or_else(|| vec![ObserverKind::Ifo, ObserverKind::Fo, ObserverKind::Io]);
    if kinds.is_empty() {
        return Err(bad(s, "kinds", "", "at least one observer kind is needed"));
    }
    let spec = ObserverSpec {
        omega_o: raw.required(s, "omega_o")?,
        gamma: raw.required(s, "gamma")?,
        b0: raw.required(s, "b0")?,
        sample_rate: raw.parsed(s, "sample_rate")?.unwrap_or(8000.0),
        approx_order: raw.parsed(s, "approx_order")?.unwrap_or(7),
        kinds,
    };
    for (key, v) in [("omega_o", spec.omega_o), ("b0", spec.b0), ("sample_rate", spec.sample_rate)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(bad(s, key, v, "must be positive"));
        }
    }
    if !(spec.gamma > 0.0 && spec.gamma < 1.0) {
        return Err(bad(s, "gamma", spec.gamma, "must lie in (0, 1)"));
    }
    Ok(spec)
}

fn controller_spec(raw: &Raw) -> Result<ControllerSpec, ConfigError> {
    let s = Section::Controller;
    let io_pd = match (raw.parsed::<f64>(s, "io_k_ip")?, raw.parsed::<f64>(s, "io_k_id")?) {
        (Some(k), Some(d)) => Some((k, d)),
        (None, None) => None,
        (Some(_), None) => return Err(ConfigError::Missing { section: s, key: "io_k_id" }),
        (None, Some(_)) => return Err(ConfigError::Missing { section: s, key: "io_k_ip" }),
    };
    Ok(ControllerSpec {
        kind: raw.parsed(s, "kind")?.unwrap_or(AuxKind::P),
        k_p: raw.required(s, "k_p")?,
        k_d: raw.list(s, "k_d")?.unwrap_or_default(),
        feedforward: raw.parsed(s, "feedforward")?.unwrap_or(false),
        io_pd,
    })
}

fn sim_spec(raw: &Raw) -> Result<SimSpec, ConfigError> {
    let s = Section::Sim;
    let disturbance = match raw.get(s, "disturbance") {
        None => DisturbanceSignal::Zero,
        Some(v) => parse_disturbance(v).map_err(|reason| bad(s, "disturbance", v, reason))?,
    };
    let grid = (
        raw.parsed(s, "grid_lo")?.unwrap_or(10.0),
        raw.parsed(s, "grid_hi")?.unwrap_or(1e4),
        raw.parsed(s, "grid_points")?.unwrap_or(600),
    );
    let bracket = (raw.parsed(s, "bracket_lo")?.unwrap_or(1.0), raw.parsed(s, "bracket_hi")?.unwrap_or(1e4));
    Ok(SimSpec {
        horizon: raw.parsed(s, "horizon")?,
        step: raw.parsed(s, "step")?,
        reference: raw.parsed(s, "reference")?.unwrap_or(1.0),
        gains: raw.list(s, "gains")?,
        disturbance,
        settle_band_pct: raw.parsed(s, "settle_band_pct")?.unwrap_or(2.0),
        grid,
        bracket,
        sweep_a_o: raw.list(s, "sweep_a_o")?.unwrap_or_default(),
        sweep_omega_o: raw.list(s, "sweep_omega_o")?.unwrap_or_default(),
        sweep_gamma: raw.list(s, "sweep_gamma")?.unwrap_or_default(),
    })
}

/// `none`, `constant:A`, `step:A:T0` or `sin:A:W`.
fn parse_disturbance(v: &str) -> Result<DisturbanceSignal, String> {
    let parts: Vec<&str> = v.split(':').map(str::trim).collect();
    let num = |i: usize| -> Result<f64, String> {
        parts.get(i).ok_or_else(|| format!("expected {} fields", i + 1))?.parse::<f64>().map_err(|e| e.to_string())
    };
    let d = match parts[0] {
        "none" => DisturbanceSignal::Zero,
        "constant" => DisturbanceSignal::Constant(num(1)?),
        "step" => DisturbanceSignal::Step { amplitude: num(1)?, onset: num(2)? },
        "sin" => DisturbanceSignal::Sinusoid { amplitude: num(1)?, omega: num(2)? },
        other => return Err(format!("unknown disturbance '{other}' (none, constant:A, step:A:T0, sin:A:W)")),
    };
    let fields = match d {
        DisturbanceSignal::Zero => 1,
        DisturbanceSignal::Constant(_) => 2,
        _ => 3,
    };
    if parts.len() != fields {
        return Err(format!("expected {fields} fields"));
    }
    Ok(d)
}
