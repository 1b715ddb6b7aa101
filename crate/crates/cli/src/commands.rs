use std::fmt::Write as _;

use fadrc::adrc::{match_crossover_design, AdrcLoop, AuxController, AuxKind};
use fadrc::freqanal::{
    bode_curve, crossover_and_margin, log_grid, open_loop, open_loop_io, BodeCurve, Crossover, LoopModel, MseTable,
};
use fadrc::observers::{ObserverConfig, ObserverKind};
use fadrc::par::Strategy;
use fadrc::plants::PlantModel;
use fadrc::simkit::{gain_sweep, overshoot_fluctuation, simulate, step_metrics, Reference, SimulationTrace};
use fadrc::stability::{closed_loop_poly_w, commensurate_root_test, kharitonov_eso_check, proposition1_certify};

use crate::config::RunConfig;
use crate::output::{tag, OutDir};
use crate::plot::{line_plot, Axes, Series};
use crate::CliError;

/// Shared state for one command run. Recoverable failures are collected
/// so the remaining outputs are still written.
pub struct Run<'a> {
    pub cfg: &'a RunConfig,
    pub out: OutDir,
    pub plots: bool,
    pub failures: Vec<String>,
}

impl Run<'_> {
    fn fail(&mut self, what: &str, err: impl std::fmt::Display) {
        self.failures.push(format!("{what}: {err}"));
    }

    fn plot(&mut self, name: &str, axes: Axes<'_>, series: &[Series<'_>]) -> Result<(), CliError> {
        if self.plots {
            let svg = line_plot(axes, series)?;
            self.out.write(name, &svg)?;
        }
        Ok(())
    }

    fn loop_model(&self, plant: &PlantModel) -> Result<LoopModel, CliError> {
        if plant.order() != 2 {
            return Err(CliError::Unsupported(format!(
                "frequency-domain loop models need a second-order plant, got order {}",
                plant.order()
            )));
        }
        let o = &self.cfg.observer;
        Ok(LoopModel::bandwidth(plant.a(0), plant.a(1), plant.gain(), o.b0, o.omega_o, o.gamma)?)
    }

    /// Tracking law of the fractional loops.
    fn fractional_aux(&self) -> Result<AuxController, CliError> {
        let c = &self.cfg.controller;
        Ok(AuxController::new(c.kind, c.k_p, c.k_d.clone(), c.feedforward)?)
    }

    fn ifo_crossover(&self, model: &LoopModel) -> Result<Crossover, CliError> {
        let tf = open_loop(model, ObserverKind::Ifo, &self.fractional_aux()?)?;
        Ok(crossover_and_margin(&tf, self.cfg.sim.bracket)?)
    }

    /// Configured PD gains of the integer-order loop, or a design that
    /// matches the IFO loop's crossover and margin.
    fn io_pd(&self, plant: &PlantModel) -> Result<(f64, f64), CliError> {
        if let Some(pd) = self.cfg.controller.io_pd {
            return Ok(pd);
        }
        let model = self.loop_model(plant)?;
        let target = self.ifo_crossover(&model)?;
        let plant_only = open_loop(&model, ObserverKind::Io, &AuxController::p(1.0))?;
        let pd = match_crossover_design(&plant_only, target.omega_c, target.phase_margin_deg)?;
        Ok(pd.pd_parameters().expect("design returns a PD law"))
    }

    fn observer(&self, kind: ObserverKind, m: usize) -> Result<ObserverConfig, CliError> {
        let o = &self.cfg.observer;
        Ok(ObserverConfig::with_bandwidth(kind, m, o.gamma, o.b0, o.omega_o, o.sample_rate, o.approx_order)?)
    }

    fn adrc_loop(&self, kind: ObserverKind, plant: &PlantModel) -> Result<AdrcLoop, CliError> {
        let aux = match kind {
            ObserverKind::Io => {
                let (k_ip, k_id) = self.io_pd(plant)?;
                AuxController::pd(k_ip, k_id)
            }
            _ => self.fractional_aux()?,
        };
        Ok(AdrcLoop::new(plant.clone(), self.observer(kind, plant.order())?, aux)?)
    }
}

fn grid(cfg: &RunConfig) -> Result<Vec<f64>, CliError> {
    let (lo, hi, n) = cfg.sim.grid;
    Ok(log_grid(lo, hi, n)?)
}

pub fn mse(run: &mut Run<'_>) -> Result<(), CliError> {
    let plant = run.cfg.plant_model()?;
    run.loop_model(&plant)?;
    let grid = grid(run.cfg)?;
    let cfg = run.cfg;
    let o = &cfg.observer;
    let (a1, wo, g) = (plant.a(1), o.omega_o, o.gamma);
    let mut params = vec![("mse".to_string(), a1, wo, g)];
    params.extend(cfg.sim.sweep_a_o.iter().map(|&v| (format!("mse_a_o_{}", tag(v)), v, wo, g)));
    params.extend(cfg.sim.sweep_omega_o.iter().map(|&v| (format!("mse_omega_o_{}", tag(v)), a1, v, g)));
    params.extend(cfg.sim.sweep_gamma.iter().map(|&v| (format!("mse_gamma_{}", tag(v)), a1, wo, v)));
    let mut summary = String::from("curve,a_o,omega_o,gamma,violations,worst_ratio\n");
    for (name, a1, wo, g) in &params {
        let table = match LoopModel::bandwidth(plant.a(0), *a1, plant.gain(), o.b0, *wo, *g)
            .and_then(|model| MseTable::compute(Strategy::Parallel, &model, &grid))
        {
            Ok(t) => t,
            Err(e) => {
                run.fail(name, e);
                continue;
            }
        };
        run.out.write(&format!("{name}.csv"), &table.to_csv())?;
        let violations = table.ordering_violations(1e-12).len();
        let worst = (0..grid.len()).map(|i| table.e_ifo[i] / table.e_fo[i]).fold(f64::NEG_INFINITY, f64::max);
        let _ = writeln!(summary, "{name},{a1},{wo},{g},{violations},{worst}");
        run.plot(
            &format!("{name}.svg"),
            Axes { title: name, x_label: "ω (rad/s)", y_label: "e(ω)", log_x: true, log_y: true },
            &[
                Series { label: "IFO".into(), x: &table.omegas, y: &table.e_ifo },
                Series { label: "FO".into(), x: &table.omegas, y: &table.e_fo },
            ],
        )?;
    }
    run.out.write("mse_summary.csv", &summary)
}

pub fn bode(run: &mut Run<'_>) -> Result<(), CliError> {
    let plant = run.cfg.plant_model()?;
    let model = run.loop_model(&plant)?;
    let grid = grid(run.cfg)?;
    let mut margins = String::new();
    let mut curves: Vec<(ObserverKind, BodeCurve)> = Vec::new();
    for &kind in &run.cfg.observer.kinds.clone() {
        let tf = match kind {
            ObserverKind::Io => run.io_pd(&plant).map(|(k_ip, k_id)| open_loop_io(&model, k_ip, k_id)),
            _ => run.fractional_aux().and_then(|aux| Ok(open_loop(&model, kind, &aux)?)),
        };
        let tf = match tf {
            Ok(tf) => tf,
            Err(e) => {
                run.fail(&format!("{} open loop", kind.label()), e);
                continue;
            }
        };
        let _ = writeln!(margins, "[{}]", kind.label());
        match crossover_and_margin(&tf, run.cfg.sim.bracket) {
            Ok(c) => {
                let _ = writeln!(margins, "omega_c = {}\nphase_margin_deg = {}", c.omega_c, c.phase_margin_deg);
            }
            Err(e) => {
                let _ = writeln!(margins, "error = {e}");
                run.fail(&format!("{} crossover", kind.label()), e);
            }
        }
        match bode_curve(&tf, &grid) {
            Ok(curve) => {
                run.out.write(&format!("bode_{}.csv", kind.label()), &curve.to_csv())?;
                curves.push((kind, curve));
            }
            Err(e) => run.fail(&format!("{} bode", kind.label()), e),
        }
    }
    run.out.write("margins.txt", &margins)?;
    let series = |pick: fn(&BodeCurve) -> &[f64]| -> Vec<Series<'_>> {
        curves.iter().map(|(k, c)| Series { label: k.label().to_uppercase(), x: &c.omegas, y: pick(c) }).collect()
    };
    let mag = series(|c| &c.mag_db);
    let phase = series(|c| &c.phase_deg);
    if run.plots {
        let axes =
            Axes { title: "open-loop magnitude", x_label: "ω (rad/s)", y_label: "dB", log_x: true, log_y: false };
        let svg = line_plot(axes, &mag)?;
        run.out.write("bode_mag.svg", &svg)?;
        let axes = Axes { title: "open-loop phase", y_label: "deg", ..axes };
        let svg = line_plot(axes, &phase)?;
        run.out.write("bode_phase.svg", &svg)?;
    }
    Ok(())
}

fn write_trace(run: &mut Run<'_>, stem: &str, tr: &SimulationTrace) -> Result<(), CliError> {
    run.out.write(&format!("{stem}.csv"), &tr.to_csv())?;
    run.out.write(&format!("{stem}_observer.csv"), &tr.observer_csv())?;
    let m = step_metrics(tr, run.cfg.sim.reference, run.cfg.sim.settle_band_pct)?;
    let mut text = m.to_key_value();
    let _ = writeln!(text, "diverged={}", tr.diverged);
    run.out.write(&format!("{stem}_metrics.txt"), &text)
}

/// Step runs for every configured observer kind, plus gain sweeps.
fn step_runs(run: &mut Run<'_>, prefix: &str, plant: &PlantModel, gains: Option<Vec<f64>>) -> Result<(), CliError> {
    let horizon = run.cfg.horizon()?;
    let step = run.cfg.sim.step.unwrap_or(1.0 / run.cfg.observer.sample_rate);
    let reference = Reference::Step { amplitude: run.cfg.sim.reference };
    let disturbance = run.cfg.sim.disturbance;
    let mut base_runs: Vec<(ObserverKind, SimulationTrace)> = Vec::new();
    for &kind in &run.cfg.observer.kinds.clone() {
        let label = kind.label();
        let lp = match run.adrc_loop(kind, plant) {
            Ok(lp) => lp,
            Err(e) => {
                run.fail(&format!("{label} loop"), e);
                continue;
            }
        };
        match simulate(&lp, &reference, &disturbance, horizon, step) {
            Ok(tr) => {
                write_trace(run, &format!("{prefix}_{label}"), &tr)?;
                base_runs.push((kind, tr));
            }
            Err(e) => run.fail(&format!("{label} simulation"), e),
        }
        let Some(ks) = &gains else { continue };
        let mut table = String::from("k,overshoot_pct,settling_time,peak_value,steady_state_error,valid\n");
        let mut peaks = Vec::new();
        for sweep in gain_sweep(Strategy::Parallel, &lp, ks, &reference, &disturbance, horizon, step) {
            let tr = match sweep.trace {
                Ok(tr) => tr,
                Err(e) => {
                    run.fail(&format!("{label} sweep k={}", sweep.k), e);
                    continue;
                }
            };
            let stem = format!("{prefix}_{label}_k{}", tag(sweep.k));
            run.out.write(&format!("{stem}.csv"), &tr.to_csv())?;
            let m = step_metrics(&tr, run.cfg.sim.reference, run.cfg.sim.settle_band_pct)?;
            let settling = m.settling_time.map_or_else(|| "unsettled".to_string(), |t| t.to_string());
            let _ = writeln!(
                table,
                "{},{},{settling},{},{},{}",
                sweep.k, m.overshoot_pct, m.peak_value, m.steady_state_error, m.valid
            );
            peaks.push(m.peak_value);
        }
        run.out.write(&format!("{prefix}_{label}_sweep.csv"), &table)?;
        let fluct = overshoot_fluctuation(&peaks, run.cfg.sim.reference);
        run.out.write(&format!("{prefix}_{label}_sweep.txt"), &format!("overshoot_fluctuation_pct={fluct}\n"))?;
    }
    if run.plots && !base_runs.is_empty() {
        let mut series: Vec<Series<'_>> = base_runs
            .iter()
            .map(|(k, tr)| Series { label: k.label().to_uppercase(), x: &tr.time, y: &tr.output })
            .collect();
        series.push(Series { label: "r".into(), x: &base_runs[0].1.time, y: &base_runs[0].1.reference });
        let axes = Axes { title: "step response", x_label: "t (s)", y_label: "y", log_x: false, log_y: false };
        let svg = line_plot(axes, &series)?;
        run.out.write(&format!("{prefix}.svg"), &svg)?;
    }
    Ok(())
}

pub fn step(run: &mut Run<'_>) -> Result<(), CliError> {
    let plant = run.cfg.plant_model()?;
    let gains = run.cfg.sim.gains.clone();
    step_runs(run, "step", &plant, gains)
}

pub fn pmsm(run: &mut Run<'_>) -> Result<(), CliError> {
    let plant = run.cfg.pmsm_model()?;
    let text = format!("a0 = {}\na1 = {}\nb = {}\n", plant.a(0), plant.a(1), plant.gain());
    run.out.write("pmsm_plant.txt", &text)?;
    let gains = Some(run.cfg.sim.gains.clone().unwrap_or_else(|| vec![0.6, 1.0, 1.4]));
    step_runs(run, "pmsm", &plant, gains)
}

pub fn design(run: &mut Run<'_>) -> Result<(), CliError> {
    let plant = run.cfg.plant_model()?;
    let model = run.loop_model(&plant)?;
    let target = run.ifo_crossover(&model)?;
    let plant_only = open_loop(&model, ObserverKind::Io, &AuxController::p(1.0))?;
    let pd = match_crossover_design(&plant_only, target.omega_c, target.phase_margin_deg)?;
    let (k_ip, k_id) = pd.pd_parameters().expect("design returns a PD law");
    let check = crossover_and_margin(&open_loop_io(&model, k_ip, k_id), run.cfg.sim.bracket)?;
    let text = format!(
        "target_omega_c = {}\ntarget_phase_margin_deg = {}\nk_ip = {k_ip}\nk_id = {k_id}\n\
         achieved_omega_c = {}\nachieved_phase_margin_deg = {}\n",
        target.omega_c, target.phase_margin_deg, check.omega_c, check.phase_margin_deg
    );
    run.out.write("design.txt", &text)
}

pub fn stability(run: &mut Run<'_>) -> Result<(), CliError> {
    let plant = run.cfg.plant_model()?;
    let aux = run.fractional_aux()?;
    let obs = run.observer(ObserverKind::Ifo, plant.order())?;
    let (n, g, nu) = (obs.n, obs.gamma.value(), obs.nu());
    let mut text = String::new();

    let _ = writeln!(text, "[observer]");
    match kharitonov_eso_check(&obs.gains, n, g, nu) {
        Ok(r) => text.push_str(&r.to_text()),
        Err(e) => {
            let _ = writeln!(text, "error = {e}");
            run.fail("observer check", e);
        }
    }

    let _ = writeln!(text, "\n[closed_loop]");
    if plant.gain() != obs.b0 {
        let _ = writeln!(text, "note = polynomial assumes b = b0; configured b/b0 = {}", plant.gain() / obs.b0);
    }
    match closed_loop_poly_w(&plant, &aux, &obs.gains, n, g, nu).and_then(|f| commensurate_root_test(&f)) {
        Ok(r) => text.push_str(&r.to_text()),
        Err(e) => {
            let _ = writeln!(text, "error = {e}");
            run.fail("closed-loop root test", e);
        }
    }

    let _ = writeln!(text, "\n[certificate]");
    let applicable = plant.order() == 2
        && n == 2
        && (g - 0.75).abs() < 1e-12
        && aux.kind() == AuxKind::P
        && !aux.reference_feedforward();
    if applicable {
        match proposition1_certify(plant.a(0), plant.a(1), aux.k_p(), run.cfg.observer.omega_o) {
            Ok(r) => text.push_str(&r.to_text()),
            Err(e) => {
                let _ = writeln!(text, "error = {e}");
                run.fail("routh certificate", e);
            }
        }
    } else {
        let _ = writeln!(text, "skipped = needs a second-order plant, γ = 0.75 and a P tracking law");
    }
    run.out.write("stability.txt", &text)
}
