//! Canned simulation protocols for the four circuit figures, each with the
//! regime checks that make it pass or fail.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::circuits::{circuit_ode, BursterExtras, BursterWiring, CircuitKind, CircuitOde, ParamVector, Timescales};
use crate::continuation::{equilibria_at, Stability};
use crate::dynamics::{integrate, Channel, InputSignal, IntegratorOptions, Shape, Trajectory};
use crate::error::{Error, Result};
use crate::nonlinearity::SigmoidFamily;
use crate::regimes::{
    classify_trajectory, default_ics, pulse_responses, AttractorKind, ClassifyOptions, RegimeLabel, RegimeReport,
};
use crate::scan::{alpha_bracket, find_region, scan_dynamic, Axis, ParameterChart, Probe, Region};

pub const DELTA: f64 = 0.5;
pub const BETA: f64 = 0.5;
pub const RELAXATION_EPS: f64 = 0.01;
pub const REST_SPIKE_U: f64 = 0.5;
pub const REST_SPIKE_GAMMA: f64 = 1.0;
pub const REST_SPIKE_EPS: f64 = 0.0075;
pub const BURSTER_K_U: f64 = 5.0;
pub const BURSTER_EPS_U: f64 = 1.0 / 75.0;
pub const BURSTER_X_BAR_U: f64 = 2.5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Figure {
    Fig4,
    Fig5,
    Fig6,
    Fig7,
}

impl Figure {
    pub const ALL: [Figure; 4] = [Figure::Fig4, Figure::Fig5, Figure::Fig6, Figure::Fig7];

    pub fn as_str(self) -> &'static str {
        match self {
            Figure::Fig4 => "fig4",
            Figure::Fig5 => "fig5",
            Figure::Fig6 => "fig6",
            Figure::Fig7 => "fig7",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|f| f.as_str() == s)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Self {
            name: name.to_string(),
            passed,
            detail,
        }
    }
}

/// Everything a protocol produced. Names are used as artifact file stems.
#[derive(Clone, Debug)]
pub struct FigureRun {
    pub figure: Figure,
    /// Resolved protocol settings, including values chosen by searches.
    pub settings: BTreeMap<String, Value>,
    pub trajectories: Vec<(String, Trajectory)>,
    pub reports: Vec<(String, RegimeReport)>,
    pub charts: Vec<(String, ParameterChart)>,
    pub checks: Vec<Check>,
}

impl FigureRun {
    fn new(figure: Figure) -> Self {
        Self {
            figure,
            settings: BTreeMap::new(),
            trajectories: Vec::new(),
            reports: Vec::new(),
            charts: Vec::new(),
            checks: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn report(&self, name: &str) -> Option<&RegimeReport> {
        self.reports.iter().find(|r| r.0 == name).map(|r| &r.1)
    }

    pub fn trajectory(&self, name: &str) -> Option<&Trajectory> {
        self.trajectories.iter().find(|r| r.0 == name).map(|r| &r.1)
    }

    fn set(&mut self, key: &str, v: Value) {
        self.settings.insert(key.to_string(), v);
    }
}

pub fn reproduce(figure: Figure, seed: u64) -> Result<FigureRun> {
    match figure {
        Figure::Fig4 => fig4(),
        Figure::Fig5 => fig5(),
        Figure::Fig6 => fig6(seed),
        Figure::Fig7 => fig7(),
    }
}

fn tanh() -> SigmoidFamily {
    SigmoidFamily::TANH
}

fn constant_u(u: f64) -> InputSignal {
    InputSignal::constant(Channel::U, u)
}

fn window(t_lo: f64, t_hi: f64) -> ClassifyOptions {
    ClassifyOptions {
        transient: Some(t_lo),
        until: Some(t_hi),
        ..Default::default()
    }
}

/// Bistable circuit at `β = 0.5`: a negative input pulse latches the output
/// high, a positive one latches it back low.
pub fn fig4() -> Result<FigureRun> {
    let mut run = FigureRun::new(Figure::Fig4);
    let eps = 0.1;
    let ode = circuit_ode(
        CircuitKind::Bistable,
        &tanh(),
        &ParamVector::new().with("beta", BETA),
        Timescales::fast(eps),
        None,
    )?;
    run.set("ode", serde_json::to_value(&ode)?);

    let stable: Vec<f64> = equilibria_at(&ode.fast_problem()?, &ParamVector::new(), 0.0, (-1.5, 1.5))?
        .into_iter()
        .filter(|e| e.stability == Stability::Stable)
        .map(|e| e.y)
        .collect();
    let (low, high) = match stable.as_slice() {
        [a, b] => (*a, *b),
        _ => {
            return Err(Error::InvalidArgument(format!(
                "expected two stable equilibria at u = 0, found {}",
                stable.len()
            )))
        }
    };

    let signal = InputSignal {
        channel: Channel::U,
        shape: Shape::Sum {
            terms: vec![
                Shape::Pulse { t0: 10.0, width: 1.0, height: -1.0 },
                Shape::Pulse { t0: 30.0, width: 1.0, height: 1.0 },
            ],
        },
    };
    run.set("signal", serde_json::to_value(&signal)?);
    let x0 = [low];
    let tr = integrate(&ode, &[signal], &x0, 50.0, &IntegratorOptions::default())?;
    let at = |t: f64| {
        let i = tr.times.partition_point(|&s| s < t).min(tr.len() - 1);
        tr.output(i)
    };
    let (y_mid, y_end) = (at(29.9), at(50.0));
    run.checks.push(Check::new(
        "latch_high",
        (y_mid - high).abs() < 1e-3,
        format!("y(29.9) = {y_mid:.6}, upper equilibrium {high:.6}"),
    ));
    run.checks.push(Check::new(
        "latch_low",
        (y_end - low).abs() < 1e-3,
        format!("y(50) = {y_end:.6}, lower equilibrium {low:.6}"),
    ));

    let probe = Probe::Bistability { t_end: 40.0, ics: 8, seed: 0 }.run(&ode, 0.0)?;
    run.checks.push(Check::new(
        "bistable_switch",
        probe.label == RegimeLabel::BistableSwitch,
        format!("probe label {}", probe.label.as_str()),
    ));
    run.reports.push(("probe".into(), probe));
    run.trajectories.push(("pulse_response".into(), tr));
    Ok(run)
}

pub fn relaxation_ode() -> Result<CircuitOde> {
    circuit_ode(
        CircuitKind::Relaxation,
        &tanh(),
        &ParamVector::new().with("beta", BETA),
        Timescales::fast(RELAXATION_EPS),
        None,
    )
}

/// Input after the ramp of the excitability run.
pub const EXCITABLE_U: f64 = -0.5;
/// Height of the two probe pulses.
pub const EXCITABLE_PULSE: f64 = 0.1;

/// Relaxation oscillator at `β = 0.5`, `ε_f = 0.01`: a limit cycle at
/// `u = 0` and excitable responses to small pulses once a ramp has moved
/// `u` out of the oscillatory window.
pub fn fig5() -> Result<FigureRun> {
    let mut run = FigureRun::new(Figure::Fig5);
    let ode = relaxation_ode()?;
    run.set("ode", serde_json::to_value(&ode)?);

    let x0 = [1e-3, 0.0];
    let osc = integrate(&ode, &[constant_u(0.0)], &x0, 100.0, &IntegratorOptions::default())?;
    let rep = classify_trajectory(&osc, &ClassifyOptions::default())?;
    run.checks.push(Check::new(
        "periodic_spiking",
        rep.label == RegimeLabel::PeriodicSpiking,
        format!("label {}", rep.label.as_str()),
    ));
    let cv = rep.evidence.isi_cv.unwrap_or(f64::INFINITY);
    run.checks.push(Check::new("period_cv", cv < 0.05, format!("ISI cv {cv:.3e}")));
    let max_norm = (0..osc.len())
        .map(|i| osc.state(i).iter().map(|v| v * v).sum::<f64>().sqrt())
        .fold(0.0, f64::max);
    run.checks.push(Check::new(
        "origin_unstable",
        max_norm > 0.1,
        format!("start at distance 1e-3, max distance {max_norm:.3}"),
    ));
    run.reports.push(("oscillation".into(), rep));
    run.trajectories.push(("oscillation".into(), osc));

    let chart = scan_dynamic(
        &ode,
        0.0,
        &[Axis::new("u", -1.5, 1.5, 31)],
        &Probe::Classify { t_end: 100.0, x0: x0.to_vec() },
    )?;
    let osc_window = find_region(&chart, RegimeLabel::PeriodicSpiking.as_str())?;
    let outside = osc_window
        .bounding_box
        .first()
        .is_some_and(|&(lo, hi)| !(lo..=hi).contains(&EXCITABLE_U) && lo < 0.0 && hi > 0.0);
    run.checks.push(Check::new(
        "pulses_outside_window",
        outside,
        format!("oscillatory u-window {:?}, pulses at u = {EXCITABLE_U}", osc_window.bounding_box),
    ));
    run.set("oscillatory_window", serde_json::to_value(&osc_window.bounding_box)?);
    run.charts.push(("u_scan".into(), chart));

    let signal = InputSignal {
        channel: Channel::U,
        shape: Shape::Sum {
            terms: vec![
                Shape::Ramp { t0: 20.0, t1: 60.0, v0: 0.0, v1: EXCITABLE_U },
                Shape::Pulse { t0: 120.0, width: 1.0, height: EXCITABLE_PULSE },
                Shape::Pulse { t0: 160.0, width: 1.0, height: EXCITABLE_PULSE },
            ],
        },
    };
    run.set("excitability_signal", serde_json::to_value(&signal)?);
    let tr = integrate(&ode, &[signal], &x0, 200.0, &IntegratorOptions::default())?;
    let responses = pulse_responses(&tr, 20.0);
    for (k, r) in responses.iter().enumerate() {
        run.checks.push(Check::new(
            &format!("pulse_{}_excursion", k + 1),
            r.excursion >= 5.0 * r.height.abs(),
            format!(
                "t0 {}: excursion {:.3} for height {} (speed before {:.1e})",
                r.t0, r.excursion, r.height, r.speed_before
            ),
        ));
    }
    run.set("pulse_responses", serde_json::to_value(&responses)?);
    let after = classify_trajectory(&tr, &window(100.0, 200.0))?;
    run.reports.push(("excitability".into(), after));
    run.trajectories.push(("excitability".into(), tr));
    Ok(run)
}

pub fn rest_spike_ode(alpha: f64, eps_f: f64) -> Result<CircuitOde> {
    circuit_ode(
        CircuitKind::RestSpike,
        &tanh(),
        &ParamVector::new()
            .with("alpha", alpha)
            .with("beta", BETA)
            .with("gamma", REST_SPIKE_GAMMA)
            .with("delta", DELTA),
        Timescales::fast(eps_f),
        None,
    )
}

/// Default number of `alpha` cells in the rest-spike search.
pub const ALPHA_CELLS: usize = 29;

/// Scans `alpha` over the bracket around the bifurcation variety of the
/// static winged-cusp circuit, probing for coexisting rest and spiking.
pub fn rest_spike_alpha_scan(eps_f: f64, cells: usize, seed: u64) -> Result<(ParameterChart, Region)> {
    let (lo, hi) = alpha_bracket(&tanh(), DELTA, BETA, REST_SPIKE_GAMMA, 0.5)?
        .ok_or_else(|| Error::InvalidArgument("no bifurcation-variety crossing for the alpha bracket".into()))?;
    let template = rest_spike_ode(0.0, eps_f)?;
    let probe = Probe::Bistability { t_end: 200.0, ics: 8, seed };
    let chart = scan_dynamic(&template, REST_SPIKE_U, &[Axis::new("alpha", lo, hi, cells)], &probe)?;
    let region = find_region(&chart, RegimeLabel::RestSpikeBistable.as_str())?;
    Ok((chart, region))
}

/// Height and width of the `alpha` pulses that switch between rest and spiking.
pub const TOGGLE_HEIGHT: f64 = 0.5;
pub const TOGGLE_WIDTH: f64 = 2.0;

/// Rest-spike circuit at `u = 0.5, β = 0.5, γ = 1, ε_f = 0.0075`: coexisting
/// rest and spiking, toggled by transient pulses on `alpha`.
pub fn fig6(seed: u64) -> Result<FigureRun> {
    let mut run = FigureRun::new(Figure::Fig6);
    let (chart, region) = rest_spike_alpha_scan(REST_SPIKE_EPS, ALPHA_CELLS, seed)?;
    run.set("alpha_region", serde_json::to_value(&region.bounding_box)?);
    run.charts.push(("alpha_scan".into(), chart));
    let Some(mid) = region.midpoint() else {
        run.checks.push(Check::new(
            "coexistence_found",
            false,
            "no alpha in the scanned window gives rest-spike bistability".into(),
        ));
        return Ok(run);
    };
    let alpha = mid[0];
    run.set("alpha", json!(alpha));
    let ode = rest_spike_ode(alpha, REST_SPIKE_EPS)?;
    run.set("ode", serde_json::to_value(&ode)?);

    let ics = default_ics(2, 8, seed);
    let probe = crate::regimes::probe_bistability(&ode, REST_SPIKE_U, &ics, 200.0)?;
    run.checks.push(Check::new(
        "coexistence_found",
        probe.label == RegimeLabel::RestSpikeBistable,
        format!("probe at alpha {alpha:.4}: {}", probe.label.as_str()),
    ));
    let rest = probe
        .clusters
        .iter()
        .find(|c| c.kind == AttractorKind::Equilibrium)
        .map(|c| c.representative.clone());
    run.reports.push(("probe".into(), probe));
    let Some(rest) = rest else {
        return Ok(run);
    };

    let signals = [
        constant_u(REST_SPIKE_U),
        InputSignal {
            channel: Channel::Alpha,
            shape: Shape::Sum {
                terms: vec![
                    Shape::Pulse { t0: 50.0, width: TOGGLE_WIDTH, height: TOGGLE_HEIGHT },
                    Shape::Pulse { t0: 150.0, width: TOGGLE_WIDTH, height: -TOGGLE_HEIGHT },
                ],
            },
        },
    ];
    run.set("toggle_signals", serde_json::to_value(&signals)?);
    let tr = integrate(&ode, &signals, &rest, 250.0, &IntegratorOptions::default())?;
    let before = classify_trajectory(&tr, &window(10.0, 50.0))?;
    let during = classify_trajectory(&tr, &window(60.0, 150.0))?;
    let after = classify_trajectory(&tr, &window(160.0, 250.0))?;
    run.checks.push(Check::new(
        "toggle_on",
        before.evidence.spike_count == 0 && during.label == RegimeLabel::PeriodicSpiking,
        format!(
            "{} spikes before, {} after the positive pulse",
            before.evidence.spike_count,
            during.label.as_str()
        ),
    ));
    run.checks.push(Check::new(
        "toggle_off",
        after.label == RegimeLabel::Quiescent,
        format!("{} after the negative pulse", after.label.as_str()),
    ));
    run.reports.push(("toggle_rest".into(), before));
    run.reports.push(("toggle_spiking".into(), during));
    run.reports.push(("toggle_return".into(), after));
    run.trajectories.push(("toggle".into(), tr));
    Ok(run)
}

pub fn burster_ode(alpha: f64, wiring: BursterWiring) -> Result<CircuitOde> {
    circuit_ode(
        CircuitKind::Burster,
        &tanh(),
        &ParamVector::new()
            .with("alpha", alpha)
            .with("beta", BETA)
            .with("gamma", REST_SPIKE_GAMMA)
            .with("delta", DELTA),
        Timescales::with_ultra_slow(REST_SPIKE_EPS, BURSTER_EPS_U),
        Some(BursterExtras {
            k_u: BURSTER_K_U,
            x_bar_u: BURSTER_X_BAR_U,
            wiring,
        }),
    )
}

/// Base `alpha` window for a burster: the rest-spike bracket shifted by the
/// range the adaptation term can take while `x_f` stays in `[-1, 1]`.
pub fn burster_alpha_window(extras: &BursterExtras, bracket: (f64, f64)) -> (f64, f64) {
    let (k, xb) = (extras.k_u, extras.x_bar_u);
    match extras.wiring {
        BursterWiring::SetPointGain => (bracket.0 - k * (xb + 1.0), bracket.1 - k * (xb - 1.0)),
        BursterWiring::FilterGain => (bracket.0 - xb - k, bracket.1 - xb + k),
    }
}

pub const BURSTER_X0: [f64; 3] = [-0.9, -0.9, 0.0];
pub const BURSTER_ALPHA_CELLS: usize = 39;
/// Input held, then ramped, in the bursting-to-tonic run.
pub const RAMP_FROM: f64 = 0.5;
pub const RAMP_TO: f64 = 0.9;

/// Searches `alpha` for bursting at `u = 0.5`, trying the default wiring
/// first and the filtered-gain wiring only if the first finds nothing.
pub fn burster_alpha_scan(cells: usize) -> Result<(BursterWiring, ParameterChart, Region)> {
    let bracket = alpha_bracket(&tanh(), DELTA, BETA, REST_SPIKE_GAMMA, 0.5)?
        .ok_or_else(|| Error::InvalidArgument("no bifurcation-variety crossing for the alpha bracket".into()))?;
    let mut last = None;
    for wiring in [BursterWiring::SetPointGain, BursterWiring::FilterGain] {
        let template = burster_ode(0.0, wiring)?;
        let extras = template.extras().expect("burster has extras");
        let (lo, hi) = burster_alpha_window(&extras, bracket);
        let probe = Probe::Classify {
            t_end: Probe::default_t_end(&template),
            x0: BURSTER_X0.to_vec(),
        };
        let chart = scan_dynamic(&template, RAMP_FROM, &[Axis::new("alpha", lo, hi, cells)], &probe)?;
        let region = find_region(&chart, RegimeLabel::Bursting.as_str())?;
        if !region.is_empty() {
            return Ok((wiring, chart, region));
        }
        last = Some((wiring, chart, region));
    }
    Ok(last.expect("two wirings tried"))
}

/// Burster with `k_u = 5, ε_u = 1/75, x̄_u = 2.5`: bursting at `u = 0.5`,
/// then tonic spiking late in a slow ramp of `u` up to 0.9.
pub fn fig7() -> Result<FigureRun> {
    let mut run = FigureRun::new(Figure::Fig7);
    let (wiring, chart, region) = burster_alpha_scan(BURSTER_ALPHA_CELLS)?;
    run.set("wiring", serde_json::to_value(wiring)?);
    run.set("alpha_region", serde_json::to_value(&region.bounding_box)?);
    run.charts.push(("alpha_scan".into(), chart));
    let Some(mid) = region.midpoint() else {
        run.checks.push(Check::new("bursting", false, "no bursting alpha for either wiring".into()));
        return Ok(run);
    };
    let alpha = mid[0];
    run.set("alpha", json!(alpha));
    let ode = burster_ode(alpha, wiring)?;
    run.set("ode", serde_json::to_value(&ode)?);
    let eps_u = BURSTER_EPS_U;

    let t_const = 10.0 / eps_u;
    let steady = integrate(&ode, &[constant_u(RAMP_FROM)], &BURSTER_X0, t_const, &IntegratorOptions::default())?;
    let rep = classify_trajectory(&steady, &ClassifyOptions::default())?;
    let min_per_burst = rep.evidence.spikes_per_burst.iter().copied().min().unwrap_or(0);
    let sep = rep.evidence.burst_separation.unwrap_or(0.0);
    run.checks.push(Check::new(
        "bursting",
        rep.label == RegimeLabel::Bursting && min_per_burst >= 2 && sep >= 5.0,
        format!(
            "label {}, min spikes per burst {min_per_burst}, ISI separation {sep:.2}",
            rep.label.as_str()
        ),
    ));
    run.reports.push(("bursting".into(), rep));
    run.trajectories.push(("bursting".into(), steady));

    // Hold for 10/ε_u, then ramp over 40/ε_u.
    let (t0, t1) = (t_const, t_const + 40.0 / eps_u);
    let signal = InputSignal {
        channel: Channel::U,
        shape: Shape::Ramp { t0, t1, v0: RAMP_FROM, v1: RAMP_TO },
    };
    run.set("ramp_signal", serde_json::to_value(&signal)?);
    let tr = integrate(&ode, &[signal], &BURSTER_X0, t1, &IntegratorOptions::default())?;
    let early = classify_trajectory(&tr, &window(1.0 / eps_u, t0))?;
    let late_from = t1 - (t1 - t0) / 6.0;
    let late = classify_trajectory(&tr, &window(late_from, t1))?;
    run.checks.push(Check::new(
        "ramp_starts_bursting",
        early.label == RegimeLabel::Bursting,
        format!("t in [{}, {t0}]: {}", 1.0 / eps_u, early.label.as_str()),
    ));
    run.checks.push(Check::new(
        "ramp_ends_tonic",
        late.label == RegimeLabel::PeriodicSpiking,
        format!(
            "t in [{late_from}, {t1}], u in [{:.3}, {RAMP_TO}]: {}",
            RAMP_FROM + (RAMP_TO - RAMP_FROM) * 5.0 / 6.0,
            late.label.as_str()
        ),
    ));
    run.reports.push(("ramp_early".into(), early));
    run.reports.push(("ramp_late".into(), late));
    run.trajectories.push(("ramp".into(), tr));
    Ok(run)
}
