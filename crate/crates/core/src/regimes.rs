//! Qualitative classification of trajectories: spike detection, interspike
//! interval statistics, and multi-start probes for coexisting attractors.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuits::{CircuitKind, CircuitOde};
use crate::dynamics::{integrate, Channel, InputSignal, IntegratorOptions, Shape, Trajectory};
use crate::error::{Error, Result};

/// Full width of the hysteresis band around the spike threshold.
pub const SPIKE_BAND: f64 = 0.1;
/// Default fixed transient cut.
pub const TRANSIENT: f64 = 10.0;
/// Periodic spiking requires an ISI coefficient of variation below this.
pub const PERIODIC_CV: f64 = 0.2;
/// Minimum ratio between the short and long ISI clusters of a burst train.
pub const BURST_SEPARATION: f64 = 5.0;
/// Terminal `‖ẋ‖` below which a run counts as settled.
pub const QUIESCENT_SPEED: f64 = 1e-6;
/// An excitable response must bring the output back within this distance of
/// its pre-pulse value.
pub const RETURN_TOL: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegimeLabel {
    Quiescent,
    BistableSwitch,
    Monostable,
    PeriodicSpiking,
    ExcitablePulse,
    RestSpikeBistable,
    Bursting,
    Other,
}

impl RegimeLabel {
    pub const ALL: [RegimeLabel; 8] = [
        RegimeLabel::Quiescent,
        RegimeLabel::BistableSwitch,
        RegimeLabel::Monostable,
        RegimeLabel::PeriodicSpiking,
        RegimeLabel::ExcitablePulse,
        RegimeLabel::RestSpikeBistable,
        RegimeLabel::Bursting,
        RegimeLabel::Other,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RegimeLabel::Quiescent => "quiescent",
            RegimeLabel::BistableSwitch => "bistable-switch",
            RegimeLabel::Monostable => "monostable",
            RegimeLabel::PeriodicSpiking => "periodic-spiking",
            RegimeLabel::ExcitablePulse => "excitable-pulse",
            RegimeLabel::RestSpikeBistable => "rest-spike-bistable",
            RegimeLabel::Bursting => "bursting",
            RegimeLabel::Other => "other",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|l| l.as_str() == s)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpikeTrain {
    pub times: Vec<f64>,
    pub threshold: f64,
    pub band: f64,
    pub refractory: f64,
    pub window: (f64, f64),
}

impl SpikeTrain {
    pub fn isis(&self) -> Vec<f64> {
        self.times.windows(2).map(|w| w[1] - w[0]).collect()
    }
}

fn refractory_floor(traj: &Trajectory) -> f64 {
    2.0 * traj.meta.ode.timescales().eps_f * 10.0
}

fn default_transient(traj: &Trajectory) -> f64 {
    match (traj.meta.ode.kind(), traj.meta.ode.timescales().eps_u) {
        (CircuitKind::Burster, Some(eps_u)) => TRANSIENT.max(1.0 / eps_u),
        _ => TRANSIENT,
    }
}

/// Upward threshold crossings in `[t_lo, t_hi]`, with a hysteresis band of
/// [`SPIKE_BAND`] and a refractory floor of `20 ε_f`.
pub fn detect_spikes_in(traj: &Trajectory, threshold: f64, t_lo: f64, t_hi: f64) -> Result<SpikeTrain> {
    let range = traj.window(t_lo, t_hi);
    if range.len() < 2 {
        return Err(Error::EmptyWindow);
    }
    let lo = threshold - 0.5 * SPIKE_BAND;
    let hi = threshold + 0.5 * SPIKE_BAND;
    let refractory = refractory_floor(traj);
    let mut times: Vec<f64> = Vec::new();
    let mut armed = traj.output(range.start) < lo;
    let mut last_cross = None;
    for i in range.clone().skip(1) {
        let (y0, y1) = (traj.output(i - 1), traj.output(i));
        if y0 < threshold && y1 >= threshold {
            let (t0, t1) = (traj.times[i - 1], traj.times[i]);
            last_cross = Some(t0 + (t1 - t0) * (threshold - y0) / (y1 - y0));
        }
        if !armed && y1 < lo {
            armed = true;
        } else if armed && y1 > hi {
            armed = false;
            let t = last_cross.unwrap_or(traj.times[i]);
            if times.last().is_none_or(|&p| t - p >= refractory) {
                times.push(t);
            }
        }
    }
    Ok(SpikeTrain {
        times,
        threshold,
        band: SPIKE_BAND,
        refractory,
        window: (traj.times[range.start], traj.times[range.end - 1]),
    })
}

/// [`detect_spikes_in`] over the run after the default transient cut.
pub fn detect_spikes(traj: &Trajectory, threshold: f64) -> Result<SpikeTrain> {
    let t_end = *traj.times.last().ok_or(Error::EmptyWindow)?;
    detect_spikes_in(traj, threshold, default_transient(traj), t_end)
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Evidence {
    pub spike_count: usize,
    pub period: Option<f64>,
    pub isi_cv: Option<f64>,
    /// `(min, max)` of the output over the window.
    pub amplitude: (f64, f64),
    pub terminal_speed: f64,
    pub spikes_per_burst: Vec<usize>,
    pub intraburst_isi_median: Option<f64>,
    pub interburst_gap_min: Option<f64>,
    /// Smallest long ISI over largest short ISI.
    pub burst_separation: Option<f64>,
    /// Smallest interburst gap over the median intraburst ISI.
    pub burst_gap_ratio: Option<f64>,
    pub attractors: Option<usize>,
    pub diagnostics: Vec<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AttractorKind {
    Equilibrium,
    Periodic,
    Bursting,
    Unresolved,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttractorCluster {
    pub kind: AttractorKind,
    /// Terminal state of the first member.
    pub representative: Vec<f64>,
    pub period: Option<f64>,
    /// Indices into the initial-condition list.
    pub members: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    pub label: RegimeLabel,
    pub window: (f64, f64),
    pub evidence: Evidence,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub clusters: Vec<AttractorCluster>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
#[serde(deny_unknown_fields)]
pub struct ClassifyOptions {
    pub threshold: f64,
    /// Samples before this time are ignored; defaults to 10, or `1/ε_u`
    /// for bursters when larger.
    pub transient: Option<f64>,
    /// End of the analysis window; defaults to the end of the run.
    pub until: Option<f64>,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        Self {
            threshold: 0.0,
            transient: None,
            until: None,
        }
    }
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn mean_cv(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n;
    (m, var.sqrt() / m)
}

/// Nonzero pulses on the `u` channel as `(t0, height)`, sorted by onset.
fn input_pulses(traj: &Trajectory) -> Vec<(f64, f64)> {
    fn collect(s: &Shape, out: &mut Vec<(f64, f64)>) {
        match s {
            Shape::Pulse { t0, height, .. } if *height != 0.0 => out.push((*t0, *height)),
            Shape::Sum { terms } => terms.iter().for_each(|t| collect(t, out)),
            _ => {}
        }
    }
    let mut pulses = Vec::new();
    for s in traj.meta.signals.iter().filter(|s| s.channel == Channel::U) {
        collect(&s.shape, &mut pulses);
    }
    pulses.sort_by(|a, b| a.0.total_cmp(&b.0));
    pulses
}

/// Index of the last sample strictly before `t`, or 0.
fn sample_before(traj: &Trajectory, t: f64) -> usize {
    traj.times.partition_point(|&s| s < t).saturating_sub(1)
}

/// True if after every pulse the output comes back to its pre-pulse value
/// before the next pulse (or the end of the run).
fn pulses_return(traj: &Trajectory, pulses: &[(f64, f64)]) -> bool {
    let end = *traj.times.last().unwrap_or(&0.0);
    pulses.iter().enumerate().all(|(k, &(t0, _))| {
        let next = pulses.get(k + 1).map_or(end + 1.0, |p| p.0);
        let before = traj.output(sample_before(traj, t0));
        let after = traj.output(sample_before(traj, next));
        (after - before).abs() < RETURN_TOL
    })
}

/// Splits the ISIs at the largest ratio between consecutive sorted values.
/// Returns `(threshold, separation)` where ISIs above `threshold` are long.
fn isi_split(isis: &[f64]) -> Option<(f64, f64)> {
    let mut s = isis.to_vec();
    s.sort_by(f64::total_cmp);
    s.windows(2)
        .filter(|w| w[0] > 0.0)
        .map(|w| (0.5 * (w[0] + w[1]), w[1] / w[0]))
        .max_by(|a, b| a.1.total_cmp(&b.1))
}

/// Decision tree over the analysis window:
/// settled without spikes is quiescent; regular spiking (ISI CV below 0.2)
/// is periodic; two well separated ISI clusters with at least two spikes per
/// burst is bursting; a pulse-driven excursion that settles is an excitable
/// pulse. Anything else is `other`, with diagnostics.
pub fn classify_trajectory(traj: &Trajectory, opts: &ClassifyOptions) -> Result<RegimeReport> {
    let t_end = *traj.times.last().ok_or(Error::EmptyWindow)?;
    let t_lo = opts.transient.unwrap_or_else(|| default_transient(traj));
    let t_hi = opts.until.unwrap_or(t_end).min(t_end);
    let train = detect_spikes_in(traj, opts.threshold, t_lo, t_hi)?;
    let range = traj.window(t_lo, t_hi);
    let (mut ymin, mut ymax) = (f64::INFINITY, f64::NEG_INFINITY);
    for i in range.clone() {
        ymin = ymin.min(traj.output(i));
        ymax = ymax.max(traj.output(i));
    }
    let mut ev = Evidence {
        spike_count: train.times.len(),
        amplitude: (ymin, ymax),
        terminal_speed: traj.speed(range.end - 1),
        ..Default::default()
    };
    let settled = ev.terminal_speed < QUIESCENT_SPEED;
    let isis = train.isis();
    let pulses = input_pulses(traj);

    let label = if !pulses.is_empty()
        && settled
        && (1..=2 * pulses.len()).contains(&train.times.len())
        && pulses_return(traj, &pulses)
    {
        RegimeLabel::ExcitablePulse
    } else if isis.len() < 2 {
        if settled && train.times.is_empty() {
            RegimeLabel::Quiescent
        } else {
            ev.diagnostics.push(format!(
                "{} spikes, terminal speed {:.3e}",
                train.times.len(),
                ev.terminal_speed
            ));
            RegimeLabel::Other
        }
    } else {
        let (m, cv) = mean_cv(&isis);
        ev.isi_cv = Some(cv);
        if cv < PERIODIC_CV {
            ev.period = Some(m);
            RegimeLabel::PeriodicSpiking
        } else if let Some((cut, sep)) = isi_split(&isis) {
            ev.burst_separation = Some(sep);
            // Bursts are runs of spikes separated by long ISIs; the first and
            // last runs may be cut by the window and are not counted.
            let mut sizes = Vec::new();
            let mut current = 1usize;
            let mut short: Vec<f64> = Vec::new();
            let mut long: Vec<f64> = Vec::new();
            for &d in &isis {
                if d > cut {
                    sizes.push(current);
                    current = 1;
                    long.push(d);
                } else {
                    current += 1;
                    short.push(d);
                }
            }
            let complete: Vec<usize> = if sizes.len() > 1 { sizes[1..].to_vec() } else { Vec::new() };
            ev.spikes_per_burst = complete.clone();
            if !short.is_empty() {
                ev.intraburst_isi_median = Some(median(&mut short.clone()));
            }
            ev.interburst_gap_min = long.iter().copied().reduce(f64::min);
            if let (Some(gap), Some(med)) = (ev.interburst_gap_min, ev.intraburst_isi_median) {
                ev.burst_gap_ratio = Some(gap / med);
            }
            let enough_bursts = complete.len() >= 2;
            let all_multi = complete.iter().all(|&n| n >= 2);
            let gap_ok = ev.burst_gap_ratio.is_some_and(|r| r > BURST_SEPARATION);
            if sep >= BURST_SEPARATION && enough_bursts && all_multi && gap_ok {
                RegimeLabel::Bursting
            } else {
                ev.diagnostics.push(format!(
                    "ISI cv {cv:.3}, split separation {sep:.2}, complete bursts {}",
                    complete.len()
                ));
                RegimeLabel::Other
            }
        } else {
            RegimeLabel::Other
        }
    };
    Ok(RegimeReport {
        label,
        window: (train.window.0, train.window.1),
        evidence: ev,
        clusters: Vec::new(),
    })
}

/// `n` initial conditions in `[-1.2, 1.2]^dim`: the box corners first, then
/// uniform samples from a seeded generator.
pub fn default_ics(dim: usize, n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(n);
    let corners = 1usize << dim;
    for c in 0..corners.min(n) {
        out.push((0..dim).map(|k| if c >> k & 1 == 1 { 1.2 } else { -1.2 }).collect());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    while out.len() < n {
        out.push((0..dim).map(|_| rng.gen_range(-1.2..=1.2)).collect());
    }
    out
}

/// Minimum number of initial conditions for [`probe_bistability`].
pub const MIN_PROBE_ICS: usize = 8;

/// Integrates from each initial condition at constant input and groups the
/// long-time behaviors into attractor clusters.
pub fn probe_bistability(
    ode: &CircuitOde,
    constant_u: f64,
    ics: &[Vec<f64>],
    t_end: f64,
) -> Result<RegimeReport> {
    if ics.len() < MIN_PROBE_ICS {
        return Err(Error::InvalidArgument(format!(
            "probe needs at least {MIN_PROBE_ICS} initial conditions, got {}",
            ics.len()
        )));
    }
    let signal = [InputSignal::constant(Channel::U, constant_u)];
    let runs: Vec<Result<(RegimeReport, Vec<f64>)>> = ics
        .par_iter()
        .map(|x0| {
            let tr = integrate(ode, &signal, x0, t_end, &IntegratorOptions::default())?;
            // Judge the second half so that slow transients have decayed.
            let opts = ClassifyOptions {
                transient: Some(default_transient(&tr).max(0.5 * t_end)),
                ..Default::default()
            };
            let rep = classify_trajectory(&tr, &opts)?;
            Ok((rep, tr.last_state().to_vec()))
        })
        .collect();

    let mut clusters: Vec<AttractorCluster> = Vec::new();
    for (idx, run) in runs.into_iter().enumerate() {
        let (rep, last) = run?;
        let kind = match rep.label {
            RegimeLabel::Quiescent => AttractorKind::Equilibrium,
            RegimeLabel::PeriodicSpiking => AttractorKind::Periodic,
            RegimeLabel::Bursting => AttractorKind::Bursting,
            _ => AttractorKind::Unresolved,
        };
        let found = clusters.iter_mut().find(|c| {
            c.kind == kind
                && match kind {
                    AttractorKind::Equilibrium => {
                        c.representative
                            .iter()
                            .zip(&last)
                            .map(|(a, b)| (a - b).powi(2))
                            .sum::<f64>()
                            .sqrt()
                            < 1e-3
                    }
                    AttractorKind::Periodic => match (c.period, rep.evidence.period) {
                        (Some(a), Some(b)) => (a - b).abs() < 0.05 * a.max(b),
                        _ => false,
                    },
                    _ => true,
                }
        });
        match found {
            Some(c) => c.members.push(idx),
            None => clusters.push(AttractorCluster {
                kind,
                representative: last,
                period: rep.evidence.period,
                members: vec![idx],
            }),
        }
    }
    let count = |k: AttractorKind| clusters.iter().filter(|c| c.kind == k).count();
    let (eq, per, bur, unr) = (
        count(AttractorKind::Equilibrium),
        count(AttractorKind::Periodic),
        count(AttractorKind::Bursting),
        count(AttractorKind::Unresolved),
    );
    let label = if eq >= 1 && per >= 1 {
        RegimeLabel::RestSpikeBistable
    } else if eq >= 2 {
        RegimeLabel::BistableSwitch
    } else if eq == 1 && per + bur + unr == 0 {
        RegimeLabel::Monostable
    } else if per >= 1 && eq + bur + unr == 0 {
        RegimeLabel::PeriodicSpiking
    } else if bur >= 1 && eq + per + unr == 0 {
        RegimeLabel::Bursting
    } else {
        RegimeLabel::Other
    };
    let evidence = Evidence {
        attractors: Some(clusters.len()),
        period: clusters.iter().find_map(|c| c.period),
        diagnostics: vec![format!(
            "{eq} equilibrium, {per} periodic, {bur} bursting, {unr} unresolved clusters"
        )],
        ..Default::default()
    };
    Ok(RegimeReport {
        label,
        window: (0.5 * t_end, t_end),
        evidence,
        clusters,
    })
}

/// Output excursion following an input pulse.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PulseResponse {
    pub t0: f64,
    pub height: f64,
    /// `max |y(t) - y(t0)|` over `[t0, t0 + horizon]`.
    pub excursion: f64,
    /// `‖ẋ‖` just before the pulse.
    pub speed_before: f64,
}

impl PulseResponse {
    pub fn gain(&self) -> f64 {
        self.excursion / self.height.abs()
    }
}

/// Measures the response to every nonzero pulse on the `u` channel.
pub fn pulse_responses(traj: &Trajectory, horizon: f64) -> Vec<PulseResponse> {
    input_pulses(traj)
        .into_iter()
        .filter_map(|(t0, height)| {
            let range = traj.window(t0, t0 + horizon);
            if range.is_empty() {
                return None;
            }
            let before = sample_before(traj, t0);
            let y0 = traj.output(before);
            let excursion = range
                .clone()
                .map(|i| (traj.output(i) - y0).abs())
                .fold(0.0, f64::max);
            Some(PulseResponse {
                t0,
                height,
                excursion,
                speed_before: traj.speed(before),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuits::{circuit_ode, ParamVector, Timescales};
    use crate::dynamics::{pulse_response, Pulse};
    use crate::nonlinearity::SigmoidFamily;

    fn ode(kind: CircuitKind, beta: f64, eps: f64) -> CircuitOde {
        circuit_ode(
            kind,
            &SigmoidFamily::TANH,
            &ParamVector::new().with("beta", beta),
            Timescales::fast(eps),
            None,
        )
        .unwrap()
    }

    fn run(o: &CircuitOde, u: f64, x0: &[f64], t_end: f64) -> Trajectory {
        integrate(o, &[InputSignal::constant(Channel::U, u)], x0, t_end, &IntegratorOptions::default()).unwrap()
    }

    #[test]
    fn constant_below_threshold_has_no_spikes() {
        let o = ode(CircuitKind::Bistable, 0.5, 0.1);
        let tr = run(&o, 0.0, &[-0.9], 50.0);
        assert!(detect_spikes(&tr, 0.0).unwrap().times.is_empty());
        let rep = classify_trajectory(&tr, &ClassifyOptions::default()).unwrap();
        assert_eq!(rep.label, RegimeLabel::Quiescent);
    }

    #[test]
    fn empty_window_is_an_error() {
        let o = ode(CircuitKind::Bistable, 0.5, 0.1);
        let tr = run(&o, 0.0, &[-0.9], 5.0);
        assert!(matches!(detect_spikes(&tr, 0.0), Err(Error::EmptyWindow)));
    }

    #[test]
    fn relaxation_oscillation_is_periodic() {
        let o = ode(CircuitKind::Relaxation, 0.5, 0.01);
        let tr = run(&o, 0.0, &[0.3, 0.1], 100.0);
        let rep = classify_trajectory(&tr, &ClassifyOptions::default()).unwrap();
        assert_eq!(rep.label, RegimeLabel::PeriodicSpiking);
        assert!(rep.evidence.isi_cv.unwrap() < 0.05);
        let period = rep.evidence.period.unwrap();
        for dt in [-0.05, 0.05] {
            let o2 = ClassifyOptions { threshold: dt, ..Default::default() };
            let p2 = classify_trajectory(&tr, &o2).unwrap().evidence.period.unwrap();
            assert!((p2 - period).abs() < 0.01 * period);
        }
        let train = detect_spikes(&tr, 0.0).unwrap();
        assert!(train.times.windows(2).all(|w| w[1] - w[0] >= train.refractory));
    }

    #[test]
    fn isi_split_finds_gap() {
        let isis = [1.0, 1.1, 0.9, 10.0, 1.0, 1.05, 11.0];
        let (cut, sep) = isi_split(&isis).unwrap();
        assert!(cut > 1.1 && cut < 10.0);
        assert!((sep - 10.0 / 1.1).abs() < 1e-12);
    }

    #[test]
    fn probe_finds_bistable_switch_and_monostability() {
        let ics = default_ics(1, 8, 7);
        assert!(ics.contains(&vec![-1.2]) && ics.contains(&vec![1.2]));
        let rep = probe_bistability(&ode(CircuitKind::Bistable, 0.5, 0.1), 0.0, &ics, 40.0).unwrap();
        assert_eq!(rep.label, RegimeLabel::BistableSwitch);
        let rep = probe_bistability(&ode(CircuitKind::Bistable, -0.5, 0.1), 0.0, &ics, 40.0).unwrap();
        assert_eq!(rep.label, RegimeLabel::Monostable);
        assert!(probe_bistability(&ode(CircuitKind::Bistable, 0.5, 0.1), 0.0, &ics[..3], 40.0).is_err());
    }

    #[test]
    fn reports_are_deterministic() {
        let o = ode(CircuitKind::Relaxation, 0.5, 0.01);
        let a = classify_trajectory(&run(&o, 0.0, &[0.3, 0.1], 60.0), &ClassifyOptions::default()).unwrap();
        let b = classify_trajectory(&run(&o, 0.0, &[0.3, 0.1], 60.0), &ClassifyOptions::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn labels_roundtrip() {
        for l in RegimeLabel::ALL {
            assert_eq!(RegimeLabel::parse(l.as_str()), Some(l));
            let j = serde_json::to_string(&l).unwrap();
            assert_eq!(j, format!("\"{}\"", l.as_str()));
        }
    }

    #[test]
    fn pulse_response_excursion() {
        let o = ode(CircuitKind::Bistable, 0.5, 0.1);
        let tr = pulse_response(&o, 0.0, &[Pulse { t0: 20.0, width: 2.0, height: -1.0 }], &[-0.9], 40.0).unwrap();
        let r = pulse_responses(&tr, 10.0);
        assert_eq!(r.len(), 1);
        assert!(r[0].excursion > 1.5);
        assert!(r[0].speed_before < 1e-6);
        // a latch does not come back, so it is not an excitable response
        let rep = classify_trajectory(&tr, &ClassifyOptions::default()).unwrap();
        assert_ne!(rep.label, RegimeLabel::ExcitablePulse);
    }
}
