//! Time integration of [`CircuitOde`]s under piecewise input signals.
//!
//! The integrator is the Dormand-Prince 5(4) pair with its fourth-order
//! continuous extension. Signal breakpoints split the run into segments and
//! each segment restarts the method, so no step straddles a discontinuity.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::circuits::{CircuitKind, CircuitOde};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Channel {
    U,
    Alpha,
}

/// Piecewise description of a scalar signal `s(t)`, `t >= 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "kebab-case")]
#[serde(deny_unknown_fields)]
pub enum Shape {
    Constant { value: f64 },
    /// `height` on `[t0, t0 + width)`, zero elsewhere.
    Pulse { t0: f64, width: f64, height: f64 },
    /// `v0` before `t0`, linear on `[t0, t1]`, `v1` after `t1`.
    Ramp { t0: f64, t1: f64, v0: f64, v1: f64 },
    Sum { terms: Vec<Shape> },
}

impl Shape {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Shape::Constant { value } => *value,
            Shape::Pulse { t0, width, height } => {
                if t >= *t0 && t < t0 + width {
                    *height
                } else {
                    0.0
                }
            }
            Shape::Ramp { t0, t1, v0, v1 } => {
                if t <= *t0 {
                    *v0
                } else if t >= *t1 {
                    *v1
                } else {
                    v0 + (v1 - v0) * (t - t0) / (t1 - t0)
                }
            }
            Shape::Sum { terms } => terms.iter().map(|s| s.eval(t)).sum(),
        }
    }

    /// Times where the signal or its derivative jumps.
    pub fn breakpoints(&self, out: &mut Vec<f64>) {
        match self {
            Shape::Constant { .. } => {}
            Shape::Pulse { t0, width, .. } => out.extend([*t0, t0 + width]),
            Shape::Ramp { t0, t1, .. } => out.extend([*t0, *t1]),
            Shape::Sum { terms } => terms.iter().for_each(|s| s.breakpoints(out)),
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.to_string()));
        match self {
            Shape::Constant { value } if !value.is_finite() => bad("constant value must be finite"),
            Shape::Pulse { t0, width, height }
                if !(t0.is_finite() && width.is_finite() && height.is_finite()) || *width < 0.0 =>
            {
                bad("pulse needs finite t0, height and width >= 0")
            }
            Shape::Ramp { t0, t1, v0, v1 }
                if !(t0.is_finite() && t1.is_finite() && v0.is_finite() && v1.is_finite()) || t1 < t0 =>
            {
                bad("ramp needs finite values and t1 >= t0")
            }
            Shape::Sum { terms } => terms.iter().try_for_each(Shape::validate),
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputSignal {
    pub channel: Channel,
    pub shape: Shape,
}

impl InputSignal {
    pub fn constant(channel: Channel, value: f64) -> Self {
        Self {
            channel,
            shape: Shape::Constant { value },
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.shape.eval(t)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Defaults to `ε_f / 2`; larger values are rejected.
    #[serde(default)]
    pub max_step: Option<f64>,
    /// Output sampling interval; defaults to `ε_f / 5`.
    #[serde(default)]
    pub dt_out: Option<f64>,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-7,
            atol: 1e-9,
            max_step: None,
            dt_out: None,
        }
    }
}

/// Settings actually used by a run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResolvedOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_step: f64,
    pub dt_out: f64,
}

impl IntegratorOptions {
    pub fn resolve(&self, ode: &CircuitOde) -> Result<ResolvedOptions> {
        let eps_f = ode.timescales().eps_f;
        let cap = 0.5 * eps_f;
        let max_step = self.max_step.unwrap_or(cap);
        if !(max_step > 0.0 && max_step <= cap * (1.0 + 1e-12)) {
            return Err(Error::InvalidArgument(format!(
                "max_step must lie in (0, eps_f/2 = {cap}], got {max_step}"
            )));
        }
        let dt_out = self.dt_out.unwrap_or(eps_f / 5.0);
        if !(dt_out > 0.0 && dt_out.is_finite()) {
            return Err(Error::InvalidArgument(format!("dt_out must be > 0, got {dt_out}")));
        }
        if !(self.rtol > 0.0 && self.atol > 0.0) {
            return Err(Error::InvalidArgument("rtol and atol must be > 0".into()));
        }
        Ok(ResolvedOptions {
            rtol: self.rtol,
            atol: self.atol,
            max_step,
            dt_out,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryMeta {
    pub ode: CircuitOde,
    pub signals: Vec<InputSignal>,
    pub x0: Vec<f64>,
    pub t_end: f64,
    pub options: ResolvedOptions,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    pub version: String,
}

/// Sampled solution. States are stored row-major, `dim` values per sample.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub meta: TrajectoryMeta,
    pub times: Vec<f64>,
    pub states: Vec<f64>,
    pub u: Vec<f64>,
    pub alpha: Vec<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.meta.ode.dim()
    }

    pub fn state(&self, i: usize) -> &[f64] {
        let d = self.dim();
        &self.states[i * d..(i + 1) * d]
    }

    /// Output `y = x_f`.
    pub fn output(&self, i: usize) -> f64 {
        self.states[i * self.dim()]
    }

    pub fn outputs(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.output(i)).collect()
    }

    pub fn last_state(&self) -> &[f64] {
        self.state(self.len() - 1)
    }

    /// `‖ẋ‖₂` at sample `i`, from the right-hand side.
    pub fn speed(&self, i: usize) -> f64 {
        let mut dx = vec![0.0; self.dim()];
        self.meta.ode.rhs(self.state(i), self.u[i], self.alpha[i], &mut dx);
        dx.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn terminal_speed(&self) -> f64 {
        self.speed(self.len() - 1)
    }

    /// Index range of samples with `t_lo <= t <= t_hi`.
    pub fn window(&self, t_lo: f64, t_hi: f64) -> std::ops::Range<usize> {
        let a = self.times.partition_point(|&t| t < t_lo);
        let b = self.times.partition_point(|&t| t <= t_hi);
        a..b.max(a)
    }

    /// Whether any sample drives the `α` channel.
    pub fn has_alpha_input(&self) -> bool {
        self.meta.signals.iter().any(|s| s.channel == Channel::Alpha)
    }

    /// Every `k`-th sample, with `k` the smallest stride giving at most
    /// `max_samples` rows; the last sample is always kept.
    pub fn decimated(&self, max_samples: usize) -> Trajectory {
        let n = self.len();
        let stride = n.div_ceil(max_samples.max(2) - 1).max(1);
        if stride == 1 {
            return self.clone();
        }
        let mut keep: Vec<usize> = (0..n).step_by(stride).collect();
        if keep.last() != Some(&(n - 1)) {
            keep.push(n - 1);
        }
        Trajectory {
            meta: self.meta.clone(),
            times: keep.iter().map(|&i| self.times[i]).collect(),
            states: keep.iter().flat_map(|&i| self.state(i).iter().copied()).collect(),
            u: keep.iter().map(|&i| self.u[i]).collect(),
            alpha: keep.iter().map(|&i| self.alpha[i]).collect(),
        }
    }

    fn column_names(&self) -> Vec<String> {
        let mut cols = vec!["t".to_string()];
        cols.extend(self.meta.ode.state_names().iter().map(|s| s.to_string()));
        cols.extend(["y", "u", "alpha"].map(String::from));
        cols
    }

    /// CSV: a `# meta <json>` line, then `t, <states>, y, u, alpha`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# meta {}", serde_json::to_string(&self.meta)?)?;
        let mut out = csv::Writer::from_writer(w);
        out.write_record(self.column_names())?;
        let mut row = Vec::with_capacity(self.dim() + 4);
        for i in 0..self.len() {
            row.clear();
            row.push(format!("{:.10e}", self.times[i]));
            row.extend(self.state(i).iter().map(|v| format!("{v:.10e}")));
            row.push(format!("{:.10e}", self.output(i)));
            row.push(format!("{:.10e}", self.u[i]));
            row.push(format!("{:.10e}", self.alpha[i]));
            out.write_record(&row)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_csv<R: BufRead>(mut r: R) -> Result<Trajectory> {
        let mut first = String::new();
        r.read_line(&mut first)?;
        let meta_json = first
            .trim_end()
            .strip_prefix("# meta ")
            .ok_or_else(|| Error::InvalidArgument("trajectory CSV lacks '# meta' header line".into()))?;
        let meta: TrajectoryMeta = serde_json::from_str(meta_json)?;
        let dim = meta.ode.dim();
        let mut rd = csv::Reader::from_reader(r);
        let (mut times, mut states, mut u, mut alpha) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
        for rec in rd.records() {
            let rec = rec?;
            if rec.len() != dim + 4 {
                return Err(Error::InvalidArgument(format!(
                    "expected {} columns, found {}",
                    dim + 4,
                    rec.len()
                )));
            }
            let parse = |k: usize| -> Result<f64> {
                rec[k]
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| Error::InvalidArgument(format!("column {k}: {e}")))
            };
            times.push(parse(0)?);
            for k in 0..dim {
                states.push(parse(1 + k)?);
            }
            u.push(parse(dim + 2)?);
            alpha.push(parse(dim + 3)?);
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument("times must be strictly increasing".into()));
        }
        Ok(Trajectory {
            meta,
            times,
            states,
            u,
            alpha,
        })
    }
}

// Dormand-Prince 5(4) coefficients.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Smallest step before the integrator gives up.
pub const MIN_STEP: f64 = 1e-12;

struct Inputs<'a> {
    u: Vec<&'a Shape>,
    alpha: Vec<&'a Shape>,
}

impl Inputs<'_> {
    fn at(&self, t: f64) -> (f64, f64) {
        (
            self.u.iter().map(|s| s.eval(t)).sum(),
            self.alpha.iter().map(|s| s.eval(t)).sum(),
        )
    }
}

/// Integrates `ode` from `x0` over `[0, t_end]`. Signals on the same channel
/// add up; a channel without signals is zero.
pub fn integrate(
    ode: &CircuitOde,
    signals: &[InputSignal],
    x0: &[f64],
    t_end: f64,
    opts: &IntegratorOptions,
) -> Result<Trajectory> {
    let dim = ode.dim();
    if x0.len() != dim {
        return Err(Error::InvalidArgument(format!(
            "initial state has {} components, {} kind needs {dim}",
            x0.len(),
            ode.kind().as_str()
        )));
    }
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(Error::InvalidArgument(format!("t_end must be > 0, got {t_end}")));
    }
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { t: 0.0 });
    }
    for s in signals {
        s.shape.validate()?;
        if s.channel == Channel::Alpha && !ode.kind().has_alpha() {
            return Err(Error::InvalidArgument(format!(
                "alpha-channel input is not defined for the {} kind",
                ode.kind().as_str()
            )));
        }
    }
    let ro = opts.resolve(ode)?;
    let inputs = Inputs {
        u: signals.iter().filter(|s| s.channel == Channel::U).map(|s| &s.shape).collect(),
        alpha: signals.iter().filter(|s| s.channel == Channel::Alpha).map(|s| &s.shape).collect(),
    };

    let mut bps = Vec::new();
    for s in signals {
        s.shape.breakpoints(&mut bps);
    }
    bps.retain(|&t| t > 0.0 && t < t_end);
    bps.push(t_end);
    bps.sort_by(f64::total_cmp);
    bps.dedup_by(|a, b| (*a - *b).abs() < 1e-12);

    let n_out = (t_end / ro.dt_out).floor() as usize + 2;
    let mut traj = Trajectory {
        meta: TrajectoryMeta {
            ode: ode.clone(),
            signals: signals.to_vec(),
            x0: x0.to_vec(),
            t_end,
            options: ro,
            accepted_steps: 0,
            rejected_steps: 0,
            version: crate::VERSION.to_string(),
        },
        times: Vec::with_capacity(n_out),
        states: Vec::with_capacity(n_out * dim),
        u: Vec::with_capacity(n_out),
        alpha: Vec::with_capacity(n_out),
    };
    let record = |traj: &mut Trajectory, t: f64, x: &[f64]| {
        let (u, a) = inputs.at(t);
        traj.times.push(t);
        traj.states.extend_from_slice(x);
        traj.u.push(u);
        traj.alpha.push(a);
    };

    let mut x = x0.to_vec();
    let mut t = 0.0;
    record(&mut traj, 0.0, &x);
    let mut next_out = 1usize;
    let mut h = ro.max_step.min(1e-3);
    let mut accepted = 0usize;
    let mut rejected = 0usize;

    let f = |t: f64, x: &[f64], dx: &mut [f64]| {
        let (u, a) = inputs.at(t);
        ode.rhs(x, u, a, dx);
    };

    let mut k = vec![vec![0.0; dim]; 7];
    let mut xs = vec![0.0; dim];
    let mut x1 = vec![0.0; dim];
    let mut seg_start = 0.0;
    for &seg_end in &bps {
        // Inputs are sampled strictly inside the segment so that a pulse
        // edge at either end does not leak into it.
        let nudge = 1e-13 * (seg_end - seg_start);
        let eval_t = |s: f64| s.clamp(seg_start + nudge, seg_end - nudge);
        f(eval_t(t), &x, &mut k[0]);
        while t < seg_end {
            let last = t + h >= seg_end - 1e-12 * seg_end.max(1.0);
            let hstep = if last { seg_end - t } else { h };
            if hstep < MIN_STEP && !last {
                return Err(Error::StepUnderflow { t });
            }
            let stages: [(f64, &[(usize, f64)]); 6] = [
                (C2, &[(0, A21)]),
                (C3, &[(0, A31), (1, A32)]),
                (C4, &[(0, A41), (1, A42), (2, A43)]),
                (C5, &[(0, A51), (1, A52), (2, A53), (3, A54)]),
                (1.0, &[(0, A61), (1, A62), (2, A63), (3, A64), (4, A65)]),
                (1.0, &[(0, A71), (2, A73), (3, A74), (4, A75), (5, A76)]),
            ];
            for (s, (c, row)) in stages.iter().enumerate() {
                for i in 0..dim {
                    xs[i] = x[i] + hstep * row.iter().map(|&(j, a)| a * k[j][i]).sum::<f64>();
                }
                if s == 5 {
                    x1.copy_from_slice(&xs);
                }
                f(eval_t(t + c * hstep), &xs, &mut k[s + 1]);
            }
            if x1.iter().any(|v| !v.is_finite()) {
                if hstep > MIN_STEP {
                    h = 0.25 * hstep;
                    rejected += 1;
                    continue;
                }
                return Err(Error::NonFinite { t });
            }
            let mut err = 0.0;
            for i in 0..dim {
                let e = hstep
                    * (E1 * k[0][i] + E3 * k[2][i] + E4 * k[3][i] + E5 * k[4][i] + E6 * k[5][i] + E7 * k[6][i]);
                let sc = ro.atol + ro.rtol * x[i].abs().max(x1[i].abs());
                err += (e / sc).powi(2);
            }
            let err = (err / dim as f64).sqrt();
            let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            if err <= 1.0 {
                accepted += 1;
                let t1 = if last { seg_end } else { t + hstep };
                // Dense output on (t, t1].
                while next_out as f64 * ro.dt_out <= t1 + 1e-12 * t1.max(1.0) && (next_out as f64 * ro.dt_out) < t_end - 1e-12 * t_end {
                    let to = next_out as f64 * ro.dt_out;
                    let th = ((to - t) / hstep).clamp(0.0, 1.0);
                    let th1 = 1.0 - th;
                    let mut xo = vec![0.0; dim];
                    for i in 0..dim {
                        let r1 = x[i];
                        let r2 = x1[i] - x[i];
                        let r3 = hstep * k[0][i] - r2;
                        let r4 = r2 - hstep * k[6][i] - r3;
                        let r5 = hstep
                            * (D1 * k[0][i] + D3 * k[2][i] + D4 * k[3][i] + D5 * k[4][i] + D6 * k[5][i] + D7 * k[6][i]);
                        xo[i] = r1 + th * (r2 + th1 * (r3 + th * (r4 + th1 * r5)));
                    }
                    record(&mut traj, to, &xo);
                    next_out += 1;
                }
                t = t1;
                x.copy_from_slice(&x1);
                let k7 = k[6].clone();
                k[0].copy_from_slice(&k7);
                h = (hstep * fac).min(ro.max_step);
                if last {
                    h = h.max(hstep);
                    break;
                }
            } else {
                rejected += 1;
                h = hstep * fac.min(1.0);
                if h < MIN_STEP {
                    return Err(Error::StepUnderflow { t });
                }
            }
        }
        h = h.min(ro.max_step);
        seg_start = seg_end;
    }
    record(&mut traj, t_end, &x);
    traj.meta.accepted_steps = accepted;
    traj.meta.rejected_steps = rejected;
    Ok(traj)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pulse {
    pub t0: f64,
    pub width: f64,
    pub height: f64,
}

/// Integrates under `u(t) = base_u + Σ pulses`.
pub fn pulse_response(
    ode: &CircuitOde,
    base_u: f64,
    pulses: &[Pulse],
    x0: &[f64],
    t_end: f64,
) -> Result<Trajectory> {
    let mut terms = vec![Shape::Constant { value: base_u }];
    terms.extend(pulses.iter().map(|p| Shape::Pulse {
        t0: p.t0,
        width: p.width,
        height: p.height,
    }));
    let signal = InputSignal {
        channel: Channel::U,
        shape: Shape::Sum { terms },
    };
    integrate(ode, &[signal], x0, t_end, &IntegratorOptions::default())
}

/// Integrates under a linear ramp of `u` from `u_from` at `t = 0` to `u_to`
/// at `t = duration`. Burster runs must last at least `10 / ε_u`.
pub fn ramp_protocol(
    ode: &CircuitOde,
    u_from: f64,
    u_to: f64,
    duration: f64,
    x0: &[f64],
) -> Result<Trajectory> {
    if ode.kind() == CircuitKind::Burster {
        let eps_u = ode.timescales().eps_u.unwrap_or(1.0);
        if duration < 10.0 / eps_u * (1.0 - 1e-12) {
            return Err(Error::InvalidArgument(format!(
                "burster ramp must last at least 10/eps_u = {}, got {duration}",
                10.0 / eps_u
            )));
        }
    }
    let signal = InputSignal {
        channel: Channel::U,
        shape: Shape::Ramp {
            t0: 0.0,
            t1: duration,
            v0: u_from,
            v1: u_to,
        },
    };
    integrate(ode, &[signal], x0, duration, &IntegratorOptions::default())
}
