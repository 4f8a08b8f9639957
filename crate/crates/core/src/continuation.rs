//! Tracing the static behavior `{(y, u) : g(y, u) = 0}` by pseudo-arclength
//! continuation, with stability labels (`ẏ = g`) and fold detection.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::circuits::{BifurcationProblem, BoundProblem, ParamVector};
use crate::error::{Error, Result};
use crate::numeric::{linspace, solve};

/// `|g_y|` below which a point is labeled marginal.
pub const MARGINAL_TOL: f64 = 1e-8;
/// Samples closer than this are the same point.
pub const MERGE_TOL: f64 = 1e-6;
/// Largest number of step halvings before a branch is truncated.
pub const MAX_HALVINGS: usize = 6;
/// Number of interior `u`-lines used to seed isolated branches.
pub const INTERIOR_SEED_LINES: usize = 5;

const SEED_GRID: usize = 801;
const ROOT_GRID: usize = 4001;
const MAX_STEPS_PER_BRANCH: usize = 200_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stability {
    Stable,
    Unstable,
    Marginal,
}

impl Stability {
    /// Label from `g_y`, under the convention `ẏ = g`.
    pub fn from_gy(gy: f64) -> Self {
        if gy.abs() < MARGINAL_TOL {
            Stability::Marginal
        } else if gy < 0.0 {
            Stability::Stable
        } else {
            Stability::Unstable
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Stability::Stable => "stable",
            Stability::Unstable => "unstable",
            Stability::Marginal => "marginal",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchPoint {
    pub u: f64,
    pub y: f64,
    pub stability: Stability,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub id: usize,
    pub points: Vec<BranchPoint>,
    /// The branch returned to its starting point.
    pub closed: bool,
    /// The corrector failed after all step halvings.
    pub truncated: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fold {
    pub u: f64,
    pub y: f64,
    pub branch_id: usize,
    pub g_y: f64,
    pub g_yy: f64,
    pub g_u: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchDiagram {
    pub problem: String,
    pub params: ParamVector,
    pub branches: Vec<Branch>,
    pub folds: Vec<Fold>,
    pub u_window: (f64, f64),
    pub y_window: (f64, f64),
    pub arclength_step: f64,
}

impl BranchDiagram {
    pub fn is_empty(&self) -> bool {
        self.branches.is_empty()
    }

    pub fn points(&self) -> impl Iterator<Item = (usize, &BranchPoint)> {
        self.branches
            .iter()
            .flat_map(|b| b.points.iter().map(move |p| (b.id, p)))
    }

    /// CSV with columns `branch_id,u,y,stability`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["branch_id", "u", "y", "stability"])?;
        for (id, p) in self.points() {
            out.write_record([
                id.to_string(),
                format!("{:.12e}", p.u),
                format!("{:.12e}", p.y),
                p.stability.as_str().to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Default arclength step: 1% of the window diagonal.
pub fn default_step(u_window: (f64, f64), y_window: (f64, f64)) -> f64 {
    1e-2 * (u_window.1 - u_window.0).hypot(y_window.1 - y_window.0)
}

struct Tracer<'a> {
    b: BoundProblem<'a>,
    u_window: (f64, f64),
    y_window: (f64, f64),
    step: f64,
}

impl<'a> Tracer<'a> {
    fn inside(&self, y: f64, u: f64) -> bool {
        let s = 1e-12;
        u >= self.u_window.0 - s
            && u <= self.u_window.1 + s
            && y >= self.y_window.0 - s
            && y <= self.y_window.1 + s
    }

    /// `(g, g_y, g_u)`
    fn grad(&self, y: f64, u: f64) -> (f64, f64, f64) {
        let (g, gy) = self.b.value_dy(y, u);
        let (_, gu) = self.b.value_du(y, u);
        (g, gy, gu)
    }

    /// Unit tangent `(t_y, t_u)`.
    fn tangent(&self, y: f64, u: f64) -> Option<(f64, f64)> {
        let (_, gy, gu) = self.grad(y, u);
        let n = gy.hypot(gu);
        (n > 1e-300).then(|| (-gu / n, gy / n))
    }

    /// Newton on `g = 0` with the pseudo-arclength constraint through `(yp, up)`.
    fn correct(&self, yp: f64, up: f64, t: (f64, f64)) -> Option<(f64, f64)> {
        let (mut y, mut u) = (yp, up);
        for _ in 0..20 {
            let (g, gy, gu) = self.grad(y, u);
            let c = t.0 * (y - yp) + t.1 * (u - up);
            if g.abs() < 1e-12 && c.abs() < 1e-12 {
                return Some((y, u));
            }
            let dx = solve(vec![vec![gy, gu], vec![t.0, t.1]], vec![-g, -c])?;
            y += dx[0];
            u += dx[1];
            if !(y.is_finite() && u.is_finite()) {
                return None;
            }
            if dx[0].abs() + dx[1].abs() < 1e-14 {
                break;
            }
        }
        let (g, _, _) = self.grad(y, u);
        (g.abs() < 1e-10).then_some((y, u))
    }

    /// Point where the segment from inside `a` to outside `b` meets the box,
    /// polished onto the curve along that boundary line.
    fn exit_point(&self, a: (f64, f64), b: (f64, f64)) -> Option<(f64, f64)> {
        let (ya, ua) = a;
        let (yb, ub) = b;
        let mut best: Option<(f64, bool)> = None;
        let mut consider = |s: f64, fix_u: bool| {
            if (0.0..=1.0).contains(&s) && best.is_none_or(|(bs, _)| s < bs) {
                best = Some((s, fix_u));
            }
        };
        for ub_ in [self.u_window.0, self.u_window.1] {
            if (ub - ua).abs() > 0.0 {
                consider((ub_ - ua) / (ub - ua), true);
            }
        }
        for yb_ in [self.y_window.0, self.y_window.1] {
            if (yb - ya).abs() > 0.0 {
                consider((yb_ - ya) / (yb - ya), false);
            }
        }
        let (s, fix_u) = best?;
        let (mut y, mut u) = (ya + s * (yb - ya), ua + s * (ub - ua));
        for _ in 0..30 {
            let (g, gy, gu) = self.grad(y, u);
            if g.abs() < 1e-13 {
                break;
            }
            if fix_u {
                if gy.abs() < 1e-300 {
                    return None;
                }
                y -= g / gy;
            } else {
                if gu.abs() < 1e-300 {
                    return None;
                }
                u -= g / gu;
            }
        }
        let (g, _, _) = self.grad(y, u);
        (g.abs() < 1e-10 && self.inside(y, u)).then_some((y, u))
    }

    /// Follows the curve from `start` along `dir` until it leaves the box,
    /// returns to `start`, or the corrector fails.
    fn walk(&self, start: (f64, f64), dir: (f64, f64)) -> (Vec<(f64, f64)>, bool, bool) {
        let mut pts = vec![start];
        let mut x = start;
        let mut t = dir;
        let mut h = self.step;
        let mut left_start = false;
        for _ in 0..MAX_STEPS_PER_BRANCH {
            let mut accepted = None;
            let mut hh = h;
            for _ in 0..=MAX_HALVINGS {
                let pred = (x.0 + hh * t.0, x.1 + hh * t.1);
                if let Some(c) = self.correct(pred.0, pred.1, t) {
                    let d = (c.0 - x.0).hypot(c.1 - x.1);
                    if let Some(nt) = self.tangent(c.0, c.1) {
                        let nt = if nt.0 * t.0 + nt.1 * t.1 < 0.0 { (-nt.0, -nt.1) } else { nt };
                        let cos = nt.0 * t.0 + nt.1 * t.1;
                        if d < 2.0 * hh && d > 0.25 * hh && cos > 0.9 {
                            accepted = Some((c, nt, hh));
                            break;
                        }
                    }
                }
                hh *= 0.5;
            }
            let Some((c, nt, used)) = accepted else {
                return (pts, false, true);
            };
            if !self.inside(c.0, c.1) {
                if let Some(e) = self.exit_point(x, c) {
                    if (e.0 - x.0).hypot(e.1 - x.1) > MERGE_TOL {
                        pts.push(e);
                    }
                }
                return (pts, false, false);
            }
            let ds = (c.0 - start.0).hypot(c.1 - start.1);
            if ds > 2.0 * self.step {
                left_start = true;
            }
            if left_start && ds < 1.5 * used {
                return (pts, true, false);
            }
            pts.push(c);
            x = c;
            t = nt;
            h = (used * 2.0).min(self.step);
        }
        (pts, false, true)
    }
}

fn dist_to_polyline(p: (f64, f64), poly: &[(f64, f64)]) -> f64 {
    if poly.len() == 1 {
        return (p.0 - poly[0].0).hypot(p.1 - poly[0].1);
    }
    poly.windows(2)
        .map(|w| {
            let (a, b) = (w[0], w[1]);
            let (dx, dy) = (b.0 - a.0, b.1 - a.1);
            let l2 = dx * dx + dy * dy;
            let s = if l2 > 0.0 {
                (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / l2).clamp(0.0, 1.0)
            } else {
                0.0
            };
            (p.0 - a.0 - s * dx).hypot(p.1 - a.1 - s * dy)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Roots of a scalar function on `[lo, hi]`: sign changes on a grid refined by
/// bisection, plus near-tangential minima of `|f|` polished by Newton on `f'`.
fn roots_on_line<F, D>(f: F, df: D, lo: f64, hi: f64, n: usize) -> Vec<f64>
where
    F: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    let xs = linspace(lo, hi, n);
    let vs: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
    let mut roots = Vec::new();
    for i in 0..n {
        if vs[i] == 0.0 {
            roots.push(xs[i]);
            continue;
        }
        if i + 1 < n && vs[i + 1] != 0.0 && vs[i].signum() != vs[i + 1].signum() {
            let (mut a, mut b, mut fa) = (xs[i], xs[i + 1], vs[i]);
            for _ in 0..200 {
                let m = 0.5 * (a + b);
                if m <= a || m >= b {
                    break;
                }
                let fm = f(m);
                if fm == 0.0 {
                    a = m;
                    b = m;
                    break;
                }
                if fm.signum() == fa.signum() {
                    a = m;
                    fa = fm;
                } else {
                    b = m;
                }
            }
            roots.push(0.5 * (a + b));
        }
        // Tangential contact: interior local minimum of |f| without sign change.
        if i > 0 && i + 1 < n {
            let (l, c, r) = (vs[i - 1], vs[i], vs[i + 1]);
            if c != 0.0 && l.signum() == c.signum() && r.signum() == c.signum() && c.abs() <= l.abs() && c.abs() <= r.abs() {
                let mut x = xs[i];
                let h = (hi - lo) / (n - 1) as f64;
                for _ in 0..50 {
                    let d = df(x);
                    let d2 = (df(x + 1e-6) - df(x - 1e-6)) / 2e-6;
                    if d2 == 0.0 {
                        break;
                    }
                    let nx = x - d / d2;
                    if (nx - xs[i]).abs() > h {
                        break;
                    }
                    x = nx;
                }
                if f(x).abs() < 1e-12 && x >= lo && x <= hi {
                    roots.push(x);
                }
            }
        }
    }
    roots.sort_by(f64::total_cmp);
    roots.dedup_by(|a, b| (*a - *b).abs() < MERGE_TOL);
    roots
}

/// Traces every solution component of `g = 0` meeting the box.
///
/// Seeds are the roots on the four box edges and on
/// [`INTERIOR_SEED_LINES`] interior `u`-lines. `step` defaults to
/// [`default_step`].
pub fn trace(
    p: &BifurcationProblem,
    params: &ParamVector,
    u_window: (f64, f64),
    y_window: (f64, f64),
    step: Option<f64>,
) -> Result<BranchDiagram> {
    if !(u_window.0 < u_window.1 && y_window.0 < y_window.1) {
        return Err(Error::InvalidArgument(format!(
            "empty window u={u_window:?} y={y_window:?}"
        )));
    }
    let step = step.unwrap_or_else(|| default_step(u_window, y_window));
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::InvalidArgument(format!("step must be > 0, got {step}")));
    }
    let b = p.bind(params)?;
    let tr = Tracer {
        b: b.clone(),
        u_window,
        y_window,
        step,
    };

    let mut seeds = Vec::new();
    let mut u_lines = vec![u_window.0, u_window.1];
    let interior = linspace(u_window.0, u_window.1, INTERIOR_SEED_LINES + 2);
    u_lines.extend_from_slice(&interior[1..=INTERIOR_SEED_LINES]);
    for &u in &u_lines {
        let ys = roots_on_line(
            |y| b.value(y, u),
            |y| b.value_dy(y, u).1,
            y_window.0,
            y_window.1,
            SEED_GRID,
        );
        seeds.extend(ys.into_iter().map(|y| (y, u)));
    }
    for &y in &[y_window.0, y_window.1] {
        let us = roots_on_line(
            |u| b.value(y, u),
            |u| b.value_du(y, u).1,
            u_window.0,
            u_window.1,
            SEED_GRID,
        );
        seeds.extend(us.into_iter().map(|u| (y, u)));
    }

    let mut polylines: Vec<(Vec<(f64, f64)>, bool, bool)> = Vec::new();
    for seed in seeds {
        if polylines
            .iter()
            .any(|(pl, _, _)| dist_to_polyline(seed, pl) < 0.25 * step)
        {
            continue;
        }
        let Some(t) = tr.tangent(seed.0, seed.1) else {
            continue;
        };
        let (fwd, closed, trunc_f) = tr.walk(seed, t);
        let (pts, trunc_b) = if closed {
            (fwd, false)
        } else {
            let (bwd, _, trunc_b) = tr.walk(seed, (-t.0, -t.1));
            let mut pts: Vec<(f64, f64)> = bwd.into_iter().skip(1).rev().collect();
            pts.extend(fwd);
            (pts, trunc_b)
        };
        polylines.push((pts, closed, trunc_f || trunc_b));
    }

    let mut branches = Vec::new();
    let mut folds = Vec::new();
    for (id, (pts, closed, truncated)) in polylines.into_iter().enumerate() {
        let (pts, bf) = insert_folds(&b, &pts, closed);
        folds.extend(bf.into_iter().map(|mut f| {
            f.branch_id = id;
            f
        }));
        let points = pts
            .into_iter()
            .map(|(y, u)| BranchPoint {
                u,
                y,
                stability: Stability::from_gy(b.value_dy(y, u).1),
            })
            .collect();
        branches.push(Branch {
            id,
            points,
            closed,
            truncated,
        });
    }
    Ok(BranchDiagram {
        problem: p.label().to_string(),
        params: b.values().clone(),
        branches,
        folds,
        u_window,
        y_window,
        arclength_step: step,
    })
}

/// Newton on `(g, g_y) = 0`.
fn polish_fold(b: &BoundProblem<'_>, y0: f64, u0: f64) -> Option<(f64, f64, [f64; 3])> {
    let (mut y, mut u) = (y0, u0);
    for _ in 0..50 {
        let t = b.taylor(y, u, 2, None).ok()?;
        let (g, gy, gu, gyy, gyu) = (t.get(0, 0, 0), t.get(1, 0, 0), t.get(0, 1, 0), t.get(2, 0, 0), t.get(1, 1, 0));
        if g.abs() < 1e-14 && gy.abs() < 1e-13 {
            break;
        }
        let dx = solve(vec![vec![gy, gu], vec![gyy, gyu]], vec![-g, -gy])?;
        y += dx[0];
        u += dx[1];
        if dx[0].abs() + dx[1].abs() < 1e-15 {
            break;
        }
    }
    let t = b.taylor(y, u, 2, None).ok()?;
    (t.get(0, 0, 0).abs() < 1e-10 && t.get(1, 0, 0).abs() < 1e-8)
        .then(|| (y, u, [t.get(1, 0, 0), t.get(2, 0, 0), t.get(0, 1, 0)]))
}

/// Locates sign changes of `du/ds` (equivalently of `g_y`, up to orientation)
/// and inserts the polished fold points into the polyline.
fn insert_folds(b: &BoundProblem<'_>, pts: &[(f64, f64)], closed: bool) -> (Vec<(f64, f64)>, Vec<Fold>) {
    let mut out = Vec::with_capacity(pts.len() + 4);
    let mut folds = Vec::new();
    let n = pts.len();
    let du = |i: usize| {
        let a = pts[i % n];
        let c = pts[(i + 1) % n];
        c.1 - a.1
    };
    for i in 0..n {
        out.push(pts[i]);
        if !(closed || (i > 0 && i + 1 < n)) {
            continue;
        }
        // Extremum of u at pts[i]: du changes sign between segments i-1 and i.
        let prev = if i == 0 { du(n - 1) } else { du(i - 1) };
        let next = du(i);
        if prev * next < 0.0 {
            let (y0, u0) = pts[i];
            if let Some((y, u, [gy, gyy, gu])) = polish_fold(b, y0, u0) {
                let dup = folds
                    .iter()
                    .any(|f: &Fold| (f.y - y).hypot(f.u - u) < MERGE_TOL);
                if !dup && (y - y0).hypot(u - u0) > MERGE_TOL {
                    // Place the fold on the correct side of pts[i].
                    let a = if i == 0 { pts[n - 1] } else { pts[i - 1] };
                    let c = pts[(i + 1) % n];
                    let da = (y - a.0).hypot(u - a.1);
                    let dc = (y - c.0).hypot(u - c.1);
                    if da < dc {
                        out.pop();
                        out.push((y, u));
                        out.push(pts[i]);
                    } else {
                        out.push((y, u));
                    }
                } else if !dup {
                    out.pop();
                    out.push((y, u));
                }
                if !dup {
                    folds.push(Fold {
                        u,
                        y,
                        branch_id: 0,
                        g_y: gy,
                        g_yy: gyy,
                        g_u: gu,
                    });
                }
            }
        }
    }
    (out, folds)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DiagramLabel {
    Monotone,
    BistableHysteresis,
    MirroredHysteresis,
    Other,
}

impl DiagramLabel {
    pub const ALL: [DiagramLabel; 4] = [
        DiagramLabel::Monotone,
        DiagramLabel::BistableHysteresis,
        DiagramLabel::MirroredHysteresis,
        DiagramLabel::Other,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            DiagramLabel::Monotone => "monotone",
            DiagramLabel::BistableHysteresis => "bistable-hysteresis",
            DiagramLabel::MirroredHysteresis => "mirrored-hysteresis",
            DiagramLabel::Other => "other",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|l| l.as_str() == s)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagramClass {
    pub label: DiagramLabel,
    pub fold_count: usize,
    pub branch_count: usize,
    pub bistable_u_intervals: Vec<(f64, f64)>,
}

const CLASSIFY_GRID: usize = 4001;

/// Number of stable branch crossings of the vertical line at `u`.
fn stable_count(d: &BranchDiagram, u: f64) -> usize {
    let mut count = 0;
    for b in &d.branches {
        let n = b.points.len();
        let segs = if b.closed { n } else { n.saturating_sub(1) };
        for i in 0..segs {
            let p = &b.points[i];
            let q = &b.points[(i + 1) % n];
            if p.stability == Stability::Unstable || q.stability == Stability::Unstable {
                continue;
            }
            if p.stability == Stability::Marginal && q.stability == Stability::Marginal {
                continue;
            }
            let (lo, hi) = (p.u.min(q.u), p.u.max(q.u));
            // Half-open so that a shared vertex is counted once.
            if lo <= u && u < hi || (u == hi && hi == d.u_window.1 && lo < hi) {
                count += 1;
            }
        }
    }
    count
}

/// `u`-intervals where at least two stable samples coexist.
pub fn bistable_intervals(d: &BranchDiagram) -> Vec<(f64, f64)> {
    let us = linspace(d.u_window.0, d.u_window.1, CLASSIFY_GRID);
    let mut out = Vec::new();
    let mut open: Option<(f64, f64)> = None;
    for &u in &us {
        if stable_count(d, u) >= 2 {
            open = Some(match open {
                Some((lo, _)) => (lo, u),
                None => (u, u),
            });
        } else if let Some(iv) = open.take() {
            out.push(iv);
        }
    }
    out.extend(open);
    out
}

pub fn classify(d: &BranchDiagram) -> DiagramClass {
    let intervals = bistable_intervals(d);
    let fold_count = d.folds.len();
    let branch_count = d.branches.len();
    let label = if branch_count == 0 {
        DiagramLabel::Other
    } else if fold_count == 0 && branch_count == 1 {
        DiagramLabel::Monotone
    } else if fold_count == 2
        && d.folds[0].branch_id == d.folds[1].branch_id
        && intervals.len() == 1
    {
        DiagramLabel::BistableHysteresis
    } else if fold_count == 4 && intervals.len() == 2 && {
        let mid = 0.5 * (intervals[0].1 + intervals[1].0);
        stable_count(d, mid) >= 1
    } {
        DiagramLabel::MirroredHysteresis
    } else {
        DiagramLabel::Other
    };
    DiagramClass {
        label,
        fold_count,
        branch_count,
        bistable_u_intervals: intervals,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Equilibrium {
    pub y: f64,
    pub stability: Stability,
}

/// All roots of `g(·, u)` in the window, with stability labels.
pub fn equilibria_at(
    p: &BifurcationProblem,
    params: &ParamVector,
    u: f64,
    y_window: (f64, f64),
) -> Result<Vec<Equilibrium>> {
    if !(y_window.0 < y_window.1) {
        return Err(Error::InvalidArgument(format!("empty window y={y_window:?}")));
    }
    let b = p.bind(params)?;
    Ok(equilibria_bound(&b, u, y_window))
}

pub(crate) fn equilibria_bound(b: &BoundProblem<'_>, u: f64, y_window: (f64, f64)) -> Vec<Equilibrium> {
    roots_on_line(
        |y| b.value(y, u),
        |y| b.value_dy(y, u).1,
        y_window.0,
        y_window.1,
        ROOT_GRID,
    )
    .into_iter()
    .map(|y| {
        // One Newton polish where the derivative is usable.
        let (g, gy) = b.value_dy(y, u);
        let y = if gy.abs() > 1e-6 && (g / gy).abs() < 1e-6 { y - g / gy } else { y };
        Equilibrium {
            y,
            stability: Stability::from_gy(b.value_dy(y, u).1),
        }
    })
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuits::{hysteresis_circuit, normal_form, NormalFormKind, SignConvention};
    use crate::nonlinearity::SigmoidFamily;
    use proptest::prelude::*;

    fn beta(b: f64) -> ParamVector {
        ParamVector::new().with("beta", b)
    }

    #[test]
    fn folds_of_cubic_match_closed_form() {
        let p = normal_form(NormalFormKind::HysteresisUnfolding);
        let d = trace(&p, &beta(1.0), (-2.0, 2.0), (-2.0, 2.0), None).unwrap();
        assert_eq!(d.branches.len(), 1);
        assert_eq!(d.folds.len(), 2);
        let y0 = 1.0 / 3f64.sqrt();
        let u0 = 2.0 * 3f64.powf(-1.5);
        let mut f: Vec<_> = d.folds.iter().map(|f| (f.y, f.u)).collect();
        f.sort_by(|a, b| a.0.total_cmp(&b.0));
        assert!((f[0].0 + y0).abs() < 1e-6 && (f[0].1 + u0).abs() < 1e-6);
        assert!((f[1].0 - y0).abs() < 1e-6 && (f[1].1 - u0).abs() < 1e-6);
        for (_, pt) in d.points() {
            assert!(p.eval(pt.y, pt.u, &beta(1.0)).unwrap().abs() < 1e-8);
        }
        for fold in &d.folds {
            assert!(fold.g_y.abs() < 1e-6);
        }
        let c = classify(&d);
        assert_eq!(c.label, DiagramLabel::BistableHysteresis);
        let iv = c.bistable_u_intervals[0];
        assert!((iv.0 + u0).abs() < 2e-3 && (iv.1 - u0).abs() < 2e-3);
    }

    #[test]
    fn negative_beta_is_monotone() {
        let p = normal_form(NormalFormKind::HysteresisUnfolding);
        let d = trace(&p, &beta(-1.0), (-2.0, 2.0), (-2.0, 2.0), None).unwrap();
        let c = classify(&d);
        assert_eq!(c.label, DiagramLabel::Monotone);
        assert!(d.points().all(|(_, p)| p.stability == Stability::Stable));
    }

    #[test]
    fn circuit_diagrams() {
        let s = SigmoidFamily::TANH;
        let p = hysteresis_circuit(&s, SignConvention::Static);
        let d = trace(&p, &beta(0.5), (-1.0, 1.0), (-1.5, 1.5), None).unwrap();
        let c = classify(&d);
        assert_eq!(d.folds.len(), 2);
        assert_eq!(c.label, DiagramLabel::BistableHysteresis);
        let iv = c.bistable_u_intervals[0];
        assert!(iv.0 < 0.0 && iv.1 > 0.0);
        let d = trace(&p, &beta(-0.5), (-1.0, 1.0), (-1.5, 1.5), None).unwrap();
        assert_eq!(classify(&d).label, DiagramLabel::Monotone);
    }

    #[test]
    fn static_circuit_diagram_is_odd_symmetric() {
        let p = hysteresis_circuit(&SigmoidFamily::TANH, SignConvention::Static);
        let d = trace(&p, &beta(0.5), (-1.0, 1.0), (-1.5, 1.5), None).unwrap();
        let pts: Vec<(f64, f64)> = d.points().map(|(_, p)| (p.y, p.u)).collect();
        let poly: Vec<(f64, f64)> = pts.clone();
        for &(y, u) in &pts {
            assert!(dist_to_polyline((-y, -u), &poly) < 1e-3);
        }
        let mut f: Vec<_> = d.folds.iter().map(|f| (f.u, f.y)).collect();
        f.sort_by(|a, b| a.0.total_cmp(&b.0));
        assert!((f[0].0 + f[1].0).abs() < 1e-8 && (f[0].1 + f[1].1).abs() < 1e-8);
    }

    #[test]
    fn isolas_are_found_by_interior_seeds() {
        use crate::circuits::Expr;
        // Circle y² + u² = 0.25 lies strictly inside the box.
        let p = BifurcationProblem::new(
            "circle",
            Expr::c(0.25) - Expr::y().pow(2) - Expr::u().pow(2),
            ParamVector::new(),
        )
        .unwrap();
        let d = trace(&p, &ParamVector::new(), (-1.0, 1.0), (-1.0, 1.0), None).unwrap();
        assert_eq!(d.branches.len(), 1);
        assert!(d.branches[0].closed);
        assert_eq!(d.folds.len(), 2);
    }

    #[test]
    fn empty_box_and_bad_arguments() {
        let p = normal_form(NormalFormKind::Hysteresis);
        let d = trace(&p, &ParamVector::new(), (5.0, 6.0), (-1.0, 1.0), None).unwrap();
        assert!(d.is_empty());
        assert!(trace(&p, &ParamVector::new(), (1.0, 1.0), (-1.0, 1.0), None).is_err());
        assert!(trace(&p, &ParamVector::new(), (-1.0, 1.0), (-1.0, 1.0), Some(0.0)).is_err());
    }

    #[test]
    fn equilibria_examples() {
        let h = normal_form(NormalFormKind::Hysteresis);
        let e = equilibria_at(&h, &ParamVector::new(), 0.0, (-2.0, 2.0)).unwrap();
        assert_eq!(e.len(), 1);
        assert_eq!(e[0].stability, Stability::Marginal);

        let p = normal_form(NormalFormKind::HysteresisUnfolding);
        let e = equilibria_at(&p, &beta(1.0), 0.0, (-2.0, 2.0)).unwrap();
        let ys: Vec<f64> = e.iter().map(|e| e.y).collect();
        let st: Vec<Stability> = e.iter().map(|e| e.stability).collect();
        assert_eq!(ys.len(), 3);
        for (y, expect) in ys.iter().zip([-1.0, 0.0, 1.0]) {
            assert!((y - expect).abs() < 1e-12);
        }
        assert_eq!(st, vec![Stability::Stable, Stability::Unstable, Stability::Stable]);

        let c = hysteresis_circuit(&SigmoidFamily::TANH, SignConvention::Static);
        let e = equilibria_at(&c, &beta(0.5), 0.0, (-1.5, 1.5)).unwrap();
        assert_eq!(e.len(), 3);
        assert_eq!(e[0].stability, Stability::Stable);
        assert_eq!(e[2].stability, Stability::Stable);
        // Dense sign-change oracle for the outer roots: y = tanh(1.5 y).
        let oracle = {
            let mut y: f64 = 1.0;
            for _ in 0..200 {
                y = (1.5 * y).tanh();
            }
            y
        };
        assert!((e[2].y - oracle).abs() < 1e-10);
    }

    #[test]
    fn csv_columns() {
        let p = normal_form(NormalFormKind::HysteresisUnfolding);
        let d = trace(&p, &beta(1.0), (-1.0, 1.0), (-2.0, 2.0), None).unwrap();
        let mut buf = Vec::new();
        d.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("branch_id,u,y,stability\n"));
        assert!(text.contains(",stable\n") && text.contains(",unstable\n"));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(50))]

        #[test]
        fn root_counts_match_brute_force(b in -1.0f64..1.0) {
            let p = normal_form(NormalFormKind::HysteresisUnfolding);
            let params = beta(b);
            let g = |y: f64, u: f64| -y * y * y - u + b * y;
            for u in linspace(-1.0, 1.0, 11) {
                let found = equilibria_at(&p, &params, u, (-2.0, 2.0)).unwrap().len();
                let ys = linspace(-2.0, 2.0, 10_000);
                let brute = ys.windows(2).filter(|w| g(w[0], u).signum() != g(w[1], u).signum()).count();
                prop_assert_eq!(found, brute, "beta={} u={}", b, u);
            }
        }
    }
}
