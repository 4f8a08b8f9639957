//! Local recognition of the hysteresis and winged-cusp singularities, the
//! hysteresis unfolding determinant, and transition-variety membership.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuits::{BifurcationProblem, BoundProblem, ParamVector, PartialTable};
use crate::error::{Error, Result};
use crate::numeric::{gauss_newton, linspace};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ToleranceMode {
    #[default]
    Absolute,
    /// Tolerances are multiplied by the largest magnitude among the checked
    /// quantities, so verdicts are invariant under `g -> c·g`, `c > 0`.
    Relative,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerance {
    /// Bound on `|value|` for zero conditions.
    pub zero: f64,
    /// Floor on `|value|` for sign conditions.
    pub sign: f64,
    #[serde(default)]
    pub mode: ToleranceMode,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            zero: 1e-8,
            sign: 1e-6,
            mode: ToleranceMode::Absolute,
        }
    }
}

impl Tolerance {
    pub fn relative() -> Self {
        Self {
            mode: ToleranceMode::Relative,
            ..Self::default()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RequiredSign {
    Negative,
    Positive,
    Nonzero,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZeroCondition {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignCondition {
    pub name: String,
    pub value: f64,
    pub required_sign: RequiredSign,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecognitionVerdict {
    pub singularity: String,
    pub problem: String,
    pub at: (f64, f64),
    pub passed: bool,
    pub zero_conditions: Vec<ZeroCondition>,
    pub sign_conditions: Vec<SignCondition>,
}

impl RecognitionVerdict {
    /// Pass flag of the named condition.
    pub fn condition(&self, name: &str) -> Option<bool> {
        self.zero_conditions
            .iter()
            .find(|c| c.name == name)
            .map(|c| c.pass)
            .or_else(|| self.sign_conditions.iter().find(|c| c.name == name).map(|c| c.pass))
    }

    pub fn failed(&self) -> Vec<&str> {
        let z = self.zero_conditions.iter().filter(|c| !c.pass).map(|c| c.name.as_str());
        let s = self.sign_conditions.iter().filter(|c| !c.pass).map(|c| c.name.as_str());
        z.chain(s).collect()
    }
}

fn build_verdict(
    singularity: &str,
    problem: &str,
    at: (f64, f64),
    zeros: &[(&str, f64)],
    signs: &[(&str, f64, RequiredSign)],
    tol: &Tolerance,
) -> RecognitionVerdict {
    let scale = match tol.mode {
        ToleranceMode::Absolute => 1.0,
        ToleranceMode::Relative => zeros
            .iter()
            .map(|z| z.1.abs())
            .chain(signs.iter().map(|s| s.1.abs()))
            .fold(0.0f64, f64::max)
            .max(f64::MIN_POSITIVE),
    };
    let zt = tol.zero * scale;
    let st = tol.sign * scale;
    let zero_conditions: Vec<_> = zeros
        .iter()
        .map(|&(name, value)| ZeroCondition {
            name: name.to_string(),
            value,
            tolerance: zt,
            pass: value.abs() < zt,
        })
        .collect();
    let sign_conditions: Vec<_> = signs
        .iter()
        .map(|&(name, value, required_sign)| SignCondition {
            name: name.to_string(),
            value,
            required_sign,
            tolerance: st,
            pass: value.abs() > st
                && match required_sign {
                    RequiredSign::Negative => value < 0.0,
                    RequiredSign::Positive => value > 0.0,
                    RequiredSign::Nonzero => true,
                },
        })
        .collect();
    let passed = zero_conditions.iter().all(|c| c.pass) && sign_conditions.iter().all(|c| c.pass);
    RecognitionVerdict {
        singularity: singularity.to_string(),
        problem: problem.to_string(),
        at,
        passed,
        zero_conditions,
        sign_conditions,
    }
}

/// `g = g_y = g_yy = 0`, `g_yyy < 0`, `g_u < 0`.
pub fn check_hysteresis(
    p: &BifurcationProblem,
    at: (f64, f64),
    params: &ParamVector,
    tol: &Tolerance,
) -> Result<RecognitionVerdict> {
    let t = p.bind(params)?.taylor(at.0, at.1, 3, None)?;
    Ok(hysteresis_from(p.label(), at, &t, tol))
}

fn hysteresis_from(label: &str, at: (f64, f64), t: &PartialTable, tol: &Tolerance) -> RecognitionVerdict {
    build_verdict(
        "hysteresis",
        label,
        at,
        &[("g", t.get(0, 0, 0)), ("g_y", t.get(1, 0, 0)), ("g_yy", t.get(2, 0, 0))],
        &[
            ("g_yyy", t.get(3, 0, 0), RequiredSign::Negative),
            ("g_u", t.get(0, 1, 0), RequiredSign::Negative),
        ],
        tol,
    )
}

/// Name of the unfolding parameter used by [`check_hysteresis_unfolding`].
pub const UNFOLDING_PARAM: &str = "beta";

/// Hysteresis conditions at the given parameter values together with
/// `det [[h_u, h_uy], [H_β, H_βy]] != 0`.
pub fn check_hysteresis_unfolding(
    family: &BifurcationProblem,
    at: (f64, f64),
    params: &ParamVector,
    tol: &Tolerance,
) -> Result<RecognitionVerdict> {
    let bound = family.bind(params)?;
    let t = bound.taylor(at.0, at.1, 3, Some(UNFOLDING_PARAM))?;
    let h_u = t.get(0, 1, 0);
    let h_uy = t.get(1, 1, 0);
    let det = h_u * t.get(1, 0, 1) - h_uy * t.get(0, 0, 1);
    Ok(build_verdict(
        "hysteresis-unfolding",
        family.label(),
        at,
        &[("g", t.get(0, 0, 0)), ("g_y", t.get(1, 0, 0)), ("g_yy", t.get(2, 0, 0))],
        &[
            ("g_yyy", t.get(3, 0, 0), RequiredSign::Negative),
            ("g_u", h_u, RequiredSign::Negative),
            ("unfolding_det", det, RequiredSign::Nonzero),
        ],
        tol,
    ))
}

/// `g = g_y = g_u = g_yy = g_yu = 0`, `g_yyy < 0`, `g_uu < 0`.
pub fn check_wcusp(
    p: &BifurcationProblem,
    at: (f64, f64),
    params: &ParamVector,
    tol: &Tolerance,
) -> Result<RecognitionVerdict> {
    let t = p.bind(params)?.taylor(at.0, at.1, 3, None)?;
    Ok(build_verdict(
        "wcusp",
        p.label(),
        at,
        &[
            ("g", t.get(0, 0, 0)),
            ("g_y", t.get(1, 0, 0)),
            ("g_u", t.get(0, 1, 0)),
            ("g_yy", t.get(2, 0, 0)),
            ("g_yu", t.get(1, 1, 0)),
        ],
        &[
            ("g_yyy", t.get(3, 0, 0), RequiredSign::Negative),
            ("g_uu", t.get(0, 2, 0), RequiredSign::Negative),
        ],
        tol,
    ))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variety {
    /// `G = G_y = G_u = 0`
    Bifurcation,
    /// `G = G_y = G_yy = 0`
    Hysteresis,
    /// Two folds at a common input value.
    DoubleLimit,
}

impl Variety {
    pub const ALL: [Variety; 3] = [Variety::Bifurcation, Variety::Hysteresis, Variety::DoubleLimit];
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchBox {
    pub y: (f64, f64),
    pub u: (f64, f64),
}

impl SearchBox {
    pub fn new(y: (f64, f64), u: (f64, f64)) -> Self {
        Self { y, u }
    }

    fn contains(&self, y: f64, u: f64) -> bool {
        let slack = 1e-9;
        y >= self.y.0 - slack && y <= self.y.1 + slack && u >= self.u.0 - slack && u <= self.u.1 + slack
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VarietyHit {
    pub variety: Variety,
    /// Lexicographically lowest solution; for the double-limit variety the
    /// two fold points `(y1, u)` and `(y2, u)` with `y1 < y2`.
    pub witness: Vec<(f64, f64)>,
    pub residuals: Vec<f64>,
    /// Number of distinct solutions found in the box.
    pub count: usize,
    /// Value of the freed parameter at the witness, for searches that let
    /// one parameter move.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub param: Option<f64>,
    /// Range of the freed parameter over all solutions found.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub param_span: Option<(f64, f64)>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct VarietyMembership {
    pub hits: Vec<VarietyHit>,
}

impl VarietyMembership {
    /// First variety in the order bifurcation, hysteresis, double-limit.
    pub fn variety(&self) -> Option<Variety> {
        self.hits.first().map(|h| h.variety)
    }

    pub fn contains(&self, v: Variety) -> bool {
        self.hits.iter().any(|h| h.variety == v)
    }

    pub fn hit(&self, v: Variety) -> Option<&VarietyHit> {
        self.hits.iter().find(|h| h.variety == v)
    }

    pub fn is_none(&self) -> bool {
        self.hits.is_empty()
    }
}

/// Options for [`variety_membership`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VarietySearch {
    pub seeds_per_axis: usize,
    pub max_iter: usize,
    /// Residual below which a polished root counts.
    pub tol: f64,
}

impl Default for VarietySearch {
    fn default() -> Self {
        Self {
            seeds_per_axis: 41,
            max_iter: 50,
            tol: 1e-8,
        }
    }
}

fn jet_at(b: &BoundProblem<'_>, y: f64, u: f64) -> PartialTable {
    b.taylor(y, u, 3, None).expect("order 3 within jet cap")
}

/// Distinct points (within `1e-6`) sorted lexicographically.
fn dedupe(mut pts: Vec<(Vec<f64>, f64)>) -> Vec<(Vec<f64>, f64)> {
    pts.sort_by(|a, b| {
        a.0.iter()
            .zip(&b.0)
            .map(|(p, q)| p.total_cmp(q))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut out: Vec<(Vec<f64>, f64)> = Vec::new();
    for p in pts {
        let dup = out.iter().any(|q| {
            p.0.iter().zip(&q.0).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt() < 1e-6
        });
        if !dup {
            out.push(p);
        }
    }
    out
}

fn seed_grid(bx: &SearchBox, n: usize) -> Vec<(f64, f64)> {
    let ys = linspace(bx.y.0, bx.y.1, n);
    let us = linspace(bx.u.0, bx.u.1, n);
    ys.iter().flat_map(|&y| us.iter().map(move |&u| (y, u))).collect()
}

fn polish_all<F>(seeds: &[(f64, f64)], opts: &VarietySearch, bx: &SearchBox, eval: F) -> Vec<(Vec<f64>, f64)>
where
    F: Fn(&[f64]) -> (Vec<f64>, Vec<Vec<f64>>) + Sync,
{
    let found: Vec<_> = seeds
        .par_iter()
        .filter_map(|&(y, u)| {
            let p = gauss_newton(&eval, &[y, u], opts.max_iter, opts.tol);
            (p.residual < opts.tol && bx.contains(p.x[0], p.x[1])).then_some((p.x, p.residual))
        })
        .collect();
    dedupe(found)
}

/// Solutions of `G = G_y = 0` in the box.
pub(crate) fn folds_in_box(b: &BoundProblem<'_>, bx: &SearchBox, opts: &VarietySearch) -> Vec<(f64, f64)> {
    let seeds = seed_grid(bx, opts.seeds_per_axis);
    polish_all(&seeds, opts, bx, |x| {
        let t = jet_at(b, x[0], x[1]);
        (
            vec![t.get(0, 0, 0), t.get(1, 0, 0)],
            vec![vec![t.get(1, 0, 0), t.get(0, 1, 0)], vec![t.get(2, 0, 0), t.get(1, 1, 0)]],
        )
    })
    .into_iter()
    .map(|(x, _)| (x[0], x[1]))
    .collect()
}

/// Searches the box for points of the transition varieties. Polished roots
/// with residual at or above `opts.tol` are discarded.
pub fn variety_membership(
    g: &BifurcationProblem,
    params: &ParamVector,
    bx: &SearchBox,
    opts: &VarietySearch,
) -> Result<VarietyMembership> {
    let b = g.bind(params)?;
    let seeds = seed_grid(bx, opts.seeds_per_axis);
    let mut hits = Vec::new();

    let bif = polish_all(&seeds, opts, bx, |x| {
        let t = jet_at(&b, x[0], x[1]);
        (
            vec![t.get(0, 0, 0), t.get(1, 0, 0), t.get(0, 1, 0)],
            vec![
                vec![t.get(1, 0, 0), t.get(0, 1, 0)],
                vec![t.get(2, 0, 0), t.get(1, 1, 0)],
                vec![t.get(1, 1, 0), t.get(0, 2, 0)],
            ],
        )
    });
    if let Some(first) = bif.first() {
        hits.push(VarietyHit {
            variety: Variety::Bifurcation,
            witness: vec![(first.0[0], first.0[1])],
            residuals: vec![first.1],
            count: bif.len(),
            param: None,
            param_span: None,
        });
    }

    let hys = polish_all(&seeds, opts, bx, |x| {
        let t = jet_at(&b, x[0], x[1]);
        (
            vec![t.get(0, 0, 0), t.get(1, 0, 0), t.get(2, 0, 0)],
            vec![
                vec![t.get(1, 0, 0), t.get(0, 1, 0)],
                vec![t.get(2, 0, 0), t.get(1, 1, 0)],
                vec![t.get(3, 0, 0), t.get(2, 1, 0)],
            ],
        )
    });
    if let Some(first) = hys.first() {
        hits.push(VarietyHit {
            variety: Variety::Hysteresis,
            witness: vec![(first.0[0], first.0[1])],
            residuals: vec![first.1],
            count: hys.len(),
            param: None,
            param_span: None,
        });
    }

    let folds = folds_in_box(&b, bx, opts);
    let du = (bx.u.1 - bx.u.0).abs() / (opts.seeds_per_axis.max(2) - 1) as f64;
    let mut pairs = Vec::new();
    for (i, &(y1, u1)) in folds.iter().enumerate() {
        for &(y2, u2) in &folds[i + 1..] {
            if (y1 - y2).abs() > 1e-4 && (u1 - u2).abs() <= du {
                pairs.push((y1.min(y2), y1.max(y2), 0.5 * (u1 + u2)));
            }
        }
    }
    let dl: Vec<(Vec<f64>, f64)> = pairs
        .par_iter()
        .filter_map(|&(y1, y2, u)| {
            let p = gauss_newton(
                |x: &[f64]| {
                    let a = jet_at(&b, x[0], x[2]);
                    let c = jet_at(&b, x[1], x[2]);
                    (
                        vec![a.get(0, 0, 0), a.get(1, 0, 0), c.get(0, 0, 0), c.get(1, 0, 0)],
                        vec![
                            vec![a.get(1, 0, 0), 0.0, a.get(0, 1, 0)],
                            vec![a.get(2, 0, 0), 0.0, a.get(1, 1, 0)],
                            vec![0.0, c.get(1, 0, 0), c.get(0, 1, 0)],
                            vec![0.0, c.get(2, 0, 0), c.get(1, 1, 0)],
                        ],
                    )
                },
                &[y1, y2, u],
                opts.max_iter,
                opts.tol,
            );
            let ok = p.residual < opts.tol
                && (p.x[0] - p.x[1]).abs() > 1e-4
                && bx.contains(p.x[0], p.x[2])
                && bx.contains(p.x[1], p.x[2]);
            ok.then(|| {
                let (lo, hi) = (p.x[0].min(p.x[1]), p.x[0].max(p.x[1]));
                (vec![lo, hi, p.x[2]], p.residual)
            })
        })
        .collect();
    let dl = dedupe(dl);
    if let Some(first) = dl.first() {
        hits.push(VarietyHit {
            variety: Variety::DoubleLimit,
            witness: vec![(first.0[0], first.0[2]), (first.0[1], first.0[2])],
            residuals: vec![first.1],
            count: dl.len(),
            param: None,
            param_span: None,
        });
    }
    Ok(VarietyMembership { hits })
}

fn span(found: &[(Vec<f64>, f64)], k: usize) -> Option<(f64, f64)> {
    found.iter().map(|f| f.0[k]).fold(None, |acc, v| match acc {
        None => Some((v, v)),
        Some((a, b)) => Some((a.min(v), b.max(v))),
    })
}

/// [`variety_membership`] with the parameter `free` also unknown and
/// confined to `range`. A hit means the variety crosses the slab
/// `free ∈ range` somewhere in the box; the witness parameter is returned
/// in [`VarietyHit::param`].
pub fn variety_membership_near(
    g: &BifurcationProblem,
    params: &ParamVector,
    bx: &SearchBox,
    free: &str,
    range: (f64, f64),
    opts: &VarietySearch,
) -> Result<VarietyMembership> {
    let (lo, hi) = (range.0.min(range.1), range.0.max(range.1));
    let center = 0.5 * (lo + hi);
    let base = g.bind(params)?;
    if !base.values().contains(free) {
        return Err(Error::UnknownParameter(free.to_string()));
    }
    let at = |y: f64, u: f64, p: f64| -> PartialTable {
        let vals = base.values().clone().with(free, p);
        g.bind(&vals)
            .and_then(|b| b.taylor(y, u, 3, Some(free)))
            .expect("parameter validated above")
    };
    let in_range = |p: f64| p >= lo - 1e-9 && p <= hi + 1e-9;
    let seeds = seed_grid(bx, opts.seeds_per_axis);
    let mut hits = Vec::new();

    // (condition row selector) -> rows of [value, d/dy, d/du, d/dp]
    let row = |t: &PartialTable, dy: usize, du: usize| {
        [t.get(dy, du, 0), t.get(dy + 1, du, 0), t.get(dy, du + 1, 0), t.get(dy, du, 1)]
    };
    let conditions: [(Variety, [(usize, usize); 3]); 2] = [
        (Variety::Bifurcation, [(0, 0), (1, 0), (0, 1)]),
        (Variety::Hysteresis, [(0, 0), (1, 0), (2, 0)]),
    ];
    for (variety, conds) in conditions {
        let found: Vec<_> = seeds
            .par_iter()
            .filter_map(|&(y, u)| {
                let p = gauss_newton(
                    |x: &[f64]| {
                        let t = at(x[0], x[1], x[2]);
                        let rows: Vec<[f64; 4]> = conds.iter().map(|&(a, b)| row(&t, a, b)).collect();
                        (
                            rows.iter().map(|r| r[0]).collect(),
                            rows.iter().map(|r| vec![r[1], r[2], r[3]]).collect(),
                        )
                    },
                    &[y, u, center],
                    opts.max_iter,
                    opts.tol,
                );
                (p.residual < opts.tol && bx.contains(p.x[0], p.x[1]) && in_range(p.x[2]))
                    .then_some((p.x, p.residual))
            })
            .collect();
        let found = dedupe(found);
        if let Some(first) = found.first() {
            hits.push(VarietyHit {
                variety,
                witness: vec![(first.0[0], first.0[1])],
                residuals: vec![first.1],
                count: found.len(),
                param: Some(first.0[2]),
                param_span: span(&found, 2),
            });
        }
    }

    let folds = folds_in_box(&base, bx, opts);
    let mut pairs = Vec::new();
    for (i, &(y1, u1)) in folds.iter().enumerate() {
        for &(y2, u2) in &folds[i + 1..] {
            if (y1 - y2).abs() > 1e-4 {
                pairs.push((y1.min(y2), y1.max(y2), 0.5 * (u1 + u2)));
            }
        }
    }
    let dl: Vec<(Vec<f64>, f64)> = pairs
        .par_iter()
        .filter_map(|&(y1, y2, u)| {
            let p = gauss_newton(
                |x: &[f64]| {
                    let a = at(x[0], x[2], x[3]);
                    let c = at(x[1], x[2], x[3]);
                    (
                        vec![a.get(0, 0, 0), a.get(1, 0, 0), c.get(0, 0, 0), c.get(1, 0, 0)],
                        vec![
                            vec![a.get(1, 0, 0), 0.0, a.get(0, 1, 0), a.get(0, 0, 1)],
                            vec![a.get(2, 0, 0), 0.0, a.get(1, 1, 0), a.get(1, 0, 1)],
                            vec![0.0, c.get(1, 0, 0), c.get(0, 1, 0), c.get(0, 0, 1)],
                            vec![0.0, c.get(2, 0, 0), c.get(1, 1, 0), c.get(1, 0, 1)],
                        ],
                    )
                },
                &[y1, y2, u, center],
                opts.max_iter,
                opts.tol,
            );
            let ok = p.residual < opts.tol
                && (p.x[0] - p.x[1]).abs() > 1e-4
                && bx.contains(p.x[0], p.x[2])
                && bx.contains(p.x[1], p.x[2])
                && in_range(p.x[3]);
            ok.then(|| {
                let (a, b) = (p.x[0].min(p.x[1]), p.x[0].max(p.x[1]));
                (vec![a, b, p.x[2], p.x[3]], p.residual)
            })
        })
        .collect();
    let dl = dedupe(dl);
    if let Some(first) = dl.first() {
        hits.push(VarietyHit {
            variety: Variety::DoubleLimit,
            witness: vec![(first.0[0], first.0[2]), (first.0[1], first.0[2])],
            residuals: vec![first.1],
            count: dl.len(),
            param: Some(first.0[3]),
            param_span: span(&dl, 3),
        });
    }
    Ok(VarietyMembership { hits })
}
