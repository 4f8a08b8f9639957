//! Grids over one or two unfolding parameters, classified per cell.
//!
//! Static charts trace and classify the bifurcation diagram in every cell;
//! dynamic charts run a simulation probe. Both record class boundaries as
//! midpoints between neighboring cells of different class.

use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuits::{wcusp_circuit, BifurcationProblem, CircuitOde, ParamVector};
use crate::continuation::{classify, trace, DiagramClass, DiagramLabel};
use crate::dynamics::{integrate, Channel, InputSignal, IntegratorOptions};
use crate::error::{Error, Result};
use crate::nonlinearity::SigmoidFamily;
use crate::regimes::{classify_trajectory, default_ics, probe_bistability, ClassifyOptions, RegimeLabel, RegimeReport};
use crate::singularity::{variety_membership_near, SearchBox, Variety, VarietySearch};

pub const MAX_RESOLUTION: usize = 201;
/// Axis name for the constant input in dynamic scans.
pub const INPUT_AXIS: &str = "u";
/// Class given to cells whose computation failed.
pub const FAILED_CLASS: &str = "failed";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub name: String,
    pub lo: f64,
    pub hi: f64,
    pub resolution: usize,
}

impl Axis {
    pub fn new(name: &str, lo: f64, hi: f64, resolution: usize) -> Self {
        Self {
            name: name.to_string(),
            lo,
            hi,
            resolution,
        }
    }

    pub fn values(&self) -> Vec<f64> {
        crate::numeric::linspace(self.lo, self.hi, self.resolution)
    }

    /// Distance between neighboring grid values, zero for a single cell.
    pub fn spacing(&self) -> f64 {
        if self.resolution > 1 {
            (self.hi - self.lo) / (self.resolution - 1) as f64
        } else {
            0.0
        }
    }

    fn validate(&self) -> Result<()> {
        if self.resolution == 0 || self.resolution > MAX_RESOLUTION {
            return Err(Error::InvalidArgument(format!(
                "axis {}: resolution {} outside 1..={MAX_RESOLUTION}",
                self.name, self.resolution
            )));
        }
        if !(self.lo.is_finite() && self.hi.is_finite() && self.lo <= self.hi) {
            return Err(Error::InvalidArgument(format!("axis {}: bad range", self.name)));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VarietyFlags {
    pub bifurcation: bool,
    pub hysteresis: bool,
    pub double_limit: bool,
}

impl VarietyFlags {
    pub fn any(&self) -> bool {
        self.bifurcation || self.hysteresis || self.double_limit
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChartCell {
    /// Grid index per axis.
    pub index: Vec<usize>,
    pub coords: Vec<f64>,
    pub class: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagram: Option<DiagramClass>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regime: Option<RegimeReport>,
    pub varieties: VarietyFlags,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Boundary {
    /// The two classes, in sorted order.
    pub between: [String; 2],
    /// Midpoints between adjacent cells of these classes, sorted.
    pub points: Vec<Vec<f64>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChartKind {
    Static,
    Dynamic,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParameterChart {
    pub kind: ChartKind,
    /// Problem label or circuit kind.
    pub source: String,
    pub fixed: ParamVector,
    pub axes: Vec<Axis>,
    /// Row-major, last axis fastest.
    pub cells: Vec<ChartCell>,
    pub boundaries: Vec<Boundary>,
}

impl ParameterChart {
    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.resolution).collect()
    }

    pub fn cell(&self, index: &[usize]) -> Option<&ChartCell> {
        flat_index(&self.shape(), index).and_then(|i| self.cells.get(i))
    }

    pub fn classes(&self) -> Vec<&str> {
        let mut v: Vec<&str> = self.cells.iter().map(|c| c.class.as_str()).collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    pub fn write_json<W: Write>(&self, w: W) -> Result<()> {
        serde_json::to_writer_pretty(w, self)?;
        Ok(())
    }

    /// One row per cell: axis values, class, variety flags and a few
    /// summary numbers.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["cell".to_string()];
        header.extend(self.axes.iter().map(|a| a.name.clone()));
        header.extend(
            [
                "class",
                "bifurcation",
                "hysteresis",
                "double_limit",
                "fold_count",
                "period",
                "attractors",
                "error",
            ]
            .map(String::from),
        );
        out.write_record(&header)?;
        let opt = |v: Option<String>| v.unwrap_or_default();
        for (i, c) in self.cells.iter().enumerate() {
            let mut row = vec![i.to_string()];
            row.extend(c.coords.iter().map(|v| format!("{v}")));
            row.push(c.class.clone());
            row.push(c.varieties.bifurcation.to_string());
            row.push(c.varieties.hysteresis.to_string());
            row.push(c.varieties.double_limit.to_string());
            row.push(opt(c.diagram.as_ref().map(|d| d.fold_count.to_string())));
            row.push(opt(c.regime.as_ref().and_then(|r| r.evidence.period).map(|p| format!("{p}"))));
            row.push(opt(c.regime.as_ref().and_then(|r| r.evidence.attractors).map(|n| n.to_string())));
            row.push(c.error.clone().unwrap_or_default());
            out.write_record(&row)?;
        }
        out.flush()?;
        Ok(())
    }
}

fn flat_index(shape: &[usize], index: &[usize]) -> Option<usize> {
    if shape.len() != index.len() || index.iter().zip(shape).any(|(i, n)| i >= n) {
        return None;
    }
    Some(index.iter().zip(shape).fold(0, |acc, (i, n)| acc * n + i))
}

fn grid(axes: &[Axis]) -> Vec<(Vec<usize>, Vec<f64>)> {
    let values: Vec<Vec<f64>> = axes.iter().map(Axis::values).collect();
    let mut out = vec![(Vec::new(), Vec::new())];
    for vals in &values {
        out = out
            .into_iter()
            .flat_map(|(idx, co)| {
                vals.iter().enumerate().map(move |(k, &v)| {
                    let mut i = idx.clone();
                    let mut c = co.clone();
                    i.push(k);
                    c.push(v);
                    (i, c)
                })
            })
            .collect();
    }
    out
}

fn validate_axes(axes: &[Axis], allowed: impl Fn(&str) -> bool) -> Result<()> {
    if axes.is_empty() || axes.len() > 2 {
        return Err(Error::InvalidArgument(format!("expected 1 or 2 axes, got {}", axes.len())));
    }
    if axes.len() == 2 && axes[0].name == axes[1].name {
        return Err(Error::DuplicateParameter(axes[0].name.clone()));
    }
    for a in axes {
        a.validate()?;
        if !allowed(&a.name) {
            return Err(Error::UnknownParameter(a.name.clone()));
        }
    }
    Ok(())
}

fn boundaries(axes: &[Axis], cells: &[ChartCell]) -> Vec<Boundary> {
    let shape: Vec<usize> = axes.iter().map(|a| a.resolution).collect();
    let mut map: BTreeMap<[String; 2], Vec<Vec<f64>>> = BTreeMap::new();
    for c in cells {
        for k in 0..axes.len() {
            let mut next = c.index.clone();
            next[k] += 1;
            let Some(j) = flat_index(&shape, &next) else { continue };
            let d = &cells[j];
            if d.class != c.class {
                let mut pair = [c.class.clone(), d.class.clone()];
                pair.sort();
                let mid = c.coords.iter().zip(&d.coords).map(|(a, b)| 0.5 * (a + b)).collect();
                map.entry(pair).or_default().push(mid);
            }
        }
    }
    map.into_iter()
        .map(|(between, mut points)| {
            points.sort_by(|a, b| {
                a.iter()
                    .zip(b)
                    .map(|(p, q)| p.total_cmp(q))
                    .find(|o| o.is_ne())
                    .unwrap_or(std::cmp::Ordering::Equal)
            });
            Boundary { between, points }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StaticScanOptions {
    pub u_window: (f64, f64),
    pub y_window: (f64, f64),
    /// Continuation step; defaults per [`crate::continuation::default_step`].
    #[serde(default)]
    pub step: Option<f64>,
    #[serde(default = "yes")]
    pub varieties: bool,
    #[serde(default = "variety_seeds")]
    pub variety_seeds: usize,
}

fn yes() -> bool {
    true
}

fn variety_seeds() -> usize {
    15
}

impl StaticScanOptions {
    pub fn new(u_window: (f64, f64), y_window: (f64, f64)) -> Self {
        Self {
            u_window,
            y_window,
            step: None,
            varieties: true,
            variety_seeds: variety_seeds(),
        }
    }
}

fn cell_params(fixed: &ParamVector, axes: &[Axis], coords: &[f64]) -> ParamVector {
    let mut p = fixed.clone();
    for (a, &v) in axes.iter().zip(coords) {
        p.set(&a.name, v);
    }
    p
}

/// Traces and classifies the diagram of `p` in every cell. A variety flag
/// is set when the variety crosses the cell, found by letting each axis
/// parameter move within half a grid spacing of the cell center.
pub fn scan_static(
    p: &BifurcationProblem,
    fixed: &ParamVector,
    axes: &[Axis],
    opts: &StaticScanOptions,
) -> Result<ParameterChart> {
    validate_axes(axes, |n| p.declared_params().contains(n))?;
    p.bind(fixed)?;
    let bx = SearchBox::new(opts.y_window, opts.u_window);
    let search = VarietySearch {
        seeds_per_axis: opts.variety_seeds,
        ..Default::default()
    };
    let cells: Vec<ChartCell> = grid(axes)
        .into_par_iter()
        .map(|(index, coords)| {
            let params = cell_params(fixed, axes, &coords);
            let mut cell = ChartCell {
                index,
                coords: coords.clone(),
                class: FAILED_CLASS.to_string(),
                diagram: None,
                regime: None,
                varieties: VarietyFlags::default(),
                error: None,
            };
            match trace(p, &params, opts.u_window, opts.y_window, opts.step) {
                Ok(d) => {
                    let c = classify(&d);
                    cell.class = c.label.as_str().to_string();
                    cell.diagram = Some(c);
                }
                Err(e) => cell.error = Some(e.to_string()),
            }
            if opts.varieties {
                for (a, &v) in axes.iter().zip(&coords) {
                    let h = 0.5 * a.spacing();
                    match variety_membership_near(p, &params, &bx, &a.name, (v - h, v + h), &search) {
                        Ok(m) => {
                            cell.varieties.bifurcation |= m.contains(Variety::Bifurcation);
                            cell.varieties.hysteresis |= m.contains(Variety::Hysteresis);
                            cell.varieties.double_limit |= m.contains(Variety::DoubleLimit);
                        }
                        Err(e) => cell.error = Some(e.to_string()),
                    }
                }
            }
            cell
        })
        .collect();
    Ok(ParameterChart {
        kind: ChartKind::Static,
        source: p.label().to_string(),
        fixed: fixed.clone(),
        boundaries: boundaries(axes, &cells),
        axes: axes.to_vec(),
        cells,
    })
}

/// Per-cell simulation protocol for [`scan_dynamic`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "probe", rename_all = "kebab-case")]
#[serde(deny_unknown_fields)]
pub enum Probe {
    /// One run from `x0`, classified after the default transient cut.
    Classify { t_end: f64, x0: Vec<f64> },
    /// [`probe_bistability`] from `ics` seeded initial conditions.
    Bistability {
        t_end: f64,
        ics: usize,
        #[serde(default)]
        seed: u64,
    },
}

impl Probe {
    /// Default run length: 200 for two-timescale kinds, `10/ε_u` for bursters.
    pub fn default_t_end(ode: &CircuitOde) -> f64 {
        match ode.timescales().eps_u {
            Some(e) => 10.0 / e,
            None => 200.0,
        }
    }

    pub fn run(&self, ode: &CircuitOde, u: f64) -> Result<RegimeReport> {
        match self {
            Probe::Classify { t_end, x0 } => {
                let tr = integrate(
                    ode,
                    &[InputSignal::constant(Channel::U, u)],
                    x0,
                    *t_end,
                    &IntegratorOptions::default(),
                )?;
                classify_trajectory(&tr, &ClassifyOptions::default())
            }
            Probe::Bistability { t_end, ics, seed } => {
                probe_bistability(ode, u, &default_ics(ode.dim(), *ics, *seed), *t_end)
            }
        }
    }
}

/// Runs `probe` in every cell. Axes name circuit parameters or [`INPUT_AXIS`];
/// `u` is the input wherever it is not an axis. Failed cells carry the class
/// [`FAILED_CLASS`] and the error message.
pub fn scan_dynamic(template: &CircuitOde, u: f64, axes: &[Axis], probe: &Probe) -> Result<ParameterChart> {
    validate_axes(axes, |n| n == INPUT_AXIS || template.params().contains(n))?;
    let cells: Vec<ChartCell> = grid(axes)
        .into_par_iter()
        .map(|(index, coords)| {
            let mut cell = ChartCell {
                index,
                coords: coords.clone(),
                class: FAILED_CLASS.to_string(),
                diagram: None,
                regime: None,
                varieties: VarietyFlags::default(),
                error: None,
            };
            let mut input = u;
            let mut ode = Ok(template.clone());
            for (a, &v) in axes.iter().zip(&coords) {
                if a.name == INPUT_AXIS {
                    input = v;
                } else {
                    ode = ode.and_then(|o| o.with_param(&a.name, v));
                }
            }
            match ode.and_then(|o| probe.run(&o, input)) {
                Ok(r) => {
                    cell.class = r.label.as_str().to_string();
                    cell.regime = Some(r);
                }
                Err(e) => cell.error = Some(e.to_string()),
            }
            cell
        })
        .collect();
    let mut fixed = template.params().clone();
    fixed.set(INPUT_AXIS, u);
    Ok(ParameterChart {
        kind: ChartKind::Dynamic,
        source: template.kind().as_str().to_string(),
        fixed,
        boundaries: boundaries(axes, &cells),
        axes: axes.to_vec(),
        cells,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub label: String,
    /// Flat cell indices, ascending.
    pub cells: Vec<usize>,
    /// Per-axis `(min, max)` of the cell coordinates; empty when no cell matches.
    pub bounding_box: Vec<(f64, f64)>,
}

impl Region {
    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Center of the bounding box.
    pub fn midpoint(&self) -> Option<Vec<f64>> {
        (!self.is_empty()).then(|| self.bounding_box.iter().map(|(a, b)| 0.5 * (a + b)).collect())
    }
}

/// Largest 4-connected set of cells with class `label`. Ties go to the
/// component containing the lowest cell index.
pub fn find_region(chart: &ParameterChart, label: &str) -> Result<Region> {
    let known = match chart.kind {
        ChartKind::Static => DiagramLabel::parse(label).is_some(),
        ChartKind::Dynamic => RegimeLabel::parse(label).is_some(),
    };
    if !known {
        return Err(Error::UnknownLabel(label.to_string()));
    }
    let shape = chart.shape();
    let n = chart.cells.len();
    let mut seen = vec![false; n];
    let mut best: Vec<usize> = Vec::new();
    for start in 0..n {
        if seen[start] || chart.cells[start].class != label {
            continue;
        }
        let mut comp = Vec::new();
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(i) = stack.pop() {
            comp.push(i);
            let idx = &chart.cells[i].index;
            for k in 0..idx.len() {
                for step in [-1i64, 1] {
                    let v = idx[k] as i64 + step;
                    if v < 0 {
                        continue;
                    }
                    let mut nb = idx.clone();
                    nb[k] = v as usize;
                    if let Some(j) = flat_index(&shape, &nb) {
                        if !seen[j] && chart.cells[j].class == label {
                            seen[j] = true;
                            stack.push(j);
                        }
                    }
                }
            }
        }
        if comp.len() > best.len() {
            best = comp;
        }
    }
    best.sort_unstable();
    let bounding_box = (0..chart.axes.len())
        .filter(|_| !best.is_empty())
        .map(|k| {
            best.iter().map(|&i| chart.cells[i].coords[k]).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
                (a.min(v), b.max(v))
            })
        })
        .collect();
    Ok(Region {
        label: label.to_string(),
        cells: best,
        bounding_box,
    })
}

/// Bracket for the `alpha` search near the winged cusp: the range of `alpha`
/// at which the static winged-cusp circuit crosses the bifurcation variety,
/// widened by `margin` on both sides. `None` if no crossing is found in
/// `alpha ∈ [-2, 2]`.
pub fn alpha_bracket(
    s: &SigmoidFamily,
    delta: f64,
    beta: f64,
    gamma: f64,
    margin: f64,
) -> Result<Option<(f64, f64)>> {
    let p = wcusp_circuit(s, delta)?;
    let params = ParamVector::new().with("beta", beta).with("gamma", gamma);
    let bx = SearchBox::new((-1.0, 1.0), (-3.0, 3.0));
    let m = variety_membership_near(&p, &params, &bx, "alpha", (-2.0, 2.0), &VarietySearch::default())?;
    Ok(m.hit(Variety::Bifurcation)
        .and_then(|h| h.param_span)
        .map(|(a, b)| (a - margin, b + margin)))
}
