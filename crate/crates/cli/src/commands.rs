use std::io::BufReader;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use octk::continuation::{classify, trace};
use octk::dynamics::{integrate, Trajectory};
use octk::protocols::{reproduce, Figure};
use octk::regimes::{classify_trajectory, default_ics, probe_bistability};
use octk::scan::{find_region, scan_dynamic, scan_static, ParameterChart, Probe, StaticScanOptions};
use octk::singularity::{check_hysteresis, check_hysteresis_unfolding, check_wcusp};

use crate::config::{
    self, ClassifyConfig, CommandConfig, CommandKind, RecognizeConfig, ReproduceConfig, RunConfig, ScanConfig,
    SimulateConfig, SingularityKind, TraceConfig,
};
use crate::CliError;

pub const DEFAULT_OUT: &str = "octk-out";
/// Sample cap for trajectory CSVs written by `reproduce`.
const FIGURE_SAMPLES: usize = 20_000;

/// Files produced by a command, written only once the computation succeeded.
#[derive(Default)]
struct Outputs {
    files: Vec<(String, Vec<u8>)>,
    extra: serde_json::Map<String, Value>,
    failed: Option<String>,
}

impl Outputs {
    fn json<T: Serialize>(&mut self, name: &str, v: &T) -> Result<(), CliError> {
        let mut bytes = serde_json::to_vec_pretty(v).map_err(output_err)?;
        bytes.push(b'\n');
        self.files.push((name.to_string(), bytes));
        Ok(())
    }

    fn with<F>(&mut self, name: &str, f: F) -> Result<(), CliError>
    where
        F: FnOnce(&mut Vec<u8>) -> octk::Result<()>,
    {
        let mut bytes = Vec::new();
        f(&mut bytes)?;
        self.files.push((name.to_string(), bytes));
        Ok(())
    }

    fn chart(&mut self, stem: &str, chart: &ParameterChart) -> Result<(), CliError> {
        self.with(&format!("{stem}.csv"), |b| chart.write_csv(b))?;
        self.json(&format!("{stem}.json"), chart)
    }
}

fn output_err(e: impl std::fmt::Display) -> CliError {
    CliError::Numerical(format!("writing output: {e}"))
}

pub fn reproduce_entry(
    figure: Option<String>,
    config_path: Option<PathBuf>,
    out: Option<PathBuf>,
    seed: Option<u64>,
) -> Result<(), CliError> {
    let mut rc = match config_path {
        Some(p) => config::load(&p, CommandKind::Reproduce)?,
        None => {
            let name = figure
                .clone()
                .ok_or_else(|| CliError::Config("reproduce needs a figure name or --config".into()))?;
            let fig = Figure::parse(&name).ok_or_else(|| unknown_figure(&name))?;
            RunConfig {
                command: CommandKind::Reproduce,
                seed: 0,
                out: None,
                body: CommandConfig::Reproduce(ReproduceConfig { figure: fig }),
            }
        }
    };
    if let (Some(name), CommandConfig::Reproduce(c)) = (&figure, &rc.body) {
        let fig = Figure::parse(name).ok_or_else(|| unknown_figure(name))?;
        if fig != c.figure {
            return Err(CliError::Config(format!(
                "figure `{name}` conflicts with `{}` in the config",
                c.figure.as_str()
            )));
        }
    }
    if let Some(s) = seed {
        rc.seed = s;
    }
    if out.is_some() {
        rc.out = out;
    }
    execute(rc)
}

fn unknown_figure(name: &str) -> CliError {
    let known: Vec<&str> = Figure::ALL.iter().map(|f| f.as_str()).collect();
    CliError::Config(format!("unknown figure `{name}`, expected one of {}", known.join(", ")))
}

pub fn execute(mut rc: RunConfig) -> Result<(), CliError> {
    if let CommandConfig::Scan(ScanConfig::Dynamic {
        probe: Probe::Bistability { seed, .. },
        ..
    }) = &mut rc.body
    {
        *seed = rc.seed;
    }
    let outputs = match &rc.body {
        CommandConfig::Recognize(c) => recognize(c)?,
        CommandConfig::Trace(c) => run_trace(c)?,
        CommandConfig::Simulate(c) => simulate(c)?,
        CommandConfig::Classify(c) => run_classify(c, rc.seed)?,
        CommandConfig::Scan(c) => scan(c)?,
        CommandConfig::Reproduce(c) => run_reproduce(c, rc.seed)?,
    };
    let out = rc.out.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    write_all(&out, &rc, &outputs)?;
    match outputs.failed {
        Some(m) => Err(CliError::ChecksFailed(m)),
        None => Ok(()),
    }
}

fn write_all(out: &Path, rc: &RunConfig, o: &Outputs) -> Result<(), CliError> {
    std::fs::create_dir_all(out).map_err(output_err)?;
    for (name, bytes) in &o.files {
        std::fs::write(out.join(name), bytes).map_err(output_err)?;
    }
    let mut artifacts: Vec<&str> = o.files.iter().map(|f| f.0.as_str()).collect();
    artifacts.sort_unstable();
    let mut manifest = json!({
        "toolkit": "octk",
        "version": octk::VERSION,
        "command": rc.command.as_str(),
        "seed": rc.seed,
        "config": rc.body.to_value().map_err(|e| CliError::Config(e.to_string()))?,
        "artifacts": artifacts,
        "status": if o.failed.is_some() { "checks-failed" } else { "ok" },
    });
    manifest.as_object_mut().unwrap().extend(o.extra.clone());
    let mut bytes = serde_json::to_vec_pretty(&manifest).map_err(output_err)?;
    bytes.push(b'\n');
    std::fs::write(out.join("manifest.json"), bytes).map_err(output_err)
}

fn recognize(c: &RecognizeConfig) -> Result<Outputs, CliError> {
    let p = c.problem.build()?;
    let verdict = match c.singularity {
        SingularityKind::Hysteresis => check_hysteresis(&p, c.at, &c.params, &c.tolerance)?,
        SingularityKind::HysteresisUnfolding => check_hysteresis_unfolding(&p, c.at, &c.params, &c.tolerance)?,
        SingularityKind::Wcusp => check_wcusp(&p, c.at, &c.params, &c.tolerance)?,
    };
    let mut o = Outputs::default();
    o.json("verdict.json", &verdict)?;
    Ok(o)
}

fn run_trace(c: &TraceConfig) -> Result<Outputs, CliError> {
    let p = c.problem.build()?;
    let d = trace(&p, &c.params, c.u_window, c.y_window, c.step)?;
    let summary = json!({
        "problem": d.problem,
        "params": d.params,
        "arclength_step": d.arclength_step,
        "class": classify(&d),
        "folds": d.folds,
    });
    let mut o = Outputs::default();
    o.with("diagram.csv", |b| d.write_csv(b))?;
    o.json("summary.json", &summary)?;
    Ok(o)
}

fn simulate(c: &SimulateConfig) -> Result<Outputs, CliError> {
    let tr = integrate(&c.ode, &c.signals, &c.x0, c.t_end, &c.options)?;
    let mut o = Outputs::default();
    o.with("trajectory.csv", |b| tr.write_csv(b))?;
    Ok(o)
}

fn run_classify(c: &ClassifyConfig, seed: u64) -> Result<Outputs, CliError> {
    let report = match (&c.trajectory, &c.probe) {
        (Some(path), None) => {
            let f = std::fs::File::open(path)
                .map_err(|e| CliError::Config(format!("field `trajectory`: {}: {e}", path.display())))?;
            let tr = Trajectory::read_csv(BufReader::new(f))
                .map_err(|e| CliError::Config(format!("field `trajectory`: {}: {e}", path.display())))?;
            classify_trajectory(&tr, &c.options)?
        }
        (None, Some(p)) => {
            let ics = default_ics(p.ode.dim(), p.ics, seed);
            probe_bistability(&p.ode, p.u, &ics, p.t_end)?
        }
        _ => {
            return Err(CliError::Config(
                "exactly one of `trajectory` and `probe` must be given".into(),
            ))
        }
    };
    let mut o = Outputs::default();
    o.json("report.json", &report)?;
    Ok(o)
}

fn scan(c: &ScanConfig) -> Result<Outputs, CliError> {
    let (chart, region) = match c {
        ScanConfig::Static {
            problem,
            fixed,
            axes,
            u_window,
            y_window,
            step,
            varieties,
            variety_seeds,
            region,
        } => {
            let p = problem.build()?;
            let opts = StaticScanOptions {
                step: *step,
                varieties: *varieties,
                variety_seeds: *variety_seeds,
                ..StaticScanOptions::new(*u_window, *y_window)
            };
            (scan_static(&p, fixed, axes, &opts)?, region)
        }
        ScanConfig::Dynamic {
            ode,
            u,
            axes,
            probe,
            region,
        } => (scan_dynamic(ode, *u, axes, probe)?, region),
    };
    let mut o = Outputs::default();
    o.chart("chart", &chart)?;
    if let Some(label) = region {
        let r = find_region(&chart, label)?;
        o.json("region.json", &r)?;
    }
    Ok(o)
}

fn run_reproduce(c: &ReproduceConfig, seed: u64) -> Result<Outputs, CliError> {
    let run = reproduce(c.figure, seed)?;
    let mut o = Outputs::default();
    for (name, tr) in &run.trajectories {
        let d = tr.decimated(FIGURE_SAMPLES);
        o.with(&format!("{name}.csv"), |b| d.write_csv(b))?;
    }
    for (name, rep) in &run.reports {
        o.json(&format!("{name}.report.json"), rep)?;
    }
    for (name, chart) in &run.charts {
        o.chart(name, chart)?;
    }
    o.json("checks.json", &run.checks)?;
    o.extra.insert("settings".into(), json!(run.settings));
    o.extra.insert("checks".into(), json!(run.checks));
    if !run.passed() {
        let failed: Vec<&str> = run.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
        o.failed = Some(format!("{}: {}", c.figure.as_str(), failed.join(", ")));
    }
    Ok(o)
}
