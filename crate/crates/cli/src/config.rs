//! Run configuration files.
//!
//! A config is a JSON object with optional `command`, `seed` and `out` keys
//! and the options of one command. A manifest written by a previous run is
//! also accepted and replays that run.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use octk::circuits::{
    hysteresis_circuit, normal_form, wcusp_circuit, BifurcationProblem, CircuitOde, NormalFormKind, ParamVector,
    SignConvention, DEFAULT_DELTA,
};
use octk::dynamics::{InputSignal, IntegratorOptions};
use octk::nonlinearity::SigmoidFamily;
use octk::protocols::Figure;
use octk::regimes::ClassifyOptions;
use octk::scan::{Axis, Probe};
use octk::singularity::Tolerance;

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CommandKind {
    Recognize,
    Trace,
    Simulate,
    Classify,
    Scan,
    Reproduce,
}

impl CommandKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CommandKind::Recognize => "recognize",
            CommandKind::Trace => "trace",
            CommandKind::Simulate => "simulate",
            CommandKind::Classify => "classify",
            CommandKind::Scan => "scan",
            CommandKind::Reproduce => "reproduce",
        }
    }
}

fn tanh() -> SigmoidFamily {
    SigmoidFamily::TANH
}

fn dynamic() -> SignConvention {
    SignConvention::Dynamic
}

fn default_delta() -> f64 {
    DEFAULT_DELTA
}

/// Static problem: a built-in circuit or normal form, the fast subsystem of
/// a circuit ODE, or an explicit expression.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ProblemSpec {
    NormalForm {
        form: NormalFormKind,
    },
    HysteresisCircuit {
        #[serde(default = "tanh")]
        sigmoid: SigmoidFamily,
        #[serde(default = "dynamic")]
        convention: SignConvention,
    },
    WcuspCircuit {
        #[serde(default = "tanh")]
        sigmoid: SigmoidFamily,
        #[serde(default = "default_delta")]
        delta: f64,
    },
    FastSubsystem {
        ode: CircuitOde,
    },
    Expression {
        problem: BifurcationProblem,
    },
}

impl ProblemSpec {
    pub fn build(&self) -> octk::Result<BifurcationProblem> {
        match self {
            ProblemSpec::NormalForm { form } => Ok(normal_form(*form)),
            ProblemSpec::HysteresisCircuit { sigmoid, convention } => Ok(hysteresis_circuit(sigmoid, *convention)),
            ProblemSpec::WcuspCircuit { sigmoid, delta } => wcusp_circuit(sigmoid, *delta),
            ProblemSpec::FastSubsystem { ode } => ode.fast_problem(),
            ProblemSpec::Expression { problem } => Ok(problem.clone()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SingularityKind {
    Hysteresis,
    HysteresisUnfolding,
    Wcusp,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecognizeConfig {
    pub problem: ProblemSpec,
    pub singularity: SingularityKind,
    #[serde(default)]
    pub params: ParamVector,
    #[serde(default)]
    pub at: (f64, f64),
    #[serde(default)]
    pub tolerance: Tolerance,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceConfig {
    pub problem: ProblemSpec,
    #[serde(default)]
    pub params: ParamVector,
    pub u_window: (f64, f64),
    pub y_window: (f64, f64),
    #[serde(default)]
    pub step: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub ode: CircuitOde,
    #[serde(default)]
    pub signals: Vec<InputSignal>,
    pub x0: Vec<f64>,
    pub t_end: f64,
    #[serde(default)]
    pub options: IntegratorOptions,
}

fn eight() -> usize {
    8
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BistabilityProbeConfig {
    pub ode: CircuitOde,
    #[serde(default)]
    pub u: f64,
    pub t_end: f64,
    #[serde(default = "eight")]
    pub ics: usize,
}

/// Classify a stored trajectory, or run a multi-start probe. Exactly one of
/// `trajectory` and `probe` must be given.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifyConfig {
    #[serde(default)]
    pub trajectory: Option<PathBuf>,
    #[serde(default)]
    pub options: ClassifyOptions,
    #[serde(default)]
    pub probe: Option<BistabilityProbeConfig>,
}

fn yes() -> bool {
    true
}

fn fifteen() -> usize {
    15
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ScanConfig {
    Static {
        problem: ProblemSpec,
        #[serde(default)]
        fixed: ParamVector,
        axes: Vec<Axis>,
        u_window: (f64, f64),
        y_window: (f64, f64),
        #[serde(default)]
        step: Option<f64>,
        #[serde(default = "yes")]
        varieties: bool,
        #[serde(default = "fifteen")]
        variety_seeds: usize,
        #[serde(default)]
        region: Option<String>,
    },
    Dynamic {
        ode: CircuitOde,
        #[serde(default)]
        u: f64,
        axes: Vec<Axis>,
        probe: Probe,
        #[serde(default)]
        region: Option<String>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReproduceConfig {
    pub figure: Figure,
}

#[derive(Clone, Debug, PartialEq)]
pub enum CommandConfig {
    Recognize(RecognizeConfig),
    Trace(TraceConfig),
    Simulate(SimulateConfig),
    Classify(ClassifyConfig),
    Scan(ScanConfig),
    Reproduce(ReproduceConfig),
}

impl CommandConfig {
    pub fn to_value(&self) -> serde_json::Result<Value> {
        match self {
            CommandConfig::Recognize(c) => serde_json::to_value(c),
            CommandConfig::Trace(c) => serde_json::to_value(c),
            CommandConfig::Simulate(c) => serde_json::to_value(c),
            CommandConfig::Classify(c) => serde_json::to_value(c),
            CommandConfig::Scan(c) => serde_json::to_value(c),
            CommandConfig::Reproduce(c) => serde_json::to_value(c),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub command: CommandKind,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub body: CommandConfig,
}

fn parse_body<T: DeserializeOwned>(v: Value) -> Result<T, CliError> {
    serde_path_to_error::deserialize(v).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        if path == "." {
            CliError::Config(inner.to_string())
        } else {
            CliError::Config(format!("field `{path}`: {inner}"))
        }
    })
}

pub fn parse_command(command: CommandKind, body: Value) -> Result<CommandConfig, CliError> {
    Ok(match command {
        CommandKind::Recognize => CommandConfig::Recognize(parse_body(body)?),
        CommandKind::Trace => CommandConfig::Trace(parse_body(body)?),
        CommandKind::Simulate => CommandConfig::Simulate(parse_body(body)?),
        CommandKind::Classify => CommandConfig::Classify(parse_body(body)?),
        CommandKind::Scan => CommandConfig::Scan(parse_body(body)?),
        CommandKind::Reproduce => CommandConfig::Reproduce(parse_body(body)?),
    })
}

fn take_seed(obj: &mut Map<String, Value>) -> Result<Option<u64>, CliError> {
    match obj.remove("seed") {
        None | Some(Value::Null) => Ok(None),
        Some(v) => v
            .as_u64()
            .map(Some)
            .ok_or_else(|| CliError::Config("field `seed`: expected a non-negative integer".into())),
    }
}

/// Reads a config (or a manifest) for `command`. Relative paths inside the
/// config are resolved against the config file's directory.
pub fn load(path: &Path, command: CommandKind) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
    let value: Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("config {} is not valid JSON: {e}", path.display())))?;
    let Value::Object(mut obj) = value else {
        return Err(CliError::Config("config must be a JSON object".into()));
    };

    let is_manifest = obj.get("toolkit").and_then(Value::as_str) == Some("octk");
    let (declared, seed, out, body) = if is_manifest {
        let declared = obj.remove("command");
        let seed = take_seed(&mut obj)?;
        let body = obj
            .remove("config")
            .ok_or_else(|| CliError::Config("field `config`: missing in manifest".into()))?;
        (declared, seed, None, body)
    } else {
        let declared = obj.remove("command");
        let seed = take_seed(&mut obj)?;
        let out = match obj.remove("out") {
            None | Some(Value::Null) => None,
            Some(Value::String(s)) => Some(PathBuf::from(s)),
            Some(_) => return Err(CliError::Config("field `out`: expected a path string".into())),
        };
        (declared, seed, out, Value::Object(obj))
    };
    if let Some(d) = declared {
        let kind: CommandKind = serde_json::from_value(d)
            .map_err(|e| CliError::Config(format!("field `command`: {e}")))?;
        if kind != command {
            return Err(CliError::Config(format!(
                "field `command`: config is for `{}`, invoked as `{}`",
                kind.as_str(),
                command.as_str()
            )));
        }
    }

    let mut body = parse_command(command, body)?;
    let base = std::path::absolute(path)
        .map(|p| p.parent().map(Path::to_path_buf).unwrap_or_default())
        .map_err(|e| CliError::Config(format!("cannot resolve config directory: {e}")))?;
    if let CommandConfig::Classify(c) = &mut body {
        if let Some(p) = &c.trajectory {
            if p.is_relative() {
                c.trajectory = Some(base.join(p));
            }
        }
    }
    let out = out.map(|o| if o.is_relative() { base.join(o) } else { o });
    Ok(RunConfig {
        command,
        seed: seed.unwrap_or(0),
        out,
        body,
    })
}
