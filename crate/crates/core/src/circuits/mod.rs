//! Bifurcation problems `g(y, u; params) = 0` and the dynamic circuits built
//! from them.
//!
//! Problems are stored as small expression trees ([`Expr`]) so that the same
//! description can be evaluated in `f64`, with first derivatives ([`Dual`]),
//! or with exact mixed partials up to order 6 ([`MultiJet`]), and serialized
//! to JSON.

mod ode;

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::de::{MapAccess, Visitor};
use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{Error, Result};
use crate::jet::{Dual, MultiJet, Scalar};
use crate::nonlinearity::{BumpNonlinearity, SigmoidFamily};

pub use ode::{
    circuit_ode, BursterExtras, BursterWiring, CircuitKind, CircuitOde, TimescaleHierarchy,
    Timescales,
};

/// Named parameter values. Each name appears at most once.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ParamVector(BTreeMap<String, f64>);

impl ParamVector {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builder form of [`ParamVector::set`]; replaces an existing entry.
    pub fn with(mut self, name: &str, value: f64) -> Self {
        self.0.insert(name.to_string(), value);
        self
    }

    pub fn set(&mut self, name: &str, value: f64) {
        self.0.insert(name.to_string(), value);
    }

    /// Inserts a new entry, rejecting names that are already present.
    pub fn insert_new(&mut self, name: &str, value: f64) -> Result<()> {
        if self.0.contains_key(name) {
            return Err(Error::DuplicateParameter(name.to_string()));
        }
        self.0.insert(name.to_string(), value);
        Ok(())
    }

    pub fn from_pairs(pairs: &[(&str, f64)]) -> Result<Self> {
        let mut p = Self::new();
        for (name, value) in pairs {
            p.insert_new(name, *value)?;
        }
        Ok(p)
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.0.get(name).copied()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.0.contains_key(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.0.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.0.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Overlays `overrides` on `self`, rejecting names not declared in `self`.
    pub fn merged(&self, overrides: &ParamVector) -> Result<ParamVector> {
        let mut out = self.clone();
        for (name, value) in overrides.iter() {
            if !self.contains(name) {
                return Err(Error::UnknownParameter(name.to_string()));
            }
            out.set(name, value);
        }
        Ok(out)
    }
}

impl<'de> Deserialize<'de> for ParamVector {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = ParamVector;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a map of parameter names to numbers")
            }
            fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> std::result::Result<ParamVector, A::Error> {
                let mut p = ParamVector::new();
                while let Some((k, v)) = map.next_entry::<String, f64>()? {
                    p.insert_new(&k, v).map_err(serde::de::Error::custom)?;
                }
                Ok(p)
            }
        }
        d.deserialize_map(V)
    }
}

/// Expression tree over the output `y`, the input `u`, and named parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "kebab-case")]
#[serde(deny_unknown_fields)]
pub enum Expr {
    Y,
    U,
    Param { name: String },
    Const { value: f64 },
    Add { lhs: Box<Expr>, rhs: Box<Expr> },
    Sub { lhs: Box<Expr>, rhs: Box<Expr> },
    Mul { lhs: Box<Expr>, rhs: Box<Expr> },
    Neg { arg: Box<Expr> },
    Pow { arg: Box<Expr>, exponent: u32 },
    Sigmoid { family: SigmoidFamily, arg: Box<Expr> },
    Bump { bump: BumpNonlinearity, arg: Box<Expr> },
}

impl Expr {
    pub fn y() -> Expr {
        Expr::Y
    }

    pub fn u() -> Expr {
        Expr::U
    }

    pub fn param(name: &str) -> Expr {
        Expr::Param {
            name: name.to_string(),
        }
    }

    pub fn c(value: f64) -> Expr {
        Expr::Const { value }
    }

    pub fn pow(self, exponent: u32) -> Expr {
        Expr::Pow {
            arg: Box::new(self),
            exponent,
        }
    }

    pub fn sigmoid(family: &SigmoidFamily, arg: Expr) -> Expr {
        Expr::Sigmoid {
            family: family.clone(),
            arg: Box::new(arg),
        }
    }

    pub fn bump(bump: &BumpNonlinearity, arg: Expr) -> Expr {
        Expr::Bump {
            bump: bump.clone(),
            arg: Box::new(arg),
        }
    }

    fn collect_params<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            Expr::Param { name } => out.push(name),
            Expr::Y | Expr::U | Expr::Const { .. } => {}
            Expr::Add { lhs, rhs } | Expr::Sub { lhs, rhs } | Expr::Mul { lhs, rhs } => {
                lhs.collect_params(out);
                rhs.collect_params(out);
            }
            Expr::Neg { arg }
            | Expr::Pow { arg, .. }
            | Expr::Sigmoid { arg, .. }
            | Expr::Bump { arg, .. } => arg.collect_params(out),
        }
    }

    fn eval<T: Scalar>(&self, env: &Env<'_, T>) -> T {
        match self {
            Expr::Y => env.y.clone(),
            Expr::U => env.u.clone(),
            Expr::Param { name } => match &env.active {
                Some((active, v)) if active == name => v.clone(),
                _ => env.y.lift(env.values.get(name).expect("parameters validated at bind")),
            },
            Expr::Const { value } => env.y.lift(*value),
            Expr::Add { lhs, rhs } => lhs.eval(env) + rhs.eval(env),
            Expr::Sub { lhs, rhs } => lhs.eval(env) - rhs.eval(env),
            Expr::Mul { lhs, rhs } => lhs.eval(env) * rhs.eval(env),
            Expr::Neg { arg } => -arg.eval(env),
            Expr::Pow { arg, exponent } => arg.eval(env).powi(*exponent),
            Expr::Sigmoid { family, arg } => family.apply(&arg.eval(env)),
            Expr::Bump { bump, arg } => bump.apply(&arg.eval(env)),
        }
    }
}

macro_rules! expr_binop {
    ($trait:ident, $method:ident, $variant:ident) => {
        impl $trait for Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                Expr::$variant {
                    lhs: Box::new(self),
                    rhs: Box::new(rhs),
                }
            }
        }
    };
}

expr_binop!(Add, add, Add);
expr_binop!(Sub, sub, Sub);
expr_binop!(Mul, mul, Mul);

impl Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::Neg { arg: Box::new(self) }
    }
}

struct Env<'a, T> {
    y: T,
    u: T,
    values: &'a ParamVector,
    active: Option<(&'a str, T)>,
}

/// A scalar bifurcation problem `g(y, u; params) = 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawProblem")]
pub struct BifurcationProblem {
    label: String,
    expr: Expr,
    /// Declared parameter names with their default values.
    params: ParamVector,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProblem {
    label: String,
    expr: Expr,
    #[serde(default)]
    params: ParamVector,
}

impl TryFrom<RawProblem> for BifurcationProblem {
    type Error = Error;
    fn try_from(r: RawProblem) -> Result<Self> {
        BifurcationProblem::new(&r.label, r.expr, r.params)
    }
}

impl BifurcationProblem {
    pub fn new(label: &str, expr: Expr, params: ParamVector) -> Result<Self> {
        let mut used = Vec::new();
        expr.collect_params(&mut used);
        if let Some(missing) = used.iter().find(|n| !params.contains(n)) {
            return Err(Error::UnknownParameter(missing.to_string()));
        }
        Ok(Self {
            label: label.to_string(),
            expr,
            params,
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    pub fn declared_params(&self) -> &ParamVector {
        &self.params
    }

    /// New problem `g + term` with the same parameters.
    pub fn plus(&self, label: &str, term: Expr) -> Result<Self> {
        Self::new(label, self.expr.clone() + term, self.params.clone())
    }

    /// New problem `factor · g` with the same parameters.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            label: format!("{}*{}", factor, self.label),
            expr: Expr::c(factor) * self.expr.clone(),
            params: self.params.clone(),
        }
    }

    /// Fixes parameter values; unknown names are rejected.
    pub fn bind(&self, overrides: &ParamVector) -> Result<BoundProblem<'_>> {
        Ok(BoundProblem {
            problem: self,
            values: self.params.merged(overrides)?,
        })
    }

    pub fn eval(&self, y: f64, u: f64, params: &ParamVector) -> Result<f64> {
        Ok(self.bind(params)?.value(y, u))
    }
}

/// A problem with all parameter values fixed.
#[derive(Clone, Debug)]
pub struct BoundProblem<'a> {
    problem: &'a BifurcationProblem,
    values: ParamVector,
}

impl<'a> BoundProblem<'a> {
    pub fn problem(&self) -> &'a BifurcationProblem {
        self.problem
    }

    pub fn values(&self) -> &ParamVector {
        &self.values
    }

    pub fn eval<T: Scalar>(&self, y: T, u: T) -> T {
        let env = Env {
            y,
            u,
            values: &self.values,
            active: None,
        };
        self.problem.expr.eval(&env)
    }

    /// Evaluates with one parameter replaced by a (possibly jet-valued) value.
    pub fn eval_with_param<T: Scalar>(&self, y: T, u: T, name: &str, value: T) -> Result<T> {
        if !self.values.contains(name) {
            return Err(Error::UnknownParameter(name.to_string()));
        }
        let env = Env {
            y,
            u,
            values: &self.values,
            active: Some((name, value)),
        };
        Ok(self.problem.expr.eval(&env))
    }

    pub fn value(&self, y: f64, u: f64) -> f64 {
        self.eval(y, u)
    }

    /// `(g, g_y)`.
    pub fn value_dy(&self, y: f64, u: f64) -> (f64, f64) {
        let r = self.eval(Dual::variable(y), Dual::constant(u));
        (r.v, r.d)
    }

    /// `(g, g_u)`.
    pub fn value_du(&self, y: f64, u: f64) -> (f64, f64) {
        let r = self.eval(Dual::constant(y), Dual::variable(u));
        (r.v, r.d)
    }

    /// All partials of total order `<= order` in `(y, u)` and, optionally,
    /// one parameter direction.
    pub fn taylor(&self, y: f64, u: f64, order: usize, param: Option<&str>) -> Result<PartialTable> {
        let jet = match param {
            None => {
                let yj = MultiJet::variable(2, order, 0, y)?;
                let uj = MultiJet::variable(2, order, 1, u)?;
                self.eval(yj, uj)
            }
            Some(name) => {
                let p0 = self
                    .values
                    .get(name)
                    .ok_or_else(|| Error::UnknownParameter(name.to_string()))?;
                let yj = MultiJet::variable(3, order, 0, y)?;
                let uj = MultiJet::variable(3, order, 1, u)?;
                let pj = MultiJet::variable(3, order, 2, p0)?;
                self.eval_with_param(yj, uj, name, pj)?
            }
        };
        Ok(PartialTable { jet })
    }
}

/// Mixed partials of `g` at one point, read off a multivariate jet.
#[derive(Clone, Debug)]
pub struct PartialTable {
    jet: MultiJet,
}

impl PartialTable {
    pub fn order(&self) -> usize {
        self.jet.order()
    }

    /// `∂^{dy+du+dp} g / ∂y^dy ∂u^du ∂p^dp`.
    pub fn get(&self, dy: usize, du: usize, dp: usize) -> f64 {
        if self.jet.nvars() == 2 {
            if dp > 0 {
                return 0.0;
            }
            self.jet.derivative(&[dy, du])
        } else {
            self.jet.derivative(&[dy, du, dp])
        }
    }
}

/// Multi-index of a requested partial derivative.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PartialSpec {
    #[serde(default)]
    pub dy: usize,
    #[serde(default)]
    pub du: usize,
    /// Optional parameter direction and its order.
    #[serde(default)]
    pub param: Option<(String, usize)>,
}

impl PartialSpec {
    pub fn new(dy: usize, du: usize) -> Self {
        Self { dy, du, param: None }
    }

    pub fn with_param(mut self, name: &str, order: usize) -> Self {
        self.param = Some((name.to_string(), order));
        self
    }
}

/// Cap on `dy + du` for [`partials`].
pub const PARTIAL_ORDER_CAP: usize = 3;

pub fn partials(
    p: &BifurcationProblem,
    y: f64,
    u: f64,
    params: &ParamVector,
    spec: &PartialSpec,
) -> Result<f64> {
    let spatial = spec.dy + spec.du;
    if spatial > PARTIAL_ORDER_CAP {
        return Err(Error::OrderCap {
            requested: spatial,
            cap: PARTIAL_ORDER_CAP,
        });
    }
    let bound = p.bind(params)?;
    match &spec.param {
        None => Ok(bound.taylor(y, u, spatial, None)?.get(spec.dy, spec.du, 0)),
        Some((name, dp)) => {
            let total = spatial + dp;
            if total > PARTIAL_ORDER_CAP + 1 {
                return Err(Error::OrderCap {
                    requested: total,
                    cap: PARTIAL_ORDER_CAP + 1,
                });
            }
            Ok(bound.taylor(y, u, total, Some(name))?.get(spec.dy, spec.du, *dp))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormalFormKind {
    /// `-y³ - u`
    Hysteresis,
    /// `-y³ - u + βy`
    HysteresisUnfolding,
    /// `-y³ - u²`
    Wcusp,
    /// `-y³ - u² + α + βy + γuy`
    WcuspUnfolding,
}

pub fn normal_form(kind: NormalFormKind) -> BifurcationProblem {
    let y = Expr::y;
    let u = Expr::u;
    let p = Expr::param;
    let (label, expr, params) = match kind {
        NormalFormKind::Hysteresis => ("hysteresis", -y().pow(3) - u(), ParamVector::new()),
        NormalFormKind::HysteresisUnfolding => (
            "hysteresis-unfolding",
            -y().pow(3) - u() + p("beta") * y(),
            ParamVector::new().with("beta", 0.0),
        ),
        NormalFormKind::Wcusp => ("wcusp", -y().pow(3) - u().pow(2), ParamVector::new()),
        NormalFormKind::WcuspUnfolding => (
            "wcusp-unfolding",
            -y().pow(3) - u().pow(2) + p("alpha") + p("beta") * y() + p("gamma") * u() * y(),
            ParamVector::new()
                .with("alpha", 0.0)
                .with("beta", 0.0)
                .with("gamma", 0.0),
        ),
    };
    BifurcationProblem::new(label, expr, params).expect("normal forms declare their parameters")
}

/// Sign of the input inside the hysteresis loop.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SignConvention {
    /// `-y + S(y + u + βy)`
    #[default]
    Static,
    /// `-y + S(y - u + βy)`, the form used by the bistable and relaxation circuits.
    Dynamic,
}

/// Positive feedback loop around a sigmoid, with unfolding parameter `beta`.
pub fn hysteresis_circuit(s: &SigmoidFamily, convention: SignConvention) -> BifurcationProblem {
    let input = match convention {
        SignConvention::Static => Expr::u(),
        SignConvention::Dynamic => -Expr::u(),
    };
    let arg = Expr::y() + input + Expr::param("beta") * Expr::y();
    let label = match convention {
        SignConvention::Static => "hysteresis-circuit",
        SignConvention::Dynamic => "hysteresis-circuit-dynamic",
    };
    BifurcationProblem::new(
        label,
        -Expr::y() + Expr::sigmoid(s, arg),
        ParamVector::new().with("beta", 0.0),
    )
    .expect("beta declared")
}

/// Default bump offset for the winged-cusp circuit.
pub const DEFAULT_DELTA: f64 = 0.5;

/// `-y + S(B_δ(u + γy/2) + y + α + βy)`.
pub fn wcusp_circuit(s: &SigmoidFamily, delta: f64) -> Result<BifurcationProblem> {
    if delta <= 0.0 || !delta.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "winged-cusp circuit requires delta > 0, got {delta}"
        )));
    }
    let bump = BumpNonlinearity::new(s.clone(), delta)?;
    let p = Expr::param;
    let bump_arg = Expr::u() + Expr::c(0.5) * p("gamma") * Expr::y();
    let arg = Expr::bump(&bump, bump_arg) + Expr::y() + p("alpha") + p("beta") * Expr::y();
    BifurcationProblem::new(
        "wcusp-circuit",
        -Expr::y() + Expr::sigmoid(s, arg),
        ParamVector::new()
            .with("alpha", 0.0)
            .with("beta", 0.0)
            .with("gamma", 0.0),
    )
}
