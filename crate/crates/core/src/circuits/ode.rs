use serde::{Deserialize, Serialize};

use super::{BifurcationProblem, Expr, ParamVector, DEFAULT_DELTA};
use crate::error::{Error, Result};
use crate::nonlinearity::{BumpNonlinearity, SigmoidFamily};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CircuitKind {
    /// One fast variable: `ε_f ẋ = -x + S(x - u + βx)`.
    Bistable,
    /// Fast positive feedback plus slow negative feedback on the input.
    Relaxation,
    /// Fast loop through a bump nonlinearity plus slow negative feedback.
    RestSpike,
    /// Rest-spike circuit with an ultra-slow adaptation of `α`.
    Burster,
}

impl CircuitKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CircuitKind::Bistable => "bistable",
            CircuitKind::Relaxation => "relaxation",
            CircuitKind::RestSpike => "rest-spike",
            CircuitKind::Burster => "burster",
        }
    }

    pub fn dim(self) -> usize {
        match self {
            CircuitKind::Bistable => 1,
            CircuitKind::Relaxation | CircuitKind::RestSpike => 2,
            CircuitKind::Burster => 3,
        }
    }

    /// Whether an external signal may drive `α`.
    pub fn has_alpha(self) -> bool {
        matches!(self, CircuitKind::RestSpike | CircuitKind::Burster)
    }

    fn param_names(self) -> &'static [&'static str] {
        match self {
            CircuitKind::Bistable | CircuitKind::Relaxation => &["beta"],
            CircuitKind::RestSpike | CircuitKind::Burster => &["alpha", "beta", "gamma", "delta"],
        }
    }

    fn default_params(self) -> ParamVector {
        let mut p = ParamVector::new();
        for name in self.param_names() {
            p.set(name, if *name == "delta" { DEFAULT_DELTA } else { 0.0 });
        }
        p
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Timescales {
    pub eps_f: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_u: Option<f64>,
}

impl Timescales {
    pub fn fast(eps_f: f64) -> Self {
        Self { eps_f, eps_u: None }
    }

    pub fn with_ultra_slow(eps_f: f64, eps_u: f64) -> Self {
        Self {
            eps_f,
            eps_u: Some(eps_u),
        }
    }
}

/// How the ultra-slow variable closes the loop on `α`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BursterWiring {
    /// `α_eff = α + k_u (x̄_u - x_u)`, `ẋ_u = ε_u (x_f - x_u)`.
    #[default]
    SetPointGain,
    /// `α_eff = α + x̄_u - x_u`, `ẋ_u = ε_u (k_u x_f - x_u)`.
    FilterGain,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BursterExtras {
    pub k_u: f64,
    pub x_bar_u: f64,
    #[serde(default)]
    pub wiring: BursterWiring,
}

/// Rates of the fast, slow and ultra-slow variables (inverse time constants).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TimescaleHierarchy {
    pub fast_rate: f64,
    pub slow_rate: Option<f64>,
    pub ultra_slow_rate: Option<f64>,
    /// Adjacent rates differ by at least a factor of ten.
    pub separated: bool,
}

/// A dynamic circuit with fixed parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawOde", into = "RawOde")]
pub struct CircuitOde {
    kind: CircuitKind,
    sigmoid: SigmoidFamily,
    params: ParamVector,
    timescales: Timescales,
    extras: Option<BursterExtras>,
    alpha: f64,
    beta: f64,
    gamma: f64,
    bump: Option<BumpNonlinearity>,
}

#[derive(Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOde {
    kind: CircuitKind,
    #[serde(default)]
    sigmoid: SigmoidFamily,
    #[serde(default)]
    params: ParamVector,
    timescales: Timescales,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    extras: Option<BursterExtras>,
}

impl TryFrom<RawOde> for CircuitOde {
    type Error = Error;
    fn try_from(r: RawOde) -> Result<Self> {
        circuit_ode(r.kind, &r.sigmoid, &r.params, r.timescales, r.extras)
    }
}

impl From<CircuitOde> for RawOde {
    fn from(c: CircuitOde) -> Self {
        RawOde {
            kind: c.kind,
            sigmoid: c.sigmoid,
            params: c.params,
            timescales: c.timescales,
            extras: c.extras,
        }
    }
}

/// Builds a circuit. Parameters not given take their defaults
/// (`δ = 0.5`, everything else 0); unknown names are rejected.
pub fn circuit_ode(
    kind: CircuitKind,
    sigmoid: &SigmoidFamily,
    params: &ParamVector,
    timescales: Timescales,
    extras: Option<BursterExtras>,
) -> Result<CircuitOde> {
    let params = kind.default_params().merged(params)?;
    let eps_f = timescales.eps_f;
    if !(eps_f > 0.0 && eps_f <= 1.0) {
        return Err(Error::InvalidArgument(format!("eps_f must lie in (0, 1], got {eps_f}")));
    }
    match (kind, extras, timescales.eps_u) {
        (CircuitKind::Burster, Some(x), Some(eps_u)) => {
            if !(eps_u > 0.0 && eps_u <= 1.0) {
                return Err(Error::InvalidArgument(format!(
                    "eps_u must lie in (0, 1], got {eps_u}"
                )));
            }
            if !x.k_u.is_finite() || !x.x_bar_u.is_finite() {
                return Err(Error::InvalidArgument("burster extras must be finite".into()));
            }
        }
        (CircuitKind::Burster, None, _) => {
            return Err(Error::InvalidArgument("burster requires extras {k_u, x_bar_u}".into()))
        }
        (CircuitKind::Burster, _, None) => {
            return Err(Error::InvalidArgument("burster requires timescales.eps_u".into()))
        }
        (_, Some(_), _) => {
            return Err(Error::InvalidArgument(format!(
                "extras are only meaningful for the burster, not {}",
                kind.as_str()
            )))
        }
        _ => {}
    }
    let get = |n: &str| params.get(n).unwrap_or(0.0);
    let bump = if kind.has_alpha() {
        let delta = get("delta");
        if delta <= 0.0 {
            return Err(Error::InvalidArgument(format!("delta must be > 0, got {delta}")));
        }
        Some(BumpNonlinearity::new(sigmoid.clone(), delta)?)
    } else {
        None
    };
    Ok(CircuitOde {
        kind,
        sigmoid: sigmoid.clone(),
        alpha: get("alpha"),
        beta: get("beta"),
        gamma: get("gamma"),
        params,
        timescales,
        extras,
        bump,
    })
}

impl CircuitOde {
    pub fn kind(&self) -> CircuitKind {
        self.kind
    }

    pub fn sigmoid(&self) -> &SigmoidFamily {
        &self.sigmoid
    }

    pub fn params(&self) -> &ParamVector {
        &self.params
    }

    pub fn timescales(&self) -> Timescales {
        self.timescales
    }

    pub fn extras(&self) -> Option<BursterExtras> {
        self.extras
    }

    pub fn dim(&self) -> usize {
        self.kind.dim()
    }

    /// Copy with one parameter changed.
    pub fn with_param(&self, name: &str, value: f64) -> Result<CircuitOde> {
        let params = self.params.merged(&ParamVector::new().with(name, value))?;
        circuit_ode(self.kind, &self.sigmoid, &params, self.timescales, self.extras)
    }

    pub fn state_names(&self) -> &'static [&'static str] {
        match self.kind {
            CircuitKind::Bistable => &["x_f"],
            CircuitKind::Relaxation | CircuitKind::RestSpike => &["x_f", "x_s"],
            CircuitKind::Burster => &["x_f", "x_s", "x_u"],
        }
    }

    /// Value of `α` seen by the fast loop, including ultra-slow adaptation.
    pub fn alpha_effective(&self, x: &[f64], alpha_in: f64) -> f64 {
        let base = self.alpha + alpha_in;
        match (self.kind, self.extras) {
            (CircuitKind::Burster, Some(e)) => match e.wiring {
                BursterWiring::SetPointGain => base + e.k_u * (e.x_bar_u - x[2]),
                BursterWiring::FilterGain => base + e.x_bar_u - x[2],
            },
            _ => base,
        }
    }

    /// `ε_f ẋ_f` as a function of the fast state and the effective slow input.
    pub fn fast_residual(&self, x_f: f64, slow: f64, u: f64, alpha_eff: f64) -> f64 {
        let s = &self.sigmoid;
        match self.kind {
            CircuitKind::Bistable => -x_f + s.eval(x_f - u + self.beta * x_f),
            CircuitKind::Relaxation => -x_f + s.eval(x_f - (u + slow) + self.beta * x_f),
            CircuitKind::RestSpike | CircuitKind::Burster => {
                let b = self.bump.as_ref().expect("bump built for rest-spike kinds");
                let arg = x_f
                    + b.eval(u + slow + 0.5 * self.gamma * x_f)
                    + self.beta * x_f
                    + alpha_eff;
                -x_f + s.eval(arg)
            }
        }
    }

    /// Right-hand side `ẋ = f(x, u, α_in)`.
    pub fn rhs(&self, x: &[f64], u: f64, alpha_in: f64, dx: &mut [f64]) {
        let eps_f = self.timescales.eps_f;
        match self.kind {
            CircuitKind::Bistable => {
                dx[0] = self.fast_residual(x[0], 0.0, u, 0.0) / eps_f;
            }
            CircuitKind::Relaxation | CircuitKind::RestSpike => {
                dx[0] = self.fast_residual(x[0], x[1], u, self.alpha + alpha_in) / eps_f;
                dx[1] = x[0] - x[1];
            }
            CircuitKind::Burster => {
                let a = self.alpha_effective(x, alpha_in);
                dx[0] = self.fast_residual(x[0], x[1], u, a) / eps_f;
                dx[1] = x[0] - x[1];
                let e = self.extras.expect("validated");
                let eps_u = self.timescales.eps_u.expect("validated");
                dx[2] = match e.wiring {
                    BursterWiring::SetPointGain => eps_u * (x[0] - x[2]),
                    BursterWiring::FilterGain => eps_u * (e.k_u * x[0] - x[2]),
                };
            }
        }
    }

    pub fn timescale_hierarchy(&self) -> TimescaleHierarchy {
        let fast = 1.0 / self.timescales.eps_f;
        let slow = (self.kind != CircuitKind::Bistable).then_some(1.0);
        let ultra = match self.kind {
            CircuitKind::Burster => self.timescales.eps_u,
            _ => None,
        };
        let mut rates = vec![fast];
        rates.extend(slow);
        rates.extend(ultra);
        let separated = rates.windows(2).all(|w| w[0] >= 10.0 * w[1]);
        TimescaleHierarchy {
            fast_rate: fast,
            slow_rate: slow,
            ultra_slow_rate: ultra,
            separated,
        }
    }

    /// Static problem whose zero set is the fast nullcline, with `u` standing
    /// for the total input seen by the fast loop (`u + x_s`, or `u` for the
    /// bistable circuit) and the circuit's parameters fixed.
    pub fn fast_problem(&self) -> Result<BifurcationProblem> {
        let y = Expr::y;
        let c = Expr::c;
        let s = &self.sigmoid;
        let expr = match self.kind {
            CircuitKind::Bistable | CircuitKind::Relaxation => {
                -y() + Expr::sigmoid(s, y() - Expr::u() + c(self.beta) * y())
            }
            CircuitKind::RestSpike | CircuitKind::Burster => {
                let b = self.bump.as_ref().expect("bump built");
                let arg = y()
                    + Expr::bump(b, Expr::u() + c(0.5 * self.gamma) * y())
                    + c(self.beta) * y()
                    + Expr::param("alpha");
                -y() + Expr::sigmoid(s, arg)
            }
        };
        let params = if self.kind.has_alpha() {
            ParamVector::new().with("alpha", self.alpha)
        } else {
            ParamVector::new()
        };
        BifurcationProblem::new(&format!("{}-fast", self.kind.as_str()), expr, params)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tanh() -> SigmoidFamily {
        SigmoidFamily::TANH
    }

    #[test]
    fn validation() {
        let p = ParamVector::new();
        assert!(circuit_ode(CircuitKind::Bistable, &tanh(), &p, Timescales::fast(0.0), None).is_err());
        assert!(circuit_ode(CircuitKind::Bistable, &tanh(), &p, Timescales::fast(1.5), None).is_err());
        assert!(circuit_ode(CircuitKind::Burster, &tanh(), &p, Timescales::fast(0.01), None).is_err());
        let extras = BursterExtras {
            k_u: 10.0,
            x_bar_u: 0.0,
            wiring: BursterWiring::SetPointGain,
        };
        assert!(circuit_ode(
            CircuitKind::Relaxation,
            &tanh(),
            &p,
            Timescales::fast(0.01),
            Some(extras)
        )
        .is_err());
        let unknown = ParamVector::new().with("alpha", 1.0);
        assert!(matches!(
            circuit_ode(CircuitKind::Bistable, &tanh(), &unknown, Timescales::fast(0.1), None),
            Err(Error::UnknownParameter(_))
        ));
        let bad_delta = ParamVector::new().with("delta", 0.0);
        assert!(circuit_ode(CircuitKind::RestSpike, &tanh(), &bad_delta, Timescales::fast(0.1), None).is_err());
    }

    #[test]
    fn rhs_matches_hand_computation() {
        let p = ParamVector::new().with("beta", 0.5);
        let ode = circuit_ode(CircuitKind::Relaxation, &tanh(), &p, Timescales::fast(0.1), None).unwrap();
        let mut dx = [0.0; 2];
        ode.rhs(&[0.2, -0.3], 0.4, 0.0, &mut dx);
        let expected = (-0.2 + (0.2 - (0.4 - 0.3) + 0.5 * 0.2f64).tanh()) / 0.1;
        assert!((dx[0] - expected).abs() < 1e-13);
        assert!((dx[1] - 0.5).abs() < 1e-15);

        let p = ParamVector::from_pairs(&[("alpha", 0.3), ("beta", 0.5), ("gamma", 1.0)]).unwrap();
        let ode = circuit_ode(CircuitKind::RestSpike, &tanh(), &p, Timescales::fast(0.01), None).unwrap();
        let (xf, xs, u) = (0.1, 0.2, 0.5);
        ode.rhs(&[xf, xs], u, 0.1, &mut dx);
        let bump = |v: f64| (v + 0.5f64).tanh() - (v - 0.5f64).tanh() - 2.0 * 0.5f64.tanh();
        let arg = xf + bump(u + xs + 0.5 * xf) + 0.5 * xf + 0.3 + 0.1;
        assert!((dx[0] - (-xf + arg.tanh()) / 0.01).abs() < 1e-10);
    }

    #[test]
    fn burster_wirings_differ_in_gain_placement() {
        let p = ParamVector::from_pairs(&[("alpha", -5.0), ("beta", 0.5), ("gamma", 1.0)]).unwrap();
        let ts = Timescales::with_ultra_slow(0.0075, 0.004);
        let mk = |wiring| {
            let e = BursterExtras {
                k_u: 10.0,
                x_bar_u: 0.0,
                wiring,
            };
            circuit_ode(CircuitKind::Burster, &tanh(), &p, ts, Some(e)).unwrap()
        };
        let a = mk(BursterWiring::SetPointGain);
        let b = mk(BursterWiring::FilterGain);
        let x = [0.4, 0.1, 0.2];
        assert!((a.alpha_effective(&x, 0.0) - (-5.0 - 2.0)).abs() < 1e-15);
        assert!((b.alpha_effective(&x, 0.0) - (-5.0 - 0.2)).abs() < 1e-15);
        let mut da = [0.0; 3];
        let mut db = [0.0; 3];
        a.rhs(&x, 0.5, 0.0, &mut da);
        b.rhs(&x, 0.5, 0.0, &mut db);
        assert!((da[2] - 0.004 * 0.2).abs() < 1e-15);
        assert!((db[2] - 0.004 * 3.8).abs() < 1e-15);
        assert!(a.timescale_hierarchy().separated);
    }

    #[test]
    fn json_roundtrip_and_rejection() {
        let json = r#"{"kind":"burster","sigmoid":"tanh","params":{"alpha":-5,"beta":0.5,"gamma":1},
            "timescales":{"eps_f":0.0075,"eps_u":0.004},"extras":{"k_u":10,"x_bar_u":0,"wiring":"filter-gain"}}"#;
        let ode: CircuitOde = serde_json::from_str(json).unwrap();
        assert_eq!(ode.params().get("delta"), Some(0.5));
        let back: CircuitOde = serde_json::from_str(&serde_json::to_string(&ode).unwrap()).unwrap();
        assert_eq!(ode, back);
        let dup = r#"{"kind":"bistable","params":{"beta":1,"beta":2},"timescales":{"eps_f":0.1}}"#;
        assert!(serde_json::from_str::<CircuitOde>(dup).is_err());
    }

    #[test]
    fn fast_problem_agrees_with_rhs() {
        let p = ParamVector::from_pairs(&[("alpha", 0.3), ("beta", 0.5), ("gamma", 1.0)]).unwrap();
        let ode = circuit_ode(CircuitKind::RestSpike, &tanh(), &p, Timescales::fast(0.01), None).unwrap();
        let fp = ode.fast_problem().unwrap();
        let g = fp.eval(0.2, 0.7, &ParamVector::new()).unwrap();
        assert!((g - ode.fast_residual(0.2, 0.2, 0.5, 0.3)).abs() < 1e-14);
    }
}
