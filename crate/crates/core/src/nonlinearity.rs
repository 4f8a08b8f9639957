//! Sigmoidal nonlinearities, the bump nonlinearity, and their Taylor data.

use std::fmt;
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::jet::{factorial, Jet, Scalar, MAX_JET_ORDER};

/// A scalar function that can report its Taylor coefficients at any point.
///
/// `taylor(u, k)` returns `[S(u), S'(u), S''(u)/2!, ..., S^(k)(u)/k!]`.
pub trait SigmoidFn: Send + Sync + fmt::Debug {
    fn name(&self) -> &str;
    fn taylor(&self, u: f64, order: usize) -> Vec<f64>;

    fn value(&self, u: f64) -> f64 {
        self.taylor(u, 0)[0]
    }

    fn derivative(&self, u: f64, n: usize) -> f64 {
        self.taylor(u, n)[n] * factorial(n)
    }
}

/// Built-in sigmoid kinds.
///
/// * `Tanh`: `tanh(u)`.
/// * `Logistic`: the centered, slope-normalized logistic `4(σ(u) - 1/2) = 2 tanh(u/2)`.
/// * `Algebraic`: `u / sqrt(1 + u²)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SigmoidKind {
    Tanh,
    Logistic,
    Algebraic,
}

impl SigmoidKind {
    pub const ALL: [SigmoidKind; 3] = [SigmoidKind::Tanh, SigmoidKind::Logistic, SigmoidKind::Algebraic];

    pub fn as_str(self) -> &'static str {
        match self {
            SigmoidKind::Tanh => "tanh",
            SigmoidKind::Logistic => "logistic",
            SigmoidKind::Algebraic => "algebraic",
        }
    }
}

// Derivatives of tanh: S^(n) = sech²(u) · Q_n(tanh u) with Q_1 = 1 and
// Q_{n+1}(t) = -2t Q_n(t) + (1 - t²) Q_n'(t). Keeping the sech² factor
// separate avoids the cancellation in 1 - tanh² for large |u|.
const TANH_POLY_CAP: usize = 16;

fn tanh_polys() -> &'static [Vec<f64>] {
    static POLYS: OnceLock<Vec<Vec<f64>>> = OnceLock::new();
    POLYS.get_or_init(|| {
        let mut polys = vec![vec![0.0], vec![1.0]];
        for n in 1..TANH_POLY_CAP {
            let q = &polys[n];
            let mut next = vec![0.0; q.len() + 1];
            for (i, c) in q.iter().enumerate() {
                next[i + 1] -= 2.0 * c;
                if i >= 1 {
                    let d = c * i as f64;
                    next[i - 1] += d;
                    next[i + 1] -= d;
                }
            }
            polys.push(next);
        }
        polys
    })
}

fn tanh_taylor(u: f64, order: usize) -> Vec<f64> {
    assert!(order < TANH_POLY_CAP, "tanh derivatives are tabulated up to order {}", TANH_POLY_CAP - 1);
    let t = u.tanh();
    let mut out = Vec::with_capacity(order + 1);
    out.push(t);
    if order == 0 {
        return out;
    }
    let e = (-2.0 * u.abs()).exp();
    let sech2 = 4.0 * e / ((1.0 + e) * (1.0 + e));
    let polys = tanh_polys();
    for n in 1..=order {
        let q = polys[n].iter().rev().fold(0.0, |acc, c| acc * t + c);
        out.push(sech2 * q / factorial(n));
    }
    out
}

fn algebraic_taylor(u: f64, order: usize) -> Vec<f64> {
    if order == 0 {
        return vec![u / (1.0 + u * u).sqrt()];
    }
    // u · (1 + u²)^(-1/2) via jet arithmetic
    let x = Jet::variable(u, order);
    let w = x.lift(1.0) + x.clone() * x.clone();
    let w0 = w.value();
    let mut binom = 1.0;
    let mut power_coeffs = Vec::with_capacity(order + 1);
    for m in 0..=order {
        power_coeffs.push(binom * w0.powf(-0.5 - m as f64));
        binom *= (-0.5 - m as f64) / (m as f64 + 1.0);
    }
    let r = w.apply(&power_coeffs);
    (x * r).coeffs().to_vec()
}

impl SigmoidFn for SigmoidKind {
    fn name(&self) -> &str {
        self.as_str()
    }

    fn taylor(&self, u: f64, order: usize) -> Vec<f64> {
        match self {
            SigmoidKind::Tanh => tanh_taylor(u, order),
            SigmoidKind::Logistic => {
                let mut c = tanh_taylor(0.5 * u, order);
                let mut scale = 2.0;
                for coeff in c.iter_mut() {
                    *coeff *= scale;
                    scale *= 0.5;
                }
                c
            }
            SigmoidKind::Algebraic => algebraic_taylor(u, order),
        }
    }

    fn value(&self, u: f64) -> f64 {
        match self {
            SigmoidKind::Tanh => u.tanh(),
            SigmoidKind::Logistic => 2.0 * (0.5 * u).tanh(),
            SigmoidKind::Algebraic => u / (1.0 + u * u).sqrt(),
        }
    }
}

/// A sigmoid used by circuits: one of the built-in kinds or a registered
/// custom function that passed [`verify_sigmoid_axioms`].
#[derive(Clone)]
pub enum SigmoidFamily {
    Builtin(SigmoidKind),
    Custom(Arc<dyn SigmoidFn>),
}

impl SigmoidFamily {
    pub const TANH: SigmoidFamily = SigmoidFamily::Builtin(SigmoidKind::Tanh);

    /// Registers a custom sigmoid after checking the axioms on the default grid.
    pub fn custom(f: Arc<dyn SigmoidFn>) -> Result<Self> {
        let report = verify_sigmoid_axioms(f.as_ref(), &default_axiom_grid());
        if !report.passed() {
            return Err(Error::AxiomViolation {
                name: f.name().to_string(),
                failed: report.failed_names().join(", "),
            });
        }
        Ok(SigmoidFamily::Custom(f))
    }

    fn inner(&self) -> &dyn SigmoidFn {
        match self {
            SigmoidFamily::Builtin(k) => k,
            SigmoidFamily::Custom(f) => f.as_ref(),
        }
    }

    pub fn eval(&self, u: f64) -> f64 {
        self.inner().value(u)
    }

    pub fn taylor(&self, u: f64, order: usize) -> Vec<f64> {
        self.inner().taylor(u, order)
    }

    pub fn derivative(&self, u: f64, n: usize) -> f64 {
        self.inner().derivative(u, n)
    }

    /// Evaluates `S(x)` in any [`Scalar`].
    pub fn apply<T: Scalar>(&self, x: &T) -> T {
        let v = x.value();
        match x.degree() {
            0 => x.lift(self.eval(v)),
            k => x.apply(&self.taylor(v, k)),
        }
    }
}

impl fmt::Debug for SigmoidFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SigmoidFamily::Builtin(k) => write!(f, "{}", k.as_str()),
            SigmoidFamily::Custom(c) => write!(f, "custom:{}", c.name()),
        }
    }
}

impl Default for SigmoidFamily {
    fn default() -> Self {
        SigmoidFamily::TANH
    }
}

impl PartialEq for SigmoidFamily {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (SigmoidFamily::Builtin(a), SigmoidFamily::Builtin(b)) => a == b,
            (SigmoidFamily::Custom(a), SigmoidFamily::Custom(b)) => Arc::ptr_eq(a, b),
            _ => false,
        }
    }
}

impl From<SigmoidKind> for SigmoidFamily {
    fn from(k: SigmoidKind) -> Self {
        SigmoidFamily::Builtin(k)
    }
}

impl Serialize for SigmoidFamily {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            SigmoidFamily::Builtin(k) => k.serialize(s),
            SigmoidFamily::Custom(_) => Err(serde::ser::Error::custom(Error::NotSerializable)),
        }
    }
}

impl<'de> Deserialize<'de> for SigmoidFamily {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        SigmoidKind::deserialize(d).map(SigmoidFamily::Builtin)
    }
}

/// Truncated Taylor expansion of `S` about `u`.
pub fn eval_jet(s: &SigmoidFamily, u: f64, order: usize) -> Result<Jet> {
    if order > MAX_JET_ORDER {
        return Err(Error::OrderCap {
            requested: order,
            cap: MAX_JET_ORDER,
        });
    }
    Ok(Jet::new(u, s.taylor(u, order)))
}

/// `B_δ(u) = S(u + δ) - S(u - δ) - 2 S(δ)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BumpNonlinearity {
    base: SigmoidFamily,
    delta: f64,
}

impl BumpNonlinearity {
    pub fn new(base: SigmoidFamily, delta: f64) -> Result<Self> {
        if delta == 0.0 || !delta.is_finite() {
            return Err(Error::DegenerateBump(delta));
        }
        Ok(Self { base, delta })
    }

    pub fn base(&self) -> &SigmoidFamily {
        &self.base
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn apply<T: Scalar>(&self, x: &T) -> T {
        let d = self.delta;
        let plus = self.base.apply(&(x.clone() + x.lift(d)));
        let minus = self.base.apply(&(x.clone() - x.lift(d)));
        plus - minus - x.lift(2.0 * self.base.eval(d))
    }

    pub fn eval(&self, u: f64) -> f64 {
        let d = self.delta;
        self.base.eval(u + d) - self.base.eval(u - d) - 2.0 * self.base.eval(d)
    }

    pub fn jet(&self, u: f64, order: usize) -> Result<Jet> {
        if order > MAX_JET_ORDER {
            return Err(Error::OrderCap {
                requested: order,
                cap: MAX_JET_ORDER,
            });
        }
        Ok(self.apply(&Jet::variable(u, order)))
    }
}

impl<'de> Deserialize<'de> for BumpNonlinearity {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Raw {
            base: SigmoidFamily,
            delta: f64,
        }
        let raw = Raw::deserialize(d)?;
        BumpNonlinearity::new(raw.base, raw.delta).map_err(serde::de::Error::custom)
    }
}

pub fn bump_eval(b: &BumpNonlinearity, u: f64) -> f64 {
    b.eval(u)
}

pub fn bump_jet(b: &BumpNonlinearity, u: f64, order: usize) -> Result<Jet> {
    b.jet(u, order)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Axiom {
    Odd,
    Monotone,
    Saturated,
    Regular,
    CurvatureSign,
    FourthDerivativeSign,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxiomCheck {
    pub axiom: Axiom,
    pub passed: bool,
    /// Worst value of the checked quantity over the grid.
    pub worst_value: f64,
    /// Grid point where the worst value occurs.
    pub witness: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxiomReport {
    pub name: String,
    /// Odd, monotone, saturated, regular, curvature sign.
    pub checks: Vec<AxiomCheck>,
    /// `sgn S⁗(u) = -sgn u`, reported but not part of [`AxiomReport::passed`]:
    /// no odd, monotone, saturating function can satisfy it together with the
    /// second-derivative sign condition.
    pub fourth_derivative: AxiomCheck,
}

impl AxiomReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, axiom: Axiom) -> Option<&AxiomCheck> {
        if axiom == Axiom::FourthDerivativeSign {
            return Some(&self.fourth_derivative);
        }
        self.checks.iter().find(|c| c.axiom == axiom)
    }

    pub fn failed_names(&self) -> Vec<String> {
        self.checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| format!("{:?}", c.axiom))
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AxiomOptions {
    /// Upper bound on `S'` at both ends of the grid.
    pub saturation_tol: f64,
    /// Lower bound on `|S^(2n+1)(0)|`, n = 0..=3.
    pub regular_floor: f64,
}

impl Default for AxiomOptions {
    fn default() -> Self {
        Self {
            saturation_tol: 1e-3,
            regular_floor: 1e-8,
        }
    }
}

/// `[-20, 20]` with step `0.05`.
pub fn default_axiom_grid() -> Vec<f64> {
    (-400..=400).map(|i| i as f64 * 0.05).collect()
}

pub fn verify_sigmoid_axioms(s: &(impl SigmoidFn + ?Sized), grid: &[f64]) -> AxiomReport {
    verify_sigmoid_axioms_with(s, grid, &AxiomOptions::default())
}

pub fn verify_sigmoid_axioms_with(
    s: &(impl SigmoidFn + ?Sized),
    grid: &[f64],
    opts: &AxiomOptions,
) -> AxiomReport {
    // (value, witness) maximizing `score`
    fn worst(grid: &[f64], score: impl Fn(f64) -> Option<f64>) -> (f64, f64) {
        grid.iter()
            .filter_map(|&u| score(u).map(|v| (v, u)))
            .fold((f64::NEG_INFINITY, f64::NAN), |acc, cur| if cur.0 > acc.0 { cur } else { acc })
    }

    let (odd_dev, odd_at) = worst(grid, |u| {
        let dev = (s.value(u) + s.value(-u)).abs();
        Some(dev / s.value(u).abs().max(1.0))
    });
    let odd = AxiomCheck {
        axiom: Axiom::Odd,
        passed: odd_dev <= 1e-12,
        worst_value: odd_dev,
        witness: odd_at,
    };

    let (neg_slope, slope_at) = worst(grid, |u| Some(-s.derivative(u, 1)));
    let monotone = AxiomCheck {
        axiom: Axiom::Monotone,
        passed: neg_slope < 0.0,
        worst_value: -neg_slope,
        witness: slope_at,
    };

    let (lo, hi) = grid
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &u| (lo.min(u), hi.max(u)));
    let (end_slope, end_at) = [lo, hi]
        .iter()
        .map(|&u| (s.derivative(u, 1), u))
        .fold((f64::NEG_INFINITY, f64::NAN), |acc, cur| if cur.0 > acc.0 { cur } else { acc });
    let saturated = AxiomCheck {
        axiom: Axiom::Saturated,
        passed: grid.len() >= 2 && end_slope < opts.saturation_tol,
        worst_value: end_slope,
        witness: end_at,
    };

    let at_zero = s.taylor(0.0, 7);
    let slope_dev = (at_zero[1] - 1.0).abs();
    let min_odd = (0..=3)
        .map(|n| (at_zero[2 * n + 1] * factorial(2 * n + 1)).abs())
        .fold(f64::INFINITY, f64::min);
    let regular = AxiomCheck {
        axiom: Axiom::Regular,
        passed: slope_dev <= 1e-12 && min_odd > opts.regular_floor,
        worst_value: if slope_dev > 1e-12 { slope_dev } else { min_odd },
        witness: 0.0,
    };

    let signed = |n: usize| {
        move |u: f64| {
            if u == 0.0 {
                None
            } else {
                Some(s.derivative(u, n) * u.signum())
            }
        }
    };
    let (curv, curv_at) = worst(grid, signed(2));
    let curvature = AxiomCheck {
        axiom: Axiom::CurvatureSign,
        passed: curv < 0.0,
        worst_value: curv,
        witness: curv_at,
    };
    let (fourth, fourth_at) = worst(grid, signed(4));
    let fourth_derivative = AxiomCheck {
        axiom: Axiom::FourthDerivativeSign,
        passed: fourth < 0.0,
        worst_value: fourth,
        witness: fourth_at,
    };

    AxiomReport {
        name: s.name().to_string(),
        checks: vec![odd, monotone, saturated, regular, curvature],
        fourth_derivative,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Debug)]
    struct Identity;

    impl SigmoidFn for Identity {
        fn name(&self) -> &str {
            "identity"
        }
        fn taylor(&self, u: f64, order: usize) -> Vec<f64> {
            let mut c = vec![0.0; order + 1];
            c[0] = u;
            if order >= 1 {
                c[1] = 1.0;
            }
            c
        }
    }

    // O(h^4) central stencils
    fn fd_third(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
        let d = |k: f64| f(x + k * h) - f(x - k * h);
        (-13.0 / 8.0 * d(1.0) + d(2.0) - d(3.0) / 8.0) / h.powi(3)
    }

    fn fd_first(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
        let d = |k: f64| f(x + k * h) - f(x - k * h);
        (8.0 * d(1.0) - d(2.0)) / (12.0 * h)
    }

    fn fd_second(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
        let s = |k: f64| f(x + k * h) + f(x - k * h);
        (16.0 * s(1.0) - s(2.0) - 30.0 * f(x)) / (12.0 * h * h)
    }

    #[test]
    fn tanh_jet_at_origin() {
        let s = SigmoidFamily::TANH;
        let j = eval_jet(&s, 0.0, 0).unwrap();
        assert_eq!(j.coeffs(), &[0.0]);
        let j = eval_jet(&s, 0.0, 1).unwrap();
        assert_eq!(j.coeff(0), 0.0);
        assert_eq!(j.coeff(1), 1.0);
        let j = eval_jet(&s, 0.0, 3).unwrap();
        let oracle = fd_third(f64::tanh, 0.0, 1e-3);
        assert!((oracle + 2.0).abs() < 1e-6, "oracle {oracle}");
        assert!((j.derivative(3) - oracle).abs() < 1e-6);
        assert!((j.coeff(3) - oracle / 6.0).abs() < 1e-6);
    }

    #[test]
    fn eval_jet_rejects_orders_above_cap() {
        let err = eval_jet(&SigmoidFamily::TANH, 0.0, 7).unwrap_err();
        assert!(matches!(err, Error::OrderCap { requested: 7, cap: 6 }));
        assert!(err.to_string().contains('6'));
    }

    #[test]
    fn builtin_kinds_pass_axioms() {
        for kind in SigmoidKind::ALL {
            let report = verify_sigmoid_axioms(&kind, &default_axiom_grid());
            assert!(report.passed(), "{kind:?}: {report:?}");
        }
    }

    #[test]
    fn exponential_kinds_saturate_to_1e6_at_20() {
        for kind in [SigmoidKind::Tanh, SigmoidKind::Logistic] {
            assert!(kind.derivative(20.0, 1) < 1e-6);
            assert!(kind.derivative(-20.0, 1) < 1e-6);
        }
    }

    #[test]
    fn identity_stub_fails_only_saturation_and_curvature() {
        let report = verify_sigmoid_axioms(&Identity, &default_axiom_grid());
        assert!(!report.passed());
        assert!(!report.check(Axiom::Saturated).unwrap().passed);
        assert!(report.check(Axiom::Odd).unwrap().passed);
        assert!(report.check(Axiom::Monotone).unwrap().passed);
        assert!(SigmoidFamily::custom(Arc::new(Identity)).is_err());
    }

    #[test]
    fn custom_registration_accepts_valid_sigmoid() {
        #[derive(Debug)]
        struct Wrapped;
        impl SigmoidFn for Wrapped {
            fn name(&self) -> &str {
                "wrapped-tanh"
            }
            fn taylor(&self, u: f64, order: usize) -> Vec<f64> {
                SigmoidKind::Tanh.taylor(u, order)
            }
        }
        let fam = SigmoidFamily::custom(Arc::new(Wrapped)).unwrap();
        assert_eq!(fam.eval(0.3), 0.3f64.tanh());
        assert!(serde_json::to_string(&fam).is_err());
    }

    #[test]
    fn fourth_derivative_sign_is_not_satisfiable() {
        // sgn S⁗ = -sgn u fails near the origin for every built-in kind because
        // S⁽⁵⁾(0) > 0.
        for kind in SigmoidKind::ALL {
            let report = verify_sigmoid_axioms(&kind, &default_axiom_grid());
            assert!(!report.fourth_derivative.passed);
            assert!(kind.derivative(0.0, 5) > 0.0);
        }
    }

    #[test]
    fn logistic_is_centered_and_slope_normalized() {
        let s = SigmoidKind::Logistic;
        let sigma = |u: f64| 1.0 / (1.0 + (-u).exp());
        for u in [-3.0, -0.5, 0.0, 0.7, 4.0] {
            assert!((s.value(u) - 4.0 * (sigma(u) - 0.5)).abs() < 1e-14);
        }
        assert_eq!(s.value(0.0), 0.0);
        assert!((s.derivative(0.0, 1) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn bump_rejects_zero_delta() {
        assert!(matches!(
            BumpNonlinearity::new(SigmoidFamily::TANH, 0.0),
            Err(Error::DegenerateBump(_))
        ));
    }

    #[test]
    fn bump_values() {
        let b = BumpNonlinearity::new(SigmoidFamily::TANH, 0.5).unwrap();
        assert_eq!(bump_eval(&b, 0.0), 0.0);
        assert_eq!(bump_eval(&b, 1.0), bump_eval(&b, -1.0));
        let direct = 1.5f64.tanh() - 0.5f64.tanh() - 2.0 * 0.5f64.tanh();
        assert!((bump_eval(&b, 1.0) - direct).abs() < 1e-15);
        // saturation limit -2 S(δ)
        assert!((bump_eval(&b, 40.0) + 2.0 * 0.5f64.tanh()).abs() < 1e-12);
    }

    #[test]
    fn bump_jet_at_origin() {
        for delta in [0.05, 0.5, -0.5] {
            let b = BumpNonlinearity::new(SigmoidFamily::TANH, delta).unwrap();
            let j = bump_jet(&b, 0.0, 2).unwrap();
            assert!(j.coeff(0).abs() < 1e-15);
            assert!(j.coeff(1).abs() < 1e-15);
            let s2 = SigmoidKind::Tanh.derivative(delta, 2);
            assert!((j.coeff(2) - s2).abs() < 1e-14);
            assert!((j.derivative(2) - 2.0 * s2).abs() < 1e-14);
            assert_eq!(j.coeff(2).signum(), -delta.signum());
        }
    }

    #[test]
    fn bump_jet_matches_finite_differences_off_origin() {
        let b = BumpNonlinearity::new(SigmoidFamily::TANH, 0.5).unwrap();
        let j = bump_jet(&b, 0.3, 3).unwrap();
        let f = |u: f64| b.eval(u);
        assert!((j.derivative(1) - fd_first(f, 0.3, 1e-2)).abs() < 1e-6);
        assert!((j.derivative(2) - fd_second(f, 0.3, 1e-2)).abs() < 1e-6);
        assert!((j.derivative(3) - fd_third(f, 0.3, 1e-2)).abs() < 1e-6);
    }

    use proptest::prelude::*;

    proptest! {
        #[test]
        fn bump_is_even(u in -30.0f64..30.0, delta in 0.01f64..2.0) {
            let b = BumpNonlinearity::new(SigmoidFamily::TANH, delta).unwrap();
            prop_assert!((b.eval(u) - b.eval(-u)).abs() <= 1e-12);
        }

        #[test]
        fn builtin_jets_are_odd_symmetric(u in -8.0f64..8.0) {
            for kind in SigmoidKind::ALL {
                let a = kind.taylor(u, 6);
                let b = kind.taylor(-u, 6);
                for n in 0..=6 {
                    // S^(n)(-u) = (-1)^(n+1) S^(n)(u)
                    let sign = if n % 2 == 0 { -1.0 } else { 1.0 };
                    prop_assert!((b[n] - sign * a[n]).abs() <= 1e-12 * a[n].abs().max(1.0));
                }
            }
        }
    }
}
