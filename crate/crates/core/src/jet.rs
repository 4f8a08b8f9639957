//! Truncated Taylor arithmetic.
//!
//! [`Jet`] is a univariate truncated Taylor expansion about a center point,
//! [`MultiJet`] its multivariate counterpart (up to three variables) used for
//! mixed partial derivatives, and [`Dual`] a cheap first-order special case
//! for Newton iterations. All three implement [`Scalar`], so any expression
//! written against `Scalar` can be evaluated in plain `f64` or with exact
//! derivatives up to the truncation order.

use std::ops::{Add, Mul, Neg, Sub};
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Order cap for user-facing jet evaluation.
pub const MAX_JET_ORDER: usize = 6;

/// Number type that expressions are evaluated in.
///
/// `apply` evaluates a univariate function `f` at `self`, given the Taylor
/// coefficients `f(v), f'(v), f''(v)/2!, ...` at `v = self.value()`. At least
/// `degree() + 1` coefficients must be supplied.
pub trait Scalar:
    Clone + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Neg<Output = Self>
{
    fn lift(&self, c: f64) -> Self;
    fn value(&self) -> f64;
    fn degree(&self) -> usize;
    fn apply(&self, taylor: &[f64]) -> Self;

    fn scale(&self, c: f64) -> Self {
        self.clone() * self.lift(c)
    }

    fn powi(&self, n: u32) -> Self {
        let mut acc = self.lift(1.0);
        for _ in 0..n {
            acc = acc * self.clone();
        }
        acc
    }
}

impl Scalar for f64 {
    fn lift(&self, c: f64) -> Self {
        c
    }
    fn value(&self) -> f64 {
        *self
    }
    fn degree(&self) -> usize {
        0
    }
    fn apply(&self, taylor: &[f64]) -> Self {
        taylor[0]
    }
    fn scale(&self, c: f64) -> Self {
        self * c
    }
    fn powi(&self, n: u32) -> Self {
        f64::powi(*self, n as i32)
    }
}

/// Forward-mode dual number `v + d·ε`, `ε² = 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dual {
    pub v: f64,
    pub d: f64,
}

impl Dual {
    pub fn new(v: f64, d: f64) -> Self {
        Self { v, d }
    }
    pub fn variable(v: f64) -> Self {
        Self { v, d: 1.0 }
    }
    pub fn constant(v: f64) -> Self {
        Self { v, d: 0.0 }
    }
}

impl Add for Dual {
    type Output = Dual;
    fn add(self, o: Dual) -> Dual {
        Dual::new(self.v + o.v, self.d + o.d)
    }
}

impl Sub for Dual {
    type Output = Dual;
    fn sub(self, o: Dual) -> Dual {
        Dual::new(self.v - o.v, self.d - o.d)
    }
}

impl Mul for Dual {
    type Output = Dual;
    fn mul(self, o: Dual) -> Dual {
        Dual::new(self.v * o.v, self.v * o.d + self.d * o.v)
    }
}

impl Neg for Dual {
    type Output = Dual;
    fn neg(self) -> Dual {
        Dual::new(-self.v, -self.d)
    }
}

impl Scalar for Dual {
    fn lift(&self, c: f64) -> Self {
        Dual::constant(c)
    }
    fn value(&self) -> f64 {
        self.v
    }
    fn degree(&self) -> usize {
        1
    }
    fn apply(&self, taylor: &[f64]) -> Self {
        Dual::new(taylor[0], taylor[1] * self.d)
    }
    fn scale(&self, c: f64) -> Self {
        Dual::new(self.v * c, self.d * c)
    }
}

pub(crate) fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

/// Univariate truncated Taylor expansion
/// `f(center + h) = c_0 + c_1 h + ... + c_k h^k + O(h^{k+1})`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Jet {
    center: f64,
    coeffs: Vec<f64>,
}

impl Jet {
    pub fn new(center: f64, coeffs: Vec<f64>) -> Self {
        assert!(!coeffs.is_empty(), "a jet needs at least the constant coefficient");
        Self { center, coeffs }
    }

    pub fn constant(center: f64, value: f64, order: usize) -> Self {
        let mut coeffs = vec![0.0; order + 1];
        coeffs[0] = value;
        Self { center, coeffs }
    }

    /// The identity map `x ↦ x` expanded about `center`.
    pub fn variable(center: f64, order: usize) -> Self {
        let mut coeffs = vec![0.0; order + 1];
        coeffs[0] = center;
        if order >= 1 {
            coeffs[1] = 1.0;
        }
        Self { center, coeffs }
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeff(&self, n: usize) -> f64 {
        self.coeffs.get(n).copied().unwrap_or(0.0)
    }

    /// `n`-th derivative at the center, `n! · c_n`.
    pub fn derivative(&self, n: usize) -> f64 {
        factorial(n) * self.coeff(n)
    }

    pub fn truncate(&self, order: usize) -> Jet {
        let k = order.min(self.order());
        Jet::new(self.center, self.coeffs[..=k].to_vec())
    }

    /// Jet of `outer ∘ self`, where `outer` is the jet of the outer function
    /// expanded about `self`'s value.
    pub fn compose(&self, outer: &Jet) -> Result<Jet> {
        let inner = self.coeffs[0];
        let tol = 1e-12 * inner.abs().max(1.0);
        if (outer.center - inner).abs() > tol {
            return Err(Error::JetCenterMismatch {
                outer: outer.center,
                inner,
            });
        }
        Ok(Scalar::apply(self, &outer.coeffs))
    }

    fn binary(&self, other: &Jet, f: impl Fn(f64, f64) -> f64) -> Jet {
        debug_assert_eq!(self.center, other.center);
        let k = self.order().min(other.order());
        let coeffs = (0..=k).map(|i| f(self.coeffs[i], other.coeffs[i])).collect();
        Jet::new(self.center, coeffs)
    }

    fn product(&self, other: &Jet) -> Jet {
        debug_assert_eq!(self.center, other.center);
        let k = self.order().min(other.order());
        let mut coeffs = vec![0.0; k + 1];
        for (i, a) in self.coeffs[..=k].iter().enumerate() {
            for (j, b) in other.coeffs[..=k - i].iter().enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        Jet::new(self.center, coeffs)
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, o: Jet) -> Jet {
        self.binary(&o, |a, b| a + b)
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, o: Jet) -> Jet {
        self.binary(&o, |a, b| a - b)
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        self.product(&o)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        Jet::new(self.center, self.coeffs.iter().map(|c| -c).collect())
    }
}

impl<'a> Add<&'a Jet> for &'a Jet {
    type Output = Jet;
    fn add(self, o: &Jet) -> Jet {
        self.binary(o, |a, b| a + b)
    }
}

impl<'a> Sub<&'a Jet> for &'a Jet {
    type Output = Jet;
    fn sub(self, o: &Jet) -> Jet {
        self.binary(o, |a, b| a - b)
    }
}

impl<'a> Mul<&'a Jet> for &'a Jet {
    type Output = Jet;
    fn mul(self, o: &Jet) -> Jet {
        self.product(o)
    }
}

impl Scalar for Jet {
    fn lift(&self, c: f64) -> Self {
        Jet::constant(self.center, c, self.order())
    }
    fn value(&self) -> f64 {
        self.coeffs[0]
    }
    fn degree(&self) -> usize {
        self.order()
    }
    fn apply(&self, taylor: &[f64]) -> Self {
        // Horner in the nilpotent part h = self - value.
        let k = self.order();
        let mut h = self.clone();
        h.coeffs[0] = 0.0;
        let mut acc = Jet::constant(self.center, taylor[k], k);
        for m in (0..k).rev() {
            acc = &acc * &h;
            acc.coeffs[0] += taylor[m];
        }
        acc
    }
    fn scale(&self, c: f64) -> Self {
        Jet::new(self.center, self.coeffs.iter().map(|x| x * c).collect())
    }
}

/// Maximum number of independent variables of a [`MultiJet`].
pub const MAX_JET_VARS: usize = 3;

struct MonomialTable {
    nvars: usize,
    order: usize,
    exponents: Vec<[usize; MAX_JET_VARS]>,
    // dense (order+1)^nvars -> position, usize::MAX when total degree > order
    lookup: Vec<usize>,
    // (i, j, target) with deg(i) + deg(j) <= order
    products: Vec<(u16, u16, u16)>,
}

impl MonomialTable {
    fn build(nvars: usize, order: usize) -> Self {
        let side = order + 1;
        let dense = side.pow(nvars as u32);
        let mut exponents = Vec::new();
        for degree in 0..=order {
            for flat in 0..dense {
                let e = Self::unflatten(flat, nvars, side);
                if e.iter().sum::<usize>() == degree {
                    exponents.push(e);
                }
            }
        }
        let mut lookup = vec![usize::MAX; dense];
        for (pos, e) in exponents.iter().enumerate() {
            lookup[Self::flatten(e, nvars, side)] = pos;
        }
        let mut products = Vec::new();
        for (i, a) in exponents.iter().enumerate() {
            for (j, b) in exponents.iter().enumerate() {
                let mut sum = [0usize; MAX_JET_VARS];
                for v in 0..nvars {
                    sum[v] = a[v] + b[v];
                }
                if sum.iter().sum::<usize>() <= order {
                    let target = lookup[Self::flatten(&sum, nvars, side)];
                    products.push((i as u16, j as u16, target as u16));
                }
            }
        }
        Self {
            nvars,
            order,
            exponents,
            lookup,
            products,
        }
    }

    fn flatten(e: &[usize; MAX_JET_VARS], nvars: usize, side: usize) -> usize {
        (0..nvars).rev().fold(0, |acc, v| acc * side + e[v])
    }

    fn unflatten(mut flat: usize, nvars: usize, side: usize) -> [usize; MAX_JET_VARS] {
        let mut e = [0usize; MAX_JET_VARS];
        for slot in e.iter_mut().take(nvars) {
            *slot = flat % side;
            flat /= side;
        }
        e
    }

    fn position(&self, exps: &[usize]) -> Option<usize> {
        if exps.len() != self.nvars || exps.iter().any(|&e| e > self.order) {
            return None;
        }
        let mut e = [0usize; MAX_JET_VARS];
        e[..self.nvars].copy_from_slice(exps);
        match self.lookup[Self::flatten(&e, self.nvars, self.order + 1)] {
            usize::MAX => None,
            pos => Some(pos),
        }
    }
}

fn table(nvars: usize, order: usize) -> &'static MonomialTable {
    static TABLES: [[OnceLock<MonomialTable>; MAX_JET_ORDER + 1]; MAX_JET_VARS + 1] =
        [const { [const { OnceLock::new() }; MAX_JET_ORDER + 1] }; MAX_JET_VARS + 1];
    TABLES[nvars][order].get_or_init(|| MonomialTable::build(nvars, order))
}

/// Multivariate truncated Taylor polynomial in up to three variables with
/// total degree at most `order`.
#[derive(Clone)]
pub struct MultiJet {
    table: &'static MonomialTable,
    coeffs: Vec<f64>,
}

impl std::fmt::Debug for MultiJet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MultiJet")
            .field("nvars", &self.table.nvars)
            .field("order", &self.table.order)
            .field("coeffs", &self.coeffs)
            .finish()
    }
}

impl MultiJet {
    fn check_shape(nvars: usize, order: usize) -> Result<()> {
        if nvars == 0 || nvars > MAX_JET_VARS {
            return Err(Error::InvalidArgument(format!(
                "multivariate jets support 1..={MAX_JET_VARS} variables, got {nvars}"
            )));
        }
        if order > MAX_JET_ORDER {
            return Err(Error::OrderCap {
                requested: order,
                cap: MAX_JET_ORDER,
            });
        }
        Ok(())
    }

    pub fn constant(nvars: usize, order: usize, value: f64) -> Result<Self> {
        Self::check_shape(nvars, order)?;
        let table = table(nvars, order);
        let mut coeffs = vec![0.0; table.exponents.len()];
        coeffs[0] = value;
        Ok(Self { table, coeffs })
    }

    /// The coordinate function `x_var` expanded about `value`.
    pub fn variable(nvars: usize, order: usize, var: usize, value: f64) -> Result<Self> {
        if var >= nvars {
            return Err(Error::InvalidArgument(format!(
                "variable index {var} out of range for {nvars} variables"
            )));
        }
        let mut jet = Self::constant(nvars, order, value)?;
        if order >= 1 {
            let mut e = vec![0; nvars];
            e[var] = 1;
            let pos = jet.table.position(&e).expect("degree-one monomial");
            jet.coeffs[pos] = 1.0;
        }
        Ok(jet)
    }

    pub fn nvars(&self) -> usize {
        self.table.nvars
    }

    pub fn order(&self) -> usize {
        self.table.order
    }

    /// Taylor coefficient of the monomial with the given exponents (zero
    /// beyond the truncation order).
    pub fn coeff(&self, exps: &[usize]) -> f64 {
        self.table.position(exps).map_or(0.0, |p| self.coeffs[p])
    }

    /// Mixed partial derivative with the given multi-index.
    pub fn derivative(&self, exps: &[usize]) -> f64 {
        let scale: f64 = exps.iter().map(|&e| factorial(e)).product();
        scale * self.coeff(exps)
    }

    fn same_shape(&self, other: &MultiJet) {
        debug_assert!(std::ptr::eq(self.table, other.table), "jet shapes differ");
    }

    fn product(&self, other: &MultiJet) -> MultiJet {
        self.same_shape(other);
        let mut coeffs = vec![0.0; self.coeffs.len()];
        for &(i, j, t) in &self.table.products {
            let a = self.coeffs[i as usize];
            if a != 0.0 {
                coeffs[t as usize] += a * other.coeffs[j as usize];
            }
        }
        MultiJet {
            table: self.table,
            coeffs,
        }
    }
}

impl Add for MultiJet {
    type Output = MultiJet;
    fn add(mut self, o: MultiJet) -> MultiJet {
        self.same_shape(&o);
        for (a, b) in self.coeffs.iter_mut().zip(o.coeffs) {
            *a += b;
        }
        self
    }
}

impl Sub for MultiJet {
    type Output = MultiJet;
    fn sub(mut self, o: MultiJet) -> MultiJet {
        self.same_shape(&o);
        for (a, b) in self.coeffs.iter_mut().zip(o.coeffs) {
            *a -= b;
        }
        self
    }
}

impl Mul for MultiJet {
    type Output = MultiJet;
    fn mul(self, o: MultiJet) -> MultiJet {
        self.product(&o)
    }
}

impl Neg for MultiJet {
    type Output = MultiJet;
    fn neg(mut self) -> MultiJet {
        for a in self.coeffs.iter_mut() {
            *a = -*a;
        }
        self
    }
}

impl Scalar for MultiJet {
    fn lift(&self, c: f64) -> Self {
        let mut coeffs = vec![0.0; self.coeffs.len()];
        coeffs[0] = c;
        MultiJet {
            table: self.table,
            coeffs,
        }
    }
    fn value(&self) -> f64 {
        self.coeffs[0]
    }
    fn degree(&self) -> usize {
        self.table.order
    }
    fn apply(&self, taylor: &[f64]) -> Self {
        let k = self.table.order;
        let mut h = self.clone();
        h.coeffs[0] = 0.0;
        let mut acc = self.lift(taylor[k]);
        for m in (0..k).rev() {
            acc = acc.product(&h);
            acc.coeffs[0] += taylor[m];
        }
        acc
    }
    fn scale(&self, c: f64) -> Self {
        MultiJet {
            table: self.table,
            coeffs: self.coeffs.iter().map(|x| x * c).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poly_eval(c: &[f64], x: f64) -> f64 {
        c.iter().rev().fold(0.0, |acc, a| acc * x + a)
    }

    #[test]
    fn derivative_extraction_uses_factorials() {
        let j = Jet::new(0.0, vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(j.derivative(0), 1.0);
        assert_eq!(j.derivative(2), 6.0);
        assert_eq!(j.derivative(3), 24.0);
        assert_eq!(j.derivative(7), 0.0);
    }

    #[test]
    fn product_of_polynomials_is_exact() {
        // (1 + x)^2 (2 - x) about x = 0.5, order 4
        let x = Jet::variable(0.5, 4);
        let one = x.lift(1.0);
        let two = x.lift(2.0);
        let a = one + x.clone();
        let f = a.clone() * a * (two - x);
        // f(x) = 2 + 3x - x^3 ; derivatives at 0.5
        assert!((f.coeff(0) - (2.0 + 1.5 - 0.125)).abs() < 1e-15);
        assert!((f.derivative(1) - (3.0 - 3.0 * 0.25)).abs() < 1e-14);
        assert!((f.derivative(2) - (-6.0 * 0.5)).abs() < 1e-14);
        assert!((f.derivative(3) + 6.0).abs() < 1e-14);
        assert_eq!(f.derivative(4), 0.0);
    }

    #[test]
    fn composition_rejects_mismatched_centers() {
        let inner = Jet::variable(0.3, 2);
        let outer = Jet::new(1.0, vec![0.0, 1.0, 0.0]);
        assert!(matches!(
            inner.compose(&outer),
            Err(Error::JetCenterMismatch { .. })
        ));
    }

    #[test]
    fn multijet_mixed_partials_of_polynomial() {
        // f(x, y) = x^2 y + 3 y^3 at (1, 2)
        let x = MultiJet::variable(2, 3, 0, 1.0).unwrap();
        let y = MultiJet::variable(2, 3, 1, 2.0).unwrap();
        let f = x.clone() * x.clone() * y.clone() + y.powi(3).scale(3.0);
        assert!((f.value() - (2.0 + 24.0)).abs() < 1e-13);
        assert!((f.derivative(&[1, 0]) - 4.0).abs() < 1e-13);
        assert!((f.derivative(&[0, 1]) - (1.0 + 36.0)).abs() < 1e-13);
        assert!((f.derivative(&[1, 1]) - 2.0).abs() < 1e-13);
        assert!((f.derivative(&[2, 1]) - 2.0).abs() < 1e-13);
        assert!((f.derivative(&[0, 3]) - 18.0).abs() < 1e-13);
        assert_eq!(f.derivative(&[4, 0]), 0.0);
    }

    #[test]
    fn multijet_rejects_bad_shapes() {
        assert!(MultiJet::constant(4, 2, 0.0).is_err());
        assert!(matches!(
            MultiJet::constant(2, 7, 0.0),
            Err(Error::OrderCap { cap: 6, .. })
        ));
        assert!(MultiJet::variable(2, 2, 2, 0.0).is_err());
    }

    #[test]
    fn dual_matches_jet_first_order() {
        let x = Dual::variable(0.7);
        let f = x * x * x - x.scale(2.0);
        assert!((f.v - (0.343 - 1.4)).abs() < 1e-15);
        assert!((f.d - (3.0 * 0.49 - 2.0)).abs() < 1e-15);
    }

    use proptest::prelude::*;

    proptest! {
        // Composition of polynomial jets equals the jet of the composed
        // polynomial, computed here by direct expansion of p(q(x)).
        #[test]
        fn composition_matches_composed_closed_form(
            p in proptest::collection::vec(-2.0f64..2.0, 4),
            q in proptest::collection::vec(-2.0f64..2.0, 3),
            x0 in -1.0f64..1.0,
        ) {
            let order = 4;
            let inner = {
                let x = Jet::variable(x0, order);
                let mut acc = x.lift(0.0);
                let mut pow = x.lift(1.0);
                for c in &q {
                    acc = acc + pow.scale(*c);
                    pow = pow * x.clone();
                }
                acc
            };
            // outer jet: Taylor coefficients of p about q(x0)
            let v = inner.value();
            let outer_var = Jet::variable(v, order);
            let mut outer = outer_var.lift(0.0);
            let mut pow = outer_var.lift(1.0);
            for c in &p {
                outer = outer + pow.scale(*c);
                pow = pow * outer_var.clone();
            }
            let composed = inner.compose(&outer).unwrap();

            // closed form: expand p(q(x)) as a polynomial in x, then shift to x0
            let mut full = vec![0.0; 16];
            let mut qpow = vec![1.0];
            for c in &p {
                for (i, a) in qpow.iter().enumerate() {
                    full[i] += c * a;
                }
                let mut next = vec![0.0; qpow.len() + q.len() - 1];
                for (i, a) in qpow.iter().enumerate() {
                    for (j, b) in q.iter().enumerate() {
                        next[i + j] += a * b;
                    }
                }
                qpow = next;
            }
            for n in 0..=order {
                // n-th derivative of the full polynomial at x0
                let mut d = full.clone();
                for _ in 0..n {
                    d = d.iter().enumerate().skip(1).map(|(i, a)| a * i as f64).collect();
                    if d.is_empty() { d.push(0.0); }
                }
                let expected = poly_eval(&d, x0);
                prop_assert!((composed.derivative(n) - expected).abs() <= 1e-10 * expected.abs().max(1.0));
            }
        }
    }
}
