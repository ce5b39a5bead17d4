//! Finite Laurent series on the unit circle with real coefficients.
//!
//! A [`CircleFunction`] stores the coefficients `c_m` of `f(t) = Σ c_m t^m`
//! over a dense window `[lo, hi]`; everything outside the window is zero.
//! Real coefficients encode the symmetry `f(t̄) = conj(f(t))` on `|t| = 1`,
//! so conjugation on the circle is the coefficient reversal `m ↦ -m`.
//!
//! Algebra (sum, product, reversal, Riesz projections) is exact at the
//! coefficient level. Grids are only used for validation and for the
//! log-modulus quadrature of the outer test, see [`grid`] and [`inner_outer`].

pub mod grid;
pub mod inner_outer;
pub mod rational;

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use grid::GridSampling;
pub use inner_outer::{
    inner_defect, inner_symmetric_factory, outer_test, InnerOptions, InnerSpec, OuterTest,
    OuterVerdict,
};

/// Hard cap on the number of stored coefficients produced by checked algebra.
pub const DEFAULT_WINDOW_CAP: usize = 1 << 20;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CircleError {
    #[error("coefficient at index {index} is not finite")]
    NonFinite { index: i64 },
    #[error("result window of {window} coefficients exceeds the cap of {cap}")]
    WindowOverflow { window: usize, cap: usize },
    #[error("function has negative-index coefficients and cannot be evaluated at |ζ| = {modulus} < 1")]
    LaurentInsideDisk { modulus: f64 },
    #[error("evaluation point with |ζ| = {modulus} lies outside the closed unit disk")]
    OutsideDisk { modulus: f64 },
    #[error("zero {zero} is not strictly inside the unit disk")]
    ZeroOutsideDisk { zero: f64 },
    #[error("truncated expansion misses unit modulus by {achieved:e} (window {window}, tolerance {tolerance:e})")]
    TruncationTooShort {
        achieved: f64,
        window: usize,
        tolerance: f64,
    },
    #[error("grid of {grid} points is too small for a window of {window} coefficients")]
    GridTooSmall { grid: usize, window: usize },
    #[error("grid size {0} is not a power of two")]
    GridNotPowerOfTwo(usize),
    #[error("denominator polynomial vanishes at the origin")]
    DenominatorVanishesAtOrigin,
    #[error("denominator has a zero of modulus {modulus} inside the closed unit disk")]
    PoleInDisk { modulus: f64 },
    #[error("series did not reach the tail tolerance within {cap} coefficients")]
    SeriesTooLong { cap: usize },
}

/// Finite real Laurent series on the unit circle.
#[derive(Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "CoeffMap", into = "CoeffMap")]
pub struct CircleFunction {
    lo: i64,
    coeffs: Vec<f64>,
}

/// JSON shape: `{"coeffs": {"m": c_m, ...}}`.
#[derive(Serialize, Deserialize)]
struct CoeffMap {
    coeffs: BTreeMap<i64, f64>,
}

impl TryFrom<CoeffMap> for CircleFunction {
    type Error = CircleError;

    fn try_from(map: CoeffMap) -> Result<Self, Self::Error> {
        CircleFunction::from_map(&map.coeffs)
    }
}

impl From<CircleFunction> for CoeffMap {
    fn from(f: CircleFunction) -> Self {
        CoeffMap {
            coeffs: f.iter().filter(|&(_, c)| c != 0.0).collect(),
        }
    }
}

impl fmt::Debug for CircleFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "CircleFunction(0)");
        }
        write!(f, "CircleFunction[{}..={}](", self.lo, self.hi())?;
        let shown = self.coeffs.len().min(8);
        for (i, c) in self.coeffs[..shown].iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        if self.coeffs.len() > shown {
            write!(f, ", …")?;
        }
        write!(f, ")")
    }
}

/// Sign selector for the Riesz projections.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RieszSign {
    /// Keeps indices `m >= 0`.
    Plus,
    /// Keeps indices `m < 0`.
    Minus,
}

/// Operation for [`laurent_algebra`].
#[derive(Clone, Copy, Debug)]
pub enum LaurentOp<'a> {
    Add(&'a CircleFunction),
    Mul(&'a CircleFunction),
    Conj,
    Involute,
}

/// Checked coefficient-level algebra. The result window must not exceed `cap`.
pub fn laurent_algebra(
    f: &CircleFunction,
    op: LaurentOp<'_>,
    cap: usize,
) -> Result<CircleFunction, CircleError> {
    let window = match op {
        LaurentOp::Add(g) => match (f.window(), g.window()) {
            (Some((a, b)), Some((c, d))) => (b.max(d) - a.min(c) + 1) as usize,
            _ => f.len().max(g.len()),
        },
        LaurentOp::Mul(g) => {
            if f.is_zero() || g.is_zero() {
                0
            } else {
                f.len() + g.len() - 1
            }
        }
        LaurentOp::Conj | LaurentOp::Involute => f.len(),
    };
    if window > cap {
        return Err(CircleError::WindowOverflow { window, cap });
    }
    Ok(match op {
        LaurentOp::Add(g) => f + g,
        LaurentOp::Mul(g) => f * g,
        LaurentOp::Conj => f.conj(),
        LaurentOp::Involute => f.involute(),
    })
}

impl CircleFunction {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::constant(1.0)
    }

    pub fn constant(c: f64) -> Self {
        Self::monomial(0, c)
    }

    /// `c · t^k`.
    pub fn monomial(k: i64, c: f64) -> Self {
        Self {
            lo: k,
            coeffs: vec![c],
        }
        .normalized()
    }

    /// The uniformizer `z(t) = t⁻¹ + t`.
    pub fn uniformizer() -> Self {
        Self {
            lo: -1,
            coeffs: vec![1.0, 0.0, 1.0],
        }
    }

    /// Builds `Σ coeffs[i] t^(lo+i)`.
    pub fn from_coeffs(lo: i64, coeffs: Vec<f64>) -> Result<Self, CircleError> {
        if let Some(i) = coeffs.iter().position(|c| !c.is_finite()) {
            return Err(CircleError::NonFinite {
                index: lo + i as i64,
            });
        }
        Ok(Self { lo, coeffs }.normalized())
    }

    /// Polynomial `Σ coeffs[i] t^i`.
    pub fn polynomial(coeffs: &[f64]) -> Result<Self, CircleError> {
        Self::from_coeffs(0, coeffs.to_vec())
    }

    pub fn from_map(map: &BTreeMap<i64, f64>) -> Result<Self, CircleError> {
        let (Some((&lo, _)), Some((&hi, _))) = (map.first_key_value(), map.last_key_value())
        else {
            return Ok(Self::zero());
        };
        let mut coeffs = vec![0.0; (hi - lo + 1) as usize];
        for (&m, &c) in map {
            coeffs[(m - lo) as usize] = c;
        }
        Self::from_coeffs(lo, coeffs)
    }

    /// Strips exact zeros from both ends of the window.
    fn normalized(mut self) -> Self {
        let first = self.coeffs.iter().position(|&c| c != 0.0);
        match first {
            None => Self::zero(),
            Some(first) => {
                let last = self.coeffs.iter().rposition(|&c| c != 0.0).unwrap();
                self.coeffs.truncate(last + 1);
                self.coeffs.drain(..first);
                self.lo += first as i64;
                self
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Number of stored coefficients.
    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Lowest stored index (0 for the zero function).
    pub fn lo(&self) -> i64 {
        self.lo
    }

    /// Highest stored index (`lo - 1` for the zero function).
    pub fn hi(&self) -> i64 {
        self.lo + self.coeffs.len() as i64 - 1
    }

    pub fn window(&self) -> Option<(i64, i64)> {
        (!self.is_zero()).then(|| (self.lo, self.hi()))
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeff(&self, m: i64) -> f64 {
        let i = m - self.lo;
        if i < 0 {
            return 0.0;
        }
        self.coeffs.get(i as usize).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.coeffs
            .iter()
            .enumerate()
            .map(move |(i, &c)| (self.lo + i as i64, c))
    }

    /// True when no coefficient sits at a negative index.
    pub fn is_analytic(&self) -> bool {
        self.is_zero() || self.lo >= 0
    }

    /// How far the window reaches below index 0 (0 for analytic functions).
    pub fn negative_depth(&self) -> usize {
        if self.is_zero() {
            0
        } else {
            (-self.lo).max(0) as usize
        }
    }

    /// `f ↦ f(t̄)`: coefficient `c_{-m}` at index `m`.
    pub fn involute(&self) -> Self {
        if self.is_zero() {
            return Self::zero();
        }
        let mut coeffs = self.coeffs.clone();
        coeffs.reverse();
        Self {
            lo: -self.hi(),
            coeffs,
        }
    }

    /// Pointwise complex conjugate on `|t| = 1`; for real coefficients this is
    /// the same reversal as [`involute`](Self::involute).
    pub fn conj(&self) -> Self {
        self.involute()
    }

    /// Multiplication by `t^k`.
    pub fn shift(&self, k: i64) -> Self {
        if self.is_zero() {
            return Self::zero();
        }
        Self {
            lo: self.lo + k,
            coeffs: self.coeffs.clone(),
        }
    }

    pub fn scale(&self, c: f64) -> Self {
        Self {
            lo: self.lo,
            coeffs: self.coeffs.iter().map(|x| x * c).collect(),
        }
        .normalized()
    }

    pub fn riesz(&self, sign: RieszSign) -> Self {
        match sign {
            RieszSign::Plus => self.restrict(0, i64::MAX),
            RieszSign::Minus => self.restrict(i64::MIN, -1),
        }
    }

    /// Keeps the coefficients with index in `[from, to]`.
    pub fn restrict(&self, from: i64, to: i64) -> Self {
        if self.is_zero() || to < from {
            return Self::zero();
        }
        let a = from.max(self.lo);
        let b = to.min(self.hi());
        if b < a {
            return Self::zero();
        }
        Self {
            lo: a,
            coeffs: self.coeffs[(a - self.lo) as usize..=(b - self.lo) as usize].to_vec(),
        }
        .normalized()
    }

    /// Drops leading and trailing coefficients with magnitude below `tol`.
    pub fn trim(&self, tol: f64) -> Self {
        let first = self.coeffs.iter().position(|c| c.abs() >= tol);
        match first {
            None => Self::zero(),
            Some(first) => {
                let last = self.coeffs.iter().rposition(|c| c.abs() >= tol).unwrap();
                Self {
                    lo: self.lo + first as i64,
                    coeffs: self.coeffs[first..=last].to_vec(),
                }
                .normalized()
            }
        }
    }

    /// Plain `L²(T)` pairing `⟨f, g⟩ = Σ f_m g_m`.
    pub fn dot(&self, other: &Self) -> f64 {
        if self.is_zero() || other.is_zero() {
            return 0.0;
        }
        let a = self.lo.max(other.lo);
        let b = self.hi().min(other.hi());
        if b < a {
            return 0.0;
        }
        let x = &self.coeffs[(a - self.lo) as usize..=(b - self.lo) as usize];
        let y = &other.coeffs[(a - other.lo) as usize..=(b - other.lo) as usize];
        x.iter().zip(y).map(|(u, v)| u * v).sum()
    }

    pub fn l2_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    /// Largest coefficient-wise difference.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        (self - other)
            .coeffs
            .iter()
            .fold(0.0, |acc, c| acc.max(c.abs()))
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |acc, c| acc.max(c.abs()))
    }

    /// Value at `ζ` with `|ζ| ≤ 1`. Functions with negative-index coefficients
    /// can only be evaluated on the circle itself.
    pub fn eval(&self, zeta: Complex64) -> Result<Complex64, CircleError> {
        let modulus = zeta.norm();
        if modulus > 1.0 + 1e-12 {
            return Err(CircleError::OutsideDisk { modulus });
        }
        if self.is_zero() {
            return Ok(Complex64::new(0.0, 0.0));
        }
        if self.lo < 0 && (modulus - 1.0).abs() > 1e-12 {
            return Err(CircleError::LaurentInsideDisk { modulus });
        }
        if self.lo >= 0 {
            let poly = horner(&self.coeffs, zeta);
            return Ok(poly * zeta.powi(self.lo as i32));
        }
        // On the circle: split into t^lo · poly(t) with t^lo = conj(t)^|lo|.
        let poly = horner(&self.coeffs, zeta);
        Ok(poly * zeta.conj().powi((-self.lo) as i32) / modulus.powi(2 * (-self.lo) as i32))
    }

    /// Value at the origin; only defined for analytic functions.
    pub fn value_at_origin(&self) -> Result<f64, CircleError> {
        if !self.is_analytic() {
            return Err(CircleError::LaurentInsideDisk { modulus: 0.0 });
        }
        Ok(self.coeff(0))
    }

    pub fn sample(&self, size: usize) -> Result<GridSampling, CircleError> {
        GridSampling::of(self, size)
    }
}

fn horner(coeffs: &[f64], x: Complex64) -> Complex64 {
    coeffs
        .iter()
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * x + c)
}

fn convolve(f: &CircleFunction, g: &CircleFunction) -> CircleFunction {
    if f.is_zero() || g.is_zero() {
        return CircleFunction::zero();
    }
    let mut out = vec![0.0; f.len() + g.len() - 1];
    for (i, &a) in f.coeffs.iter().enumerate() {
        if a == 0.0 {
            continue;
        }
        for (j, &b) in g.coeffs.iter().enumerate() {
            out[i + j] += a * b;
        }
    }
    CircleFunction {
        lo: f.lo + g.lo,
        coeffs: out,
    }
    .normalized()
}

fn combine(f: &CircleFunction, g: &CircleFunction, sign: f64) -> CircleFunction {
    match (f.window(), g.window()) {
        (None, None) => CircleFunction::zero(),
        (Some(_), None) => f.clone(),
        (None, Some(_)) => g.scale(sign),
        (Some((a, b)), Some((c, d))) => {
            let lo = a.min(c);
            let hi = b.max(d);
            let mut coeffs = vec![0.0; (hi - lo + 1) as usize];
            for (m, x) in f.iter() {
                coeffs[(m - lo) as usize] += x;
            }
            for (m, x) in g.iter() {
                coeffs[(m - lo) as usize] += sign * x;
            }
            CircleFunction { lo, coeffs }.normalized()
        }
    }
}

impl Add for &CircleFunction {
    type Output = CircleFunction;
    fn add(self, rhs: Self) -> CircleFunction {
        combine(self, rhs, 1.0)
    }
}

impl Sub for &CircleFunction {
    type Output = CircleFunction;
    fn sub(self, rhs: Self) -> CircleFunction {
        combine(self, rhs, -1.0)
    }
}

impl Mul for &CircleFunction {
    type Output = CircleFunction;
    fn mul(self, rhs: Self) -> CircleFunction {
        convolve(self, rhs)
    }
}

impl Neg for &CircleFunction {
    type Output = CircleFunction;
    fn neg(self) -> CircleFunction {
        self.scale(-1.0)
    }
}

macro_rules! forward_owned {
    ($tr:ident, $method:ident) => {
        impl $tr for CircleFunction {
            type Output = CircleFunction;
            fn $method(self, rhs: Self) -> CircleFunction {
                (&self).$method(&rhs)
            }
        }
        impl $tr<&CircleFunction> for CircleFunction {
            type Output = CircleFunction;
            fn $method(self, rhs: &CircleFunction) -> CircleFunction {
                (&self).$method(rhs)
            }
        }
        impl $tr<CircleFunction> for &CircleFunction {
            type Output = CircleFunction;
            fn $method(self, rhs: CircleFunction) -> CircleFunction {
                self.$method(&rhs)
            }
        }
    };
}

forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Neg for CircleFunction {
    type Output = CircleFunction;
    fn neg(self) -> CircleFunction {
        self.scale(-1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn t() -> CircleFunction {
        CircleFunction::monomial(1, 1.0)
    }

    #[test]
    fn monomial_product_cancels() {
        let prod = &t() * &CircleFunction::monomial(-1, 1.0);
        assert_eq!(prod, CircleFunction::one());
    }

    #[test]
    fn involute_reverses_coefficients() {
        let f = CircleFunction::monomial(1, 2.5);
        assert_eq!(f.involute(), CircleFunction::monomial(-1, 2.5));
        let g = CircleFunction::from_coeffs(-2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let r = g.involute();
        for m in -3..=3 {
            assert_eq!(r.coeff(m), g.coeff(-m));
        }
    }

    #[test]
    fn uniformizer_shifts_monomials() {
        let z = CircleFunction::uniformizer();
        for n in -3..=3 {
            let lhs = &z * &CircleFunction::monomial(n, 1.0);
            let rhs = &CircleFunction::monomial(n - 1, 1.0) + &CircleFunction::monomial(n + 1, 1.0);
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn riesz_projection_examples() {
        let f = CircleFunction::from_coeffs(-1, vec![1.0, 1.0, 1.0]).unwrap();
        assert_eq!(
            f.riesz(RieszSign::Plus),
            CircleFunction::polynomial(&[1.0, 1.0]).unwrap()
        );
        let analytic = CircleFunction::polynomial(&[0.3, -1.0, 2.0]).unwrap();
        assert_eq!(analytic.riesz(RieszSign::Plus), analytic);
        assert!(analytic.riesz(RieszSign::Minus).is_zero());
    }

    #[test]
    fn eval_examples() {
        let f = CircleFunction::polynomial(&[1.0, 1.0]).unwrap();
        assert_eq!(f.eval(Complex64::new(0.0, 0.0)).unwrap(), Complex64::new(1.0, 0.0));
        let z = CircleFunction::uniformizer();
        let v = z.eval(Complex64::new(1.0, 0.0)).unwrap();
        assert!((v - Complex64::new(2.0, 0.0)).norm() < 1e-15);
        let s = CircleFunction::polynomial(&[0.5, 0.0, -0.5]).unwrap();
        assert_eq!(s.value_at_origin().unwrap(), 0.5);
    }

    #[test]
    fn eval_rejects_laurent_part_at_origin() {
        let z = CircleFunction::uniformizer();
        assert!(matches!(
            z.eval(Complex64::new(0.0, 0.0)),
            Err(CircleError::LaurentInsideDisk { .. })
        ));
        assert!(z.value_at_origin().is_err());
        assert!(matches!(
            t().eval(Complex64::new(1.5, 0.0)),
            Err(CircleError::OutsideDisk { .. })
        ));
    }

    #[test]
    fn eval_on_circle_matches_direct_sum() {
        let f = CircleFunction::from_coeffs(-3, vec![0.5, -1.0, 2.0, 0.25, 3.0]).unwrap();
        let zeta = Complex64::from_polar(1.0, 0.7);
        let direct: Complex64 = f.iter().map(|(m, c)| c * zeta.powi(m as i32)).sum();
        assert!((f.eval(zeta).unwrap() - direct).norm() < 1e-13);
    }

    #[test]
    fn window_cap_is_enforced() {
        let f = CircleFunction::from_coeffs(0, vec![1.0; 10]).unwrap();
        let err = laurent_algebra(&f, LaurentOp::Mul(&f), 15).unwrap_err();
        assert_eq!(err, CircleError::WindowOverflow { window: 19, cap: 15 });
        assert!(laurent_algebra(&f, LaurentOp::Mul(&f), 19).is_ok());
    }

    #[test]
    fn non_finite_coefficients_rejected() {
        assert_eq!(
            CircleFunction::from_coeffs(3, vec![1.0, f64::NAN]).unwrap_err(),
            CircleError::NonFinite { index: 4 }
        );
    }

    #[test]
    fn zero_function_behaviour() {
        let z = CircleFunction::from_coeffs(5, vec![0.0, 0.0]).unwrap();
        assert!(z.is_zero());
        assert_eq!(z.window(), None);
        assert!((&z * &t()).is_zero());
        assert_eq!(&z + &t(), t());
    }

    #[test]
    fn json_schema_uses_string_indices() {
        let f = CircleFunction::from_coeffs(-1, vec![0.5, 0.0, 2.0]).unwrap();
        let json = serde_json::to_string(&f).unwrap();
        assert_eq!(json, r#"{"coeffs":{"-1":0.5,"1":2.0}}"#);
        let back: CircleFunction = serde_json::from_str(&json).unwrap();
        assert_eq!(back, f);
    }

    fn arb_fn() -> impl Strategy<Value = CircleFunction> {
        (-6i64..6, prop::collection::vec(-2.0f64..2.0, 0..12))
            .prop_map(|(lo, c)| CircleFunction::from_coeffs(lo, c).unwrap())
    }

    proptest! {
        #[test]
        fn involute_is_an_involution(f in arb_fn()) {
            prop_assert_eq!(f.involute().involute(), f);
        }

        #[test]
        fn riesz_projections_partition(f in arb_fn()) {
            let p = f.riesz(RieszSign::Plus);
            let m = f.riesz(RieszSign::Minus);
            prop_assert_eq!(p.riesz(RieszSign::Plus), p.clone());
            prop_assert_eq!(&p + &m, f);
        }

        #[test]
        fn products_match_grid_samples(f in arb_fn(), g in arb_fn()) {
            let prod = &f * &g;
            let size = 64;
            let (sf, sg, sp) = (f.sample(size).unwrap(), g.sample(size).unwrap(), prod.sample(size).unwrap());
            for k in 0..size {
                let err = (sf.values()[k] * sg.values()[k] - sp.values()[k]).norm();
                prop_assert!(err < 1e-12, "k={} err={}", k, err);
            }
        }
    }
}
