//! Jost solutions of finitely supported perturbations of `J₀` and the
//! scattering matrix read off from them.
//!
//! Beyond the support the recurrence is the free one, solved exactly by
//! `tⁿ` and `t^{-n-1}`. The plus solution equals `tⁿ` to the right of the
//! support; to the left it is `A(t) tⁿ + B(t) t^{-n-1}` with Laurent
//! polynomials `(1 - t²) A` and `(1 - t²) B`. Then `s = 1/A`, `s₋ = B/A`.
//! The minus solution is the mirror image (`t^{-n-1}` on the left), and its
//! right-hand coefficient gives `s₊`.
//!
//! Every step is Laurent-polynomial arithmetic with division only by the
//! constants `p_n`, so recurrence residuals vanish up to rounding.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circle_fn::rational::{
    cancel_edge_factors, min_root_modulus, rational_series, SERIES_TAIL_TOL,
};
use crate::circle_fn::{CircleError, CircleFunction};
use crate::jacobi::{JacobiError, JacobiMatrix};
use crate::smatrix::{validate, ScatteringMatrix, ValidationOptions, ValidationReport};

/// Roots of the transmission denominator closer to the circle than this
/// count as lying in the closed disk.
pub const ROOT_MARGIN: f64 = 1e-10;

/// Allowed coefficient mismatch between the two directional runs.
pub const DIRECTION_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DirectError {
    #[error("direct scattering needs a finite perturbation, got a truncated matrix")]
    Truncated,
    #[error(transparent)]
    Jacobi(#[from] JacobiError),
    #[error(transparent)]
    Circle(#[from] CircleError),
    #[error("bound state present: transmission denominator has a zero of modulus {modulus}")]
    BoundState { modulus: f64 },
    #[error("transmission denominator vanishes at t = {edge} without a matching numerator zero")]
    EdgeResonance { edge: f64 },
    #[error("plus and minus runs disagree on the transmission denominator by {defect:e}")]
    DirectionMismatch { defect: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// `e(n) = tⁿ` to the right of the support.
    Plus,
    /// `e(n) = t^{-n-1}` to the left of the support.
    Minus,
}

/// Values `e(n, ·)` for `n` in `[lo, lo + values.len())`.
#[derive(Clone, Debug, PartialEq)]
pub struct JostSolution {
    pub direction: Direction,
    lo: i64,
    values: Vec<CircleFunction>,
}

impl JostSolution {
    pub fn range(&self) -> (i64, i64) {
        (self.lo, self.lo + self.values.len() as i64 - 1)
    }

    pub fn get(&self, n: i64) -> Option<&CircleFunction> {
        let i = n - self.lo;
        if i < 0 {
            return None;
        }
        self.values.get(i as usize)
    }

    /// `p_n e(n-1) + q_n e(n) + p_{n+1} e(n+1) - z e(n)` at an interior `n`.
    pub fn recurrence_residual(
        &self,
        j: &JacobiMatrix,
        n: i64,
    ) -> Result<Option<CircleFunction>, JacobiError> {
        let (Some(prev), Some(cur), Some(next)) = (self.get(n - 1), self.get(n), self.get(n + 1))
        else {
            return Ok(None);
        };
        let (p_n, q_n) = j.coeffs(n)?;
        let p_next = j.p(n + 1)?;
        let lhs = &(&prev.scale(p_n) + &cur.scale(q_n)) + &next.scale(p_next);
        Ok(Some(&lhs - &(&CircleFunction::uniformizer() * cur)))
    }
}

fn support_or_origin(j: &JacobiMatrix) -> Result<(i64, i64), DirectError> {
    if j.is_truncated() {
        return Err(DirectError::Truncated);
    }
    Ok(j.support().unwrap_or((0, 0)))
}

/// Exact Jost solution over `[lo - 2, hi + 2]` where `[lo, hi]` is the
/// support of the perturbation.
pub fn jost_propagate(j: &JacobiMatrix, direction: Direction) -> Result<JostSolution, DirectError> {
    let (lo, hi) = support_or_origin(j)?;
    let z = CircleFunction::uniformizer();
    let count = (hi - lo + 5) as usize;
    match direction {
        Direction::Plus => {
            // e(hi+2), e(hi+1) seeded, then p_n e(n-1) = (z - q_n) e(n) - p_{n+1} e(n+1)
            let mut rev = vec![
                CircleFunction::monomial(hi + 2, 1.0),
                CircleFunction::monomial(hi + 1, 1.0),
            ];
            for n in (lo - 1..=hi + 1).rev() {
                let (p_n, q_n) = j.coeffs(n)?;
                let p_next = j.p(n + 1)?;
                let cur = &rev[rev.len() - 1];
                let next = &rev[rev.len() - 2];
                let rhs = &(&(&z * cur) - &cur.scale(q_n)) - &next.scale(p_next);
                rev.push(rhs.scale(1.0 / p_n));
            }
            rev.reverse();
            debug_assert_eq!(rev.len(), count);
            Ok(JostSolution {
                direction,
                lo: lo - 2,
                values: rev,
            })
        }
        Direction::Minus => {
            // e(lo-2), e(lo-1) seeded, then p_{n+1} e(n+1) = (z - q_n) e(n) - p_n e(n-1)
            let mut values = vec![
                CircleFunction::monomial(-(lo - 2) - 1, 1.0),
                CircleFunction::monomial(-(lo - 1) - 1, 1.0),
            ];
            for n in lo - 1..=hi + 1 {
                let (p_n, q_n) = j.coeffs(n)?;
                let p_next = j.p(n + 1)?;
                let cur = &values[values.len() - 1];
                let prev = &values[values.len() - 2];
                let rhs = &(&(&z * cur) - &cur.scale(q_n)) - &prev.scale(p_n);
                values.push(rhs.scale(1.0 / p_next));
            }
            debug_assert_eq!(values.len(), count);
            Ok(JostSolution {
                direction,
                lo: lo - 2,
                values,
            })
        }
    }
}

/// Numerators of the free-basis coefficients of a Jost solution on the far
/// side of the support: `e = (a_num tⁿ + b_num t^{-n-1}) / (1 - t²)` for the
/// plus solution and the mirror form for the minus one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JostCoefficients {
    pub direction: Direction,
    /// Index `n₀` of the first of the two solution values used.
    pub anchor: i64,
    pub a_num: CircleFunction,
    pub b_num: CircleFunction,
}

/// Solves the 2×2 system in the basis `{tⁿ, t^{-n-1}}` at two consecutive
/// indices beyond the support.
pub fn jost_coefficients(
    j: &JacobiMatrix,
    direction: Direction,
) -> Result<JostCoefficients, DirectError> {
    let sol = jost_propagate(j, direction)?;
    let (lo, hi) = sol.range();
    let get = |n: i64| sol.get(n).expect("index inside the propagated range");
    let (anchor, a_num, b_num) = match direction {
        Direction::Plus => {
            // e(n) = A tⁿ + B t^{-n-1} at n₀ and n₀ - 1
            let n0 = lo + 1;
            let (e0, e1) = (get(n0), get(n0 - 1));
            let a = &e1.shift(1 - n0) - &e0.shift(2 - n0);
            let b = &e0.shift(n0 + 1) - &e1.shift(n0 + 2);
            (n0, a, b)
        }
        Direction::Minus => {
            // e(m) = A' t^{-m-1} + B' t^m at m₀ and m₀ + 1
            let m0 = hi - 1;
            let (e0, e1) = (get(m0), get(m0 + 1));
            let a = &e1.shift(m0 + 2) - &e0.shift(m0 + 3);
            let b = &e0.shift(-m0) - &e1.shift(1 - m0);
            (m0, a, b)
        }
    };
    Ok(JostCoefficients {
        direction,
        anchor,
        a_num: a_num.trim(1e-300),
        b_num: b_num.trim(1e-300),
    })
}

/// Rational data behind an extracted scattering matrix:
/// `s = s_num/den`, `s₋ = s_minus_num/den`, `s₊ = s_plus_num/den`, after
/// cancelling factors `(1 ∓ t)` common to all four.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DirectProvenance {
    pub support: Option<(i64, i64)>,
    pub plus: JostCoefficients,
    pub minus: JostCoefficients,
    pub direction_defect: f64,
    pub den: CircleFunction,
    pub s_num: CircleFunction,
    pub s_minus_num: CircleFunction,
    pub s_plus_num: CircleFunction,
    /// Smallest modulus of a zero of `den`; `None` when `den` is constant.
    pub min_root_modulus: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DirectScattering {
    pub smatrix: ScatteringMatrix,
    pub provenance: DirectProvenance,
    pub validation: ValidationReport,
}

/// Scattering matrix of a finite perturbation of `J₀`.
pub fn extract_smatrix(j: &JacobiMatrix) -> Result<DirectScattering, DirectError> {
    extract_smatrix_with(j, &ValidationOptions::default())
}

pub fn extract_smatrix_with(
    j: &JacobiMatrix,
    opts: &ValidationOptions,
) -> Result<DirectScattering, DirectError> {
    let plus = jost_coefficients(j, Direction::Plus)?;
    let minus = jost_coefficients(j, Direction::Minus)?;
    let scale = plus.a_num.max_abs_coeff().max(1.0);
    let direction_defect = plus.a_num.max_abs_diff(&minus.a_num) / scale;
    if direction_defect > DIRECTION_TOL {
        return Err(DirectError::DirectionMismatch {
            defect: direction_defect,
        });
    }
    let one_minus_t2 = CircleFunction::polynomial(&[1.0, 0.0, -1.0])?;
    let (den, nums) = cancel_edge_factors(
        &plus.a_num,
        &[one_minus_t2, plus.b_num.clone(), minus.b_num.clone()],
        1e-12,
    );
    for edge in [1.0f64, -1.0] {
        let value: f64 = den.iter().map(|(m, c)| c * edge.powi(m as i32)).sum();
        if value.abs() <= 1e-12 * den.max_abs_coeff() {
            return Err(DirectError::EdgeResonance { edge });
        }
    }
    let min_root = min_root_modulus(&den);
    if let Some(modulus) = min_root {
        if modulus <= 1.0 + ROOT_MARGIN {
            return Err(DirectError::BoundState { modulus });
        }
    }
    let s = rational_series(&nums[0], &den, SERIES_TAIL_TOL)?;
    let s_minus = rational_series(&nums[1], &den, SERIES_TAIL_TOL)?;
    let s_plus = rational_series(&nums[2], &den, SERIES_TAIL_TOL)?;
    let smatrix = ScatteringMatrix::new(s, s_minus, s_plus);
    let validation = validate(&smatrix, opts);
    let [s_num, s_minus_num, s_plus_num]: [CircleFunction; 3] =
        nums.try_into().expect("three numerators");
    Ok(DirectScattering {
        smatrix,
        validation,
        provenance: DirectProvenance {
            support: j.support(),
            plus,
            minus,
            direction_defect,
            den,
            s_num,
            s_minus_num,
            s_plus_num,
            min_root_modulus: min_root,
        },
    })
}
