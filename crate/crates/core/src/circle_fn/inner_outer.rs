//! Symmetric inner functions (monomials times Blaschke products with real
//! zeros) and the log-modulus test for outer functions.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::grid::{grid_size_for, GridSampling, DEFAULT_GRID};
use super::{CircleError, CircleFunction};

/// Default tolerance on `max | |Φ(t)| - 1 |` for truncated inner functions.
pub const DEFAULT_INNER_TOL: f64 = 1e-10;

/// Default threshold on the outer defect. The midpoint quadrature of
/// `log|f|` with simple zeros at `t = ±1` carries an error of about
/// `2 ln 2 / grid`, i.e. `3.4e-4` on the default grid.
pub const DEFAULT_OUTER_TOL: f64 = 1e-3;

/// Points where `|f|` falls below this are left out of the log quadrature.
pub const LOG_EXCLUSION: f64 = 1e-13;

#[derive(Clone, Debug, PartialEq)]
pub struct InnerOptions {
    pub tol_inner: f64,
    pub tail_tol: f64,
    pub max_window: usize,
    pub grid: usize,
}

impl Default for InnerOptions {
    fn default() -> Self {
        Self {
            tol_inner: DEFAULT_INNER_TOL,
            tail_tol: 1e-14,
            max_window: 1 << 16,
            grid: DEFAULT_GRID,
        }
    }
}

/// Parameters of `t^degree · Π (t - a)/(1 - a t)` with real `a ∈ (-1, 1)`.
#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct InnerSpec {
    pub degree: u32,
    #[serde(default)]
    pub zeros: Vec<f64>,
}

impl InnerSpec {
    pub fn monomial(degree: u32) -> Self {
        Self {
            degree,
            zeros: Vec::new(),
        }
    }

    pub fn build(&self, opts: &InnerOptions) -> Result<CircleFunction, CircleError> {
        inner_symmetric_factory(self.degree, &self.zeros, opts)
    }
}

impl fmt::Display for InnerSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        match self.degree {
            0 if self.zeros.is_empty() => parts.push("1".to_string()),
            0 => {}
            1 => parts.push("t".to_string()),
            k => parts.push(format!("t^{k}")),
        }
        parts.extend(self.zeros.iter().map(|a| format!("B({a})")));
        write!(f, "{}", parts.join("·"))
    }
}

/// Expansion of the Blaschke factor `(t - a)/(1 - a t)`:
/// `-a + (1 - a²) Σ_{m≥1} a^{m-1} t^m`, cut when the tail drops below `tail_tol`.
fn blaschke_factor(a: f64, opts: &InnerOptions) -> CircleFunction {
    if a == 0.0 {
        return CircleFunction::monomial(1, 1.0);
    }
    let tail_factor = 1.0 / (1.0 - a.abs());
    let mut coeffs = vec![-a];
    let mut term = 1.0 - a * a;
    while coeffs.len() < opts.max_window {
        coeffs.push(term);
        term *= a;
        if term.abs() * tail_factor < opts.tail_tol {
            break;
        }
    }
    CircleFunction::from_coeffs(0, coeffs).expect("finite Blaschke coefficients")
}

/// Largest deviation of `|f|` from 1 on a grid of at least `grid` points.
pub fn inner_defect(f: &CircleFunction, grid: usize) -> Result<f64, CircleError> {
    let size = grid_size_for(grid, &[f]);
    let samples = GridSampling::of(f, size)?;
    Ok(samples
        .values()
        .iter()
        .fold(0.0, |acc, v| acc.max((v.norm() - 1.0).abs())))
}

/// Truncated Laurent expansion of `t^degree · Π (t - a)/(1 - a t)`.
///
/// Real zeros give real coefficients, which is the symmetry
/// `Φ(t̄) = conj(Φ(t))`. The result is checked for unit modulus on a grid.
pub fn inner_symmetric_factory(
    degree: u32,
    zeros: &[f64],
    opts: &InnerOptions,
) -> Result<CircleFunction, CircleError> {
    if let Some(&zero) = zeros.iter().find(|a| !(a.abs() < 1.0)) {
        return Err(CircleError::ZeroOutsideDisk { zero });
    }
    let mut phi = CircleFunction::monomial(degree as i64, 1.0);
    for &a in zeros {
        phi = &phi * &blaschke_factor(a, opts);
        if phi.len() > opts.max_window {
            phi = phi.restrict(phi.lo(), phi.lo() + opts.max_window as i64 - 1);
        }
    }
    let phi = phi.trim(1e-18);
    let achieved = inner_defect(&phi, opts.grid)?;
    if achieved > opts.tol_inner {
        return Err(CircleError::TruncationTooShort {
            achieved,
            window: phi.len(),
            tolerance: opts.tol_inner,
        });
    }
    Ok(phi)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OuterVerdict {
    Outer,
    NotOuter,
    /// `f(0) = 0`: the log test is undefined.
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OuterTest {
    pub verdict: OuterVerdict,
    /// `| log|f(0)| - mean log|f| |`, absent when `f(0) = 0`.
    pub defect: Option<f64>,
    pub grid: usize,
    pub excluded_points: usize,
}

impl OuterTest {
    pub fn is_outer(&self) -> bool {
        self.verdict == OuterVerdict::Outer
    }
}

/// Compares `log|f(0)|` with the mean of `log|f|` over a half-shifted grid.
/// Grid points where `|f| < 1e-13` are excluded and counted.
pub fn outer_test(f: &CircleFunction, tol: f64, grid: usize) -> Result<OuterTest, CircleError> {
    let f0 = f.value_at_origin()?;
    let size = grid_size_for(grid, &[f]);
    if f0 == 0.0 || f0.abs() < 1e-14 * f.max_abs_coeff() {
        return Ok(OuterTest {
            verdict: OuterVerdict::Inconclusive,
            defect: None,
            grid: size,
            excluded_points: 0,
        });
    }
    let samples = GridSampling::of_shifted(f, size)?;
    let mut sum = 0.0;
    let mut used = 0usize;
    for v in samples.values() {
        let r = v.norm();
        if r >= LOG_EXCLUSION {
            sum += r.ln();
            used += 1;
        }
    }
    let excluded_points = size - used;
    let mean = if used > 0 { sum / used as f64 } else { f64::NEG_INFINITY };
    let defect = (f0.abs().ln() - mean).abs();
    Ok(OuterTest {
        verdict: if defect < tol {
            OuterVerdict::Outer
        } else {
            OuterVerdict::NotOuter
        },
        defect: Some(defect),
        grid: size,
        excluded_points,
    })
}
