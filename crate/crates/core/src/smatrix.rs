//! Scattering matrices `S = (s, s₋, s₊)`: validation, the analytic family
//! built from an inner function, the closed form for the three-parameter
//! perturbation, and multiplication of the reflections by an inner function.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circle_fn::grid::{grid_size_for, GridSampling, DEFAULT_GRID};
use crate::circle_fn::inner_outer::{DEFAULT_INNER_TOL, DEFAULT_OUTER_TOL};
use crate::circle_fn::rational::{
    cancel_edge_factors, min_root_modulus, rational_series, SERIES_TAIL_TOL,
};
use crate::circle_fn::{inner_defect, outer_test, CircleError, CircleFunction, OuterTest, OuterVerdict};
use crate::direct::{extract_smatrix_with, DirectError, ROOT_MARGIN};
use crate::jacobi::{JacobiError, JacobiMatrix};

/// Allowed disagreement between the closed rank-3 form and the Jost run.
pub const ORACLE_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SmatrixError {
    #[error("function is not inner: max | |f| - 1 | = {defect:e}")]
    NotInner { defect: f64 },
    #[error("inner function must have no negative-index coefficients")]
    NotAnalytic,
    #[error("bound state present: norm of the 2×2 block is {norm} > 1")]
    BoundState { norm: f64 },
    #[error("p0 = {0} is not positive")]
    NonPositiveP(f64),
    #[error("transmission denominator has a zero of modulus {modulus} in the closed disk")]
    PoleInDisk { modulus: f64 },
    #[error("closed form and Jost oracle disagree by {defect:e}")]
    OracleMismatch { defect: f64 },
    #[error("scattering matrix fails validation: {}", .0.failures.join("; "))]
    Invalid(Box<ValidationReport>),
    #[error(transparent)]
    Circle(#[from] CircleError),
    #[error(transparent)]
    Direct(#[from] DirectError),
    #[error(transparent)]
    Jacobi(#[from] JacobiError),
}

/// `S = [[s₋, s], [s, s₊]]` with transmission `s` and reflections `s₋`
/// (left) and `s₊` (right).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScatteringMatrix {
    pub s: CircleFunction,
    pub s_minus: CircleFunction,
    pub s_plus: CircleFunction,
}

impl ScatteringMatrix {
    pub fn new(s: CircleFunction, s_minus: CircleFunction, s_plus: CircleFunction) -> Self {
        Self { s, s_minus, s_plus }
    }

    /// `(1, 0, 0)`, the scattering matrix of `J₀`.
    pub fn free() -> Self {
        Self::new(
            CircleFunction::one(),
            CircleFunction::zero(),
            CircleFunction::zero(),
        )
    }

    /// Widest coefficient window among the three entries.
    pub fn max_window(&self) -> usize {
        self.s.len().max(self.s_minus.len()).max(self.s_plus.len())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationOptions {
    pub tol_unitary: f64,
    pub tol_outer: f64,
    pub tol_inner: f64,
    pub grid: usize,
}

impl Default for ValidationOptions {
    fn default() -> Self {
        Self {
            tol_unitary: 1e-10,
            tol_outer: DEFAULT_OUTER_TOL,
            tol_inner: DEFAULT_INNER_TOL,
            grid: DEFAULT_GRID,
        }
    }
}

/// Grid maxima of the three unitarity relations.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct UnitarityDefects {
    /// `| |s|² + |s₊|² - 1 |`
    pub plus: f64,
    /// `| |s|² + |s₋|² - 1 |`
    pub minus: f64,
    /// `| s₋ s̄ + s s̄₊ |`
    pub cross: f64,
}

impl UnitarityDefects {
    pub fn max(&self) -> f64 {
        self.plus.max(self.minus).max(self.cross)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub grid: usize,
    pub unitarity: UnitarityDefects,
    pub max_unitarity_defect: f64,
    /// `max |f(t̄) - conj f(t)|` over the three entries.
    pub symmetry_defect: f64,
    pub outer: OuterTest,
    pub tol_unitary: f64,
    pub tol_outer: f64,
    pub passed: bool,
    pub failures: Vec<String>,
}

/// Checks unitarity and symmetry on a standard grid and outerness of `s`.
pub fn validate(sm: &ScatteringMatrix, opts: &ValidationOptions) -> ValidationReport {
    let size = grid_size_for(opts.grid, &[&sm.s, &sm.s_minus, &sm.s_plus]);
    let sample = |f: &CircleFunction| GridSampling::of(f, size).expect("grid sized for the window");
    let (s, sm_, sp) = (sample(&sm.s), sample(&sm.s_minus), sample(&sm.s_plus));

    let mut unitarity = UnitarityDefects::default();
    let mut symmetry: f64 = 0.0;
    for k in 0..size {
        let (a, b, c) = (s.values()[k], sm_.values()[k], sp.values()[k]);
        let a2 = a.norm_sqr();
        unitarity.plus = unitarity.plus.max((a2 + c.norm_sqr() - 1.0).abs());
        unitarity.minus = unitarity.minus.max((a2 + b.norm_sqr() - 1.0).abs());
        unitarity.cross = unitarity.cross.max((b * a.conj() + a * c.conj()).norm());
        let mirror = s.mirror_index(k);
        for g in [&s, &sm_, &sp] {
            let d: Complex64 = g.values()[mirror] - g.values()[k].conj();
            symmetry = symmetry.max(d.norm());
        }
    }

    let outer = if sm.s.is_analytic() {
        outer_test(&sm.s, opts.tol_outer, opts.grid).expect("analytic transmission")
    } else {
        OuterTest {
            verdict: OuterVerdict::NotOuter,
            defect: None,
            grid: size,
            excluded_points: 0,
        }
    };

    let max_unitarity_defect = unitarity.max();
    let mut failures = Vec::new();
    if !(max_unitarity_defect < opts.tol_unitary) {
        failures.push(format!(
            "unitarity defect {max_unitarity_defect:e} exceeds {:e}",
            opts.tol_unitary
        ));
    }
    if !(symmetry < opts.tol_unitary) {
        failures.push(format!("symmetry defect {symmetry:e}"));
    }
    match outer.verdict {
        OuterVerdict::Outer => {}
        OuterVerdict::NotOuter => failures.push(match outer.defect {
            Some(d) => format!("transmission is not outer (defect {d:e})"),
            None => "transmission has negative-index coefficients".to_string(),
        }),
        OuterVerdict::Inconclusive => {
            failures.push("transmission vanishes at the origin".to_string())
        }
    }
    ValidationReport {
        grid: size,
        unitarity,
        max_unitarity_defect,
        symmetry_defect: symmetry,
        outer,
        tol_unitary: opts.tol_unitary,
        tol_outer: opts.tol_outer,
        passed: failures.is_empty(),
        failures,
    }
}

fn require_valid(sm: ScatteringMatrix, opts: &ValidationOptions) -> Result<ScatteringMatrix, SmatrixError> {
    let report = validate(&sm, opts);
    if report.passed {
        Ok(sm)
    } else {
        Err(SmatrixError::Invalid(Box::new(report)))
    }
}

fn require_inner(f: &CircleFunction, opts: &ValidationOptions) -> Result<(), SmatrixError> {
    if !f.is_analytic() {
        return Err(SmatrixError::NotAnalytic);
    }
    let defect = inner_defect(f, opts.grid)?;
    if defect > opts.tol_inner {
        return Err(SmatrixError::NotInner { defect });
    }
    Ok(())
}

/// `s = (1 - Δ)/2`, `s₋ = s₊ = (1 + Δ)/2` for a symmetric inner `Δ`.
pub fn analytic_smatrix(
    delta: &CircleFunction,
    opts: &ValidationOptions,
) -> Result<ScatteringMatrix, SmatrixError> {
    require_inner(delta, opts)?;
    let one = CircleFunction::one();
    let s = (&one - delta).scale(0.5);
    let r = (&one + delta).scale(0.5);
    require_valid(ScatteringMatrix::new(s, r.clone(), r), opts)
}

/// Closed-form scattering data of the perturbation `p₀`, `q₀`, `q₋₁`.
///
/// With `φ = (1 - q₀t)(1 - q₋₁t) - p₀²t²` and
/// `ψ = (1 - q₀t)(q₋₁ - t) + p₀²t` the entries are `s = p₀(1 - t²)/φ`,
/// `s₋ = ψ/φ` and `s₊ = ψ*/φ` with `ψ*(t) = t²ψ(1/t)`, so that
/// `s₋(0) = q₋₁` and `s₊(0) = q₀`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Rank3Scattering {
    pub smatrix: ScatteringMatrix,
    pub phi: CircleFunction,
    pub psi: CircleFunction,
    pub psi_star: CircleFunction,
    /// `ψ` with `p₀²t²` in place of `p₀²t`. At the free point it equals
    /// `t² - t` instead of 0, so it cannot be a reflection numerator.
    pub variant_psi: CircleFunction,
    /// Operator norm of `[[q₋₁, p₀], [p₀, q₀]]`.
    pub block_norm: f64,
    /// Largest coefficient difference from the Jost-solution oracle.
    pub oracle_defect: f64,
    pub validation: ValidationReport,
}

pub fn rank3_block_norm(p0: f64, q0: f64, qm1: f64) -> f64 {
    let mean = 0.5 * (q0 + qm1);
    let radius = (0.25 * (q0 - qm1).powi(2) + p0 * p0).sqrt();
    (mean + radius).abs().max((mean - radius).abs())
}

pub fn rank3_smatrix(p0: f64, q0: f64, qm1: f64) -> Result<Rank3Scattering, SmatrixError> {
    rank3_smatrix_with(p0, q0, qm1, &ValidationOptions::default())
}

pub fn rank3_smatrix_with(
    p0: f64,
    q0: f64,
    qm1: f64,
    opts: &ValidationOptions,
) -> Result<Rank3Scattering, SmatrixError> {
    if !(p0 > 0.0) {
        return Err(SmatrixError::NonPositiveP(p0));
    }
    let block_norm = rank3_block_norm(p0, q0, qm1);
    if block_norm > 1.0 + 1e-12 {
        return Err(SmatrixError::BoundState { norm: block_norm });
    }
    let poly = |c: &[f64]| CircleFunction::polynomial(c).expect("finite coefficients");
    let a = poly(&[1.0, -q0]);
    let phi = &(&a * &poly(&[1.0, -qm1])) - &poly(&[0.0, 0.0, p0 * p0]);
    let psi = &(&a * &poly(&[qm1, -1.0])) + &poly(&[0.0, p0 * p0]);
    let psi_star = psi.involute().shift(2);
    let variant_psi = &(&a * &poly(&[qm1, -1.0])) + &poly(&[0.0, 0.0, p0 * p0]);

    let s_num = poly(&[p0, 0.0, -p0]);
    let (den, nums) = cancel_edge_factors(&phi, &[s_num, psi.clone(), psi_star.clone()], 1e-12);
    if let Some(modulus) = min_root_modulus(&den) {
        if modulus <= 1.0 + ROOT_MARGIN {
            return Err(SmatrixError::PoleInDisk { modulus });
        }
    }
    let series = |num: &CircleFunction| rational_series(num, &den, SERIES_TAIL_TOL);
    let smatrix = ScatteringMatrix::new(series(&nums[0])?, series(&nums[1])?, series(&nums[2])?);

    let oracle = extract_smatrix_with(&JacobiMatrix::rank3(p0, q0, qm1)?, opts)?;
    let oracle_defect = smatrix
        .s
        .max_abs_diff(&oracle.smatrix.s)
        .max(smatrix.s_minus.max_abs_diff(&oracle.smatrix.s_minus))
        .max(smatrix.s_plus.max_abs_diff(&oracle.smatrix.s_plus));
    if oracle_defect > ORACLE_TOL {
        return Err(SmatrixError::OracleMismatch {
            defect: oracle_defect,
        });
    }
    let validation = validate(&smatrix, opts);
    if !validation.passed {
        return Err(SmatrixError::Invalid(Box::new(validation)));
    }
    Ok(Rank3Scattering {
        smatrix,
        phi,
        psi,
        psi_star,
        variant_psi,
        block_norm,
        oracle_defect,
        validation,
    })
}

/// `(s, s₋Φ, s₊Φ̄)` for a symmetric inner `Φ`; on the circle `Φ̄(t) = Φ(t̄)`,
/// the coefficient reversal of `Φ`.
pub fn repair(
    sm: &ScatteringMatrix,
    phi: &CircleFunction,
    opts: &ValidationOptions,
) -> Result<ScatteringMatrix, SmatrixError> {
    require_inner(phi, opts)?;
    let repaired = ScatteringMatrix::new(
        sm.s.clone(),
        &sm.s_minus * phi,
        &sm.s_plus * &phi.involute(),
    );
    require_valid(repaired, opts)
}
