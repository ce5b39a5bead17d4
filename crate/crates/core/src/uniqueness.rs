//! Does a scattering matrix determine its Jacobi matrix?
//!
//! Four independent diagnostics are computed and combined:
//!
//! * the kernel criterion `v± = s(0) K_{s±}(0) K_{s∓t⁻²}(0)`, equal to 1 in
//!   the unique case;
//! * the distance between the two reconstructions `J[s₊]` and `J[s₋]`;
//! * the density residuals: how well two specific elements of the
//!   `s₊`-weighted space are approximated by polynomials;
//! * when `s₋` is analytic with `s₋(0) = 0`, the closed-form kernel identity
//!   `K_{s₊}(ζ) = (1 + s₋(ζ)/ζ) / (s(ζ) √(1+a))` and the least-squares
//!   approximation residual.
//!
//! The overall verdict comes from the criterion and the distance; the other
//! diagnostics must not contradict it.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circle_fn::grid::{grid_size_for, GridSampling, DEFAULT_GRID};
use crate::circle_fn::{CircleError, CircleFunction, RieszSign};
use crate::hankel::{kernel_of_symbol, HankelError, KernelOptions};
use crate::inverse::{
    reconstruct_dual, reconstruct_jacobi, InverseError, ReconstructionOptions, ReconstructionResult,
};
use crate::jacobi::{difference_table, distance, JacobiError};
use crate::smatrix::ScatteringMatrix;

/// Values below this count as zero for `s(0)` and `s₋(0)`.
pub const ORIGIN_ZERO_TOL: f64 = 1e-14;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum UniquenessError {
    #[error("transmission coefficient vanishes at the origin (s(0) = {0:e})")]
    TransmissionVanishes(f64),
    #[error("transmission coefficient has negative-index coefficients")]
    TransmissionNotAnalytic,
    #[error("left reflection must be analytic with s₋(0) = 0")]
    LeftReflectionNotVanishing,
    #[error("first Taylor coefficient a = {0} of s₋ gives 1 + a ≤ 0")]
    NonPositiveShift(f64),
    #[error(transparent)]
    Hankel(#[from] HankelError),
    #[error(transparent)]
    Inverse(#[from] InverseError),
    #[error(transparent)]
    Jacobi(#[from] JacobiError),
    #[error(transparent)]
    Circle(#[from] CircleError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Unique,
    NonUnique,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniquenessOptions {
    pub reconstruction: ReconstructionOptions,
    pub tol_crit: f64,
    pub tol_match: f64,
    /// Density residuals below this support uniqueness.
    pub tol_density: f64,
    /// Kernel-identity defect below this supports uniqueness.
    pub tol_identity: f64,
    /// Approximation residual below this supports uniqueness.
    pub tol_residual: f64,
    /// Density and identity values above this contradict uniqueness.
    pub tol_separation: f64,
    pub degree_schedule: Vec<usize>,
    pub grid: usize,
}

impl Default for UniquenessOptions {
    fn default() -> Self {
        Self {
            reconstruction: ReconstructionOptions::default(),
            tol_crit: 1e-4,
            tol_match: 1e-4,
            tol_density: 1e-6,
            tol_identity: 1e-6,
            tol_residual: 1e-6,
            tol_separation: 1e-3,
            degree_schedule: vec![0, 1, 2, 4, 8, 16, 32],
            grid: DEFAULT_GRID,
        }
    }
}

fn transmission_at_origin(sm: &ScatteringMatrix) -> Result<f64, UniquenessError> {
    if !sm.s.is_analytic() {
        return Err(UniquenessError::TransmissionNotAnalytic);
    }
    let s0 = sm.s.coeff(0);
    if s0.abs() < ORIGIN_ZERO_TOL {
        return Err(UniquenessError::TransmissionVanishes(s0));
    }
    Ok(s0)
}

fn require_left_vanishing(sm: &ScatteringMatrix) -> Result<(), UniquenessError> {
    if !sm.s_minus.is_analytic() || sm.s_minus.coeff(0).abs() >= ORIGIN_ZERO_TOL {
        return Err(UniquenessError::LeftReflectionNotVanishing);
    }
    Ok(())
}

/// The two criterion products and their factors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriterionValues {
    pub s0: f64,
    /// `K_{s₊}(0)`
    pub k_plus: f64,
    /// `K_{s₋t⁻²}(0)`
    pub k_minus_shifted: f64,
    /// `K_{s₋}(0)`
    pub k_minus: f64,
    /// `K_{s₊t⁻²}(0)`
    pub k_plus_shifted: f64,
    pub v_plus: f64,
    pub v_minus: f64,
}

impl CriterionValues {
    pub fn max_deviation(&self) -> f64 {
        (self.v_plus - 1.0).abs().max((self.v_minus - 1.0).abs())
    }
}

/// `v₊ = s(0) K_{s₊}(0) K_{s₋t⁻²}(0)` and `v₋ = s(0) K_{s₋}(0) K_{s₊t⁻²}(0)`.
pub fn uniqueness_criterion(
    sm: &ScatteringMatrix,
    order: usize,
    opts: &KernelOptions,
) -> Result<CriterionValues, UniquenessError> {
    let s0 = transmission_at_origin(sm)?;
    let at_origin = |sym: &CircleFunction| -> Result<f64, UniquenessError> {
        Ok(kernel_of_symbol(sym, order, opts)?.normalized_at_origin())
    };
    let k_plus = at_origin(&sm.s_plus)?;
    let k_minus_shifted = at_origin(&sm.s_minus.shift(-2))?;
    let k_minus = at_origin(&sm.s_minus)?;
    let k_plus_shifted = at_origin(&sm.s_plus.shift(-2))?;
    Ok(CriterionValues {
        s0,
        k_plus,
        k_minus_shifted,
        k_minus,
        k_plus_shifted,
        v_plus: s0 * k_plus * k_minus_shifted,
        v_minus: s0 * k_minus * k_plus_shifted,
    })
}

/// Sample radii and the number of angles per radius for the kernel identity.
pub const IDENTITY_RADII: [f64; 4] = [0.0, 0.3, 0.6, 0.9];
pub const IDENTITY_ANGLES: usize = 16;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelIdentityCheck {
    /// First Taylor coefficient of `s₋`.
    pub a: f64,
    /// `max |K_{s₊}(ζ) - (1 + s₋(ζ)/ζ) / (s(ζ) √(1+a))|` over the samples.
    pub defect: f64,
    pub points: usize,
}

/// Compares the computed `K_{s₊}` with its closed form when `s₋` is
/// analytic and vanishes at the origin.
pub fn kernel_identity_check(
    sm: &ScatteringMatrix,
    order: usize,
    opts: &KernelOptions,
) -> Result<KernelIdentityCheck, UniquenessError> {
    require_left_vanishing(sm)?;
    transmission_at_origin(sm)?;
    let a = sm.s_minus.coeff(1);
    if !(1.0 + a > 0.0) {
        return Err(UniquenessError::NonPositiveShift(a));
    }
    let kernel = kernel_of_symbol(&sm.s_plus, order, opts)?.normalized;
    let quotient = sm.s_minus.shift(-1);
    let scale = (1.0 + a).sqrt();
    let mut defect: f64 = 0.0;
    let mut points = 0;
    for &r in &IDENTITY_RADII {
        for j in 0..IDENTITY_ANGLES {
            let zeta = Complex64::from_polar(r, 2.0 * PI * j as f64 / IDENTITY_ANGLES as f64);
            let lhs = kernel.eval(zeta)?;
            let rhs = (Complex64::new(1.0, 0.0) + quotient.eval(zeta)?) / (sm.s.eval(zeta)? * scale);
            defect = defect.max((lhs - rhs).norm());
            points += 1;
        }
    }
    Ok(KernelIdentityCheck { a, defect, points })
}

/// Least-squares solution of `A c ≈ b` and the residual norm.
fn least_squares_residual(columns: &[CircleFunction], target: &CircleFunction, lo: i64, hi: i64) -> f64 {
    let rows = (hi - lo + 1) as usize;
    if columns.is_empty() {
        return target.l2_norm();
    }
    let a = DMatrix::from_fn(rows, columns.len(), |i, j| columns[j].coeff(lo + i as i64));
    let b = DVector::from_fn(rows, |i, _| target.coeff(lo + i as i64));
    let svd = a.clone().svd(true, true);
    let c = svd.solve(&b, 1e-13).expect("both factors computed");
    (&a * c - b).norm()
}

fn window_of(fs: &[&CircleFunction]) -> (i64, i64) {
    let mut lo = i64::MAX;
    let mut hi = i64::MIN;
    for f in fs {
        if let Some((a, b)) = f.window() {
            lo = lo.min(a);
            hi = hi.max(b);
        }
    }
    if lo > hi {
        (0, 0)
    } else {
        (lo, hi)
    }
}

/// Stacks two coefficient blocks into one function: indices of the second
/// block are moved past the window of the first.
fn stack(first: &CircleFunction, second: &CircleFunction, offset: i64) -> CircleFunction {
    first + &second.shift(offset)
}

/// For each degree `d`, `min_u ‖t̄ s₋ - s u‖² + ‖(s - s(0))/t - P₊(s₊ u)‖²`
/// over polynomials `u` of degree at most `d`, returned as square roots.
///
/// Small values are evidence for uniqueness; large values are not evidence
/// against it. For analytic `s₊` the target is orthogonal to every
/// approximant, and the residual equals `√(1 - s(0)²)` at every degree.
pub fn approximation_residual(
    sm: &ScatteringMatrix,
    degrees: &[usize],
) -> Result<Vec<f64>, UniquenessError> {
    require_left_vanishing(sm)?;
    let s0 = transmission_at_origin(sm)?;
    let target1 = sm.s_minus.shift(-1);
    let target2 = (&sm.s - &CircleFunction::constant(s0)).shift(-1);
    let max_degree = degrees.iter().copied().max().unwrap_or(0) as i64;
    let widest1 = sm.s.shift(max_degree);
    let widest2 = sm.s_plus.shift(max_degree).riesz(RieszSign::Plus);
    let (lo1, hi1) = window_of(&[&target1, &sm.s, &widest1]);
    let (lo2, hi2) = window_of(&[&target2, &sm.s_plus.riesz(RieszSign::Plus), &widest2]);
    let offset = hi1 - lo2 + 1;
    let target = stack(&target1, &target2, offset);
    let (lo, hi) = (lo1, hi2 + offset);

    Ok(degrees
        .iter()
        .map(|&d| {
            let columns: Vec<CircleFunction> = (0..=d as i64)
                .map(|j| {
                    let c1 = sm.s.shift(j);
                    let c2 = sm.s_plus.shift(j).riesz(RieszSign::Plus);
                    stack(&c1, &c2, offset)
                })
                .collect();
            least_squares_residual(&columns, &target, lo, hi)
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityDiagnostic {
    pub degrees: Vec<usize>,
    /// `[r0, r1]` for each degree.
    pub residuals: Vec<[f64; 2]>,
    /// Residuals at the largest degree.
    pub final_residuals: [f64; 2],
    /// `min |s|` on the validation grid; zeros of `s` on the circle make the
    /// two target functions unbounded there.
    pub min_abs_transmission: f64,
}

impl DensityDiagnostic {
    pub fn max_final(&self) -> f64 {
        self.final_residuals[0].max(self.final_residuals[1])
    }
}

/// Distance in the `s₊`-weighted norm from the two functions `ẽ(0)`, `ẽ(1)`
/// built from the dual basis to polynomials of degree at most `d`.
///
/// With `ψ = tⁿ K_{s₋t^{2n}}` (`n = -1, -2`) the target is
/// `s ẽ = t̄ ψ(t̄) + s₋ ψ`. Everything is multiplied through by `s`, so the
/// residual is computed from coefficients without dividing by `s`:
/// `r² = ½ (‖s ẽ - Σ cⱼ s tʲ‖² + ‖s ψ - Σ cⱼ (t^{-j-1} + s₊ tʲ)‖²)`.
pub fn density_diagnostic(
    sm: &ScatteringMatrix,
    degrees: &[usize],
    order: usize,
    opts: &KernelOptions,
    grid: usize,
) -> Result<DensityDiagnostic, UniquenessError> {
    let mut targets = Vec::new();
    for i in 0..2i64 {
        let n = -i - 1;
        let psi = kernel_of_symbol(&sm.s_minus.shift(2 * n), order, opts)?
            .normalized
            .shift(n);
        let first = &psi.involute().shift(-1) + &(&sm.s_minus * &psi);
        let second = &sm.s * &psi;
        targets.push((first, second));
    }
    let max_degree = degrees.iter().copied().max().unwrap_or(0) as i64;
    let column = |j: i64| {
        (
            sm.s.shift(j),
            &CircleFunction::monomial(-j - 1, 1.0) + &sm.s_plus.shift(j),
        )
    };
    let (w1, w2) = column(max_degree);
    let (c1, c2) = column(0);
    let mut firsts: Vec<&CircleFunction> = vec![&w1, &c1];
    let mut seconds: Vec<&CircleFunction> = vec![&w2, &c2];
    for (a, b) in &targets {
        firsts.push(a);
        seconds.push(b);
    }
    let (lo1, hi1) = window_of(&firsts);
    let (lo2, hi2) = window_of(&seconds);
    let offset = hi1 - lo2 + 1;
    let (lo, hi) = (lo1, hi2 + offset);

    let residuals: Vec<[f64; 2]> = degrees
        .iter()
        .map(|&d| {
            let columns: Vec<CircleFunction> = (0..=d as i64)
                .map(|j| {
                    let (a, b) = column(j);
                    stack(&a, &b, offset)
                })
                .collect();
            let mut out = [0.0; 2];
            for (slot, (a, b)) in out.iter_mut().zip(&targets) {
                let r = least_squares_residual(&columns, &stack(a, b, offset), lo, hi);
                *slot = r / 2f64.sqrt();
            }
            out
        })
        .collect();

    let size = grid_size_for(grid, &[&sm.s]);
    let samples = GridSampling::of(&sm.s, size)?;
    let min_abs_transmission = samples
        .values()
        .iter()
        .fold(f64::INFINITY, |acc, v| acc.min(v.norm()));
    Ok(DensityDiagnostic {
        degrees: degrees.to_vec(),
        final_residuals: *residuals.last().unwrap_or(&[f64::NAN; 2]),
        residuals,
        min_abs_transmission,
    })
}

/// Outcome of one diagnostic inside a [`UniquenessReport`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticVerdict {
    pub verdict: Verdict,
    /// False when the diagnostic does not apply to this input.
    pub applicable: bool,
    pub note: String,
}

impl DiagnosticVerdict {
    fn new(verdict: Verdict, note: impl Into<String>) -> Self {
        Self {
            verdict,
            applicable: true,
            note: note.into(),
        }
    }

    fn not_applicable(note: impl Into<String>) -> Self {
        Self {
            verdict: Verdict::Inconclusive,
            applicable: false,
            note: note.into(),
        }
    }

    fn failed(err: impl std::fmt::Display) -> Self {
        Self::new(Verdict::Inconclusive, format!("failed: {err}"))
    }

    pub fn is_definite(&self) -> bool {
        self.applicable && self.verdict != Verdict::Inconclusive
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct UniquenessReport {
    pub criterion: Option<CriterionValues>,
    pub criterion_verdict: DiagnosticVerdict,
    pub reconstruction_distance: Option<f64>,
    /// `(n, p_n - p̃_n, q_n - q̃_n)` between `J[s₊]` and `J[s₋]`.
    pub distance_profile: Vec<(i64, f64, f64)>,
    pub distance_verdict: DiagnosticVerdict,
    pub density: Option<DensityDiagnostic>,
    pub density_verdict: DiagnosticVerdict,
    pub kernel_identity: Option<KernelIdentityCheck>,
    pub kernel_identity_verdict: DiagnosticVerdict,
    pub approximation_residuals: Option<Vec<f64>>,
    pub approximation_verdict: DiagnosticVerdict,
    pub verdict: Verdict,
    /// No two applicable diagnostics reach opposite definite verdicts.
    pub coherent: bool,
    pub rationale: String,
    pub plus: Option<ReconstructionResult>,
    pub minus: Option<ReconstructionResult>,
}

impl UniquenessReport {
    pub fn diagnostics(&self) -> [(&'static str, &DiagnosticVerdict); 5] {
        [
            ("criterion", &self.criterion_verdict),
            ("distance", &self.distance_verdict),
            ("density", &self.density_verdict),
            ("kernel_identity", &self.kernel_identity_verdict),
            ("approximation", &self.approximation_verdict),
        ]
    }
}

fn criterion_verdict(c: &CriterionValues, tol: f64) -> DiagnosticVerdict {
    let dev = c.max_deviation();
    let note = format!("v+ = {:.8}, v- = {:.8}", c.v_plus, c.v_minus);
    if dev < tol {
        DiagnosticVerdict::new(Verdict::Unique, note)
    } else if dev >= 10.0 * tol {
        DiagnosticVerdict::new(Verdict::NonUnique, note)
    } else {
        DiagnosticVerdict::new(Verdict::Inconclusive, note)
    }
}

fn threshold_verdict(value: f64, low: f64, high: f64, what: &str) -> DiagnosticVerdict {
    let note = format!("{what} = {value:.3e}");
    if value < low {
        DiagnosticVerdict::new(Verdict::Unique, note)
    } else if value >= high {
        DiagnosticVerdict::new(Verdict::NonUnique, note)
    } else {
        DiagnosticVerdict::new(Verdict::Inconclusive, note)
    }
}

/// Runs both reconstructions and every diagnostic.
pub fn compare_reconstructions(sm: &ScatteringMatrix, opts: &UniquenessOptions) -> UniquenessReport {
    let rec = &opts.reconstruction;
    let m = rec.m as i64;
    let kernel = &rec.kernel;

    let criterion = uniqueness_criterion(sm, rec.n, kernel);
    let criterion_v = match &criterion {
        Ok(c) => criterion_verdict(c, opts.tol_crit),
        Err(e) => DiagnosticVerdict::failed(e),
    };

    let (plus, minus) = rayon::join(
        || reconstruct_jacobi(&sm.s_plus, rec),
        || reconstruct_dual(&sm.s_minus, rec),
    );
    let (distance_value, profile, distance_v) = match (&plus, &minus) {
        (Ok(a), Ok(b)) => {
            let d = distance(&a.jacobi, &b.jacobi, -m, m);
            let table = difference_table(&a.jacobi, &b.jacobi, -m, m).unwrap_or_default();
            match d {
                Ok(d) => (
                    Some(d),
                    table,
                    threshold_verdict(d, opts.tol_match, 10.0 * opts.tol_match, "distance"),
                ),
                Err(e) => (None, table, DiagnosticVerdict::failed(e)),
            }
        }
        (Err(e), _) | (_, Err(e)) => (None, Vec::new(), DiagnosticVerdict::failed(e)),
    };

    let density = density_diagnostic(sm, &opts.degree_schedule, rec.n, kernel, opts.grid);
    let density_v = match &density {
        Ok(d) => threshold_verdict(d.max_final(), opts.tol_density, opts.tol_separation, "max residual"),
        Err(e) => DiagnosticVerdict::failed(e),
    };

    let left_vanishes = sm.s_minus.is_analytic() && sm.s_minus.coeff(0).abs() < ORIGIN_ZERO_TOL;
    let (identity, identity_v) = if left_vanishes {
        match kernel_identity_check(sm, rec.n, kernel) {
            Ok(c) => {
                let v = threshold_verdict(c.defect, opts.tol_identity, opts.tol_separation, "defect");
                (Some(c), v)
            }
            Err(e) => (None, DiagnosticVerdict::failed(e)),
        }
    } else {
        (None, DiagnosticVerdict::not_applicable("s₋ is not analytic with s₋(0) = 0"))
    };
    let (approx, approx_v) = if left_vanishes {
        match approximation_residual(sm, &opts.degree_schedule) {
            Ok(r) => {
                let last = *r.last().unwrap_or(&f64::NAN);
                // one-directional: a large residual is not evidence of non-uniqueness
                let v = if last < opts.tol_residual {
                    DiagnosticVerdict::new(Verdict::Unique, format!("residual = {last:.3e}"))
                } else {
                    DiagnosticVerdict::new(
                        Verdict::Inconclusive,
                        format!("residual = {last:.3e}, no conclusion"),
                    )
                };
                (Some(r), v)
            }
            Err(e) => (None, DiagnosticVerdict::failed(e)),
        }
    } else {
        (None, DiagnosticVerdict::not_applicable("s₋ is not analytic with s₋(0) = 0"))
    };

    let verdict = match (criterion_v.verdict, distance_v.verdict) {
        (Verdict::Unique, Verdict::Unique) => Verdict::Unique,
        (Verdict::NonUnique, Verdict::NonUnique) => Verdict::NonUnique,
        _ => Verdict::Inconclusive,
    };

    let mut report = UniquenessReport {
        criterion: criterion.ok(),
        criterion_verdict: criterion_v,
        reconstruction_distance: distance_value,
        distance_profile: profile,
        distance_verdict: distance_v,
        density: density.ok(),
        density_verdict: density_v,
        kernel_identity: identity,
        kernel_identity_verdict: identity_v,
        approximation_residuals: approx,
        approximation_verdict: approx_v,
        verdict,
        coherent: true,
        rationale: String::new(),
        plus: plus.ok(),
        minus: minus.ok(),
    };
    let definite: Vec<(&str, Verdict)> = report
        .diagnostics()
        .iter()
        .filter(|(_, d)| d.is_definite())
        .map(|(name, d)| (*name, d.verdict))
        .collect();
    report.coherent = !(definite.iter().any(|(_, v)| *v == Verdict::Unique)
        && definite.iter().any(|(_, v)| *v == Verdict::NonUnique));
    let parts: Vec<String> = report
        .diagnostics()
        .iter()
        .map(|(name, d)| {
            let status = if !d.applicable {
                "n/a".to_string()
            } else {
                format!("{:?}", d.verdict).to_lowercase()
            };
            format!("{name}: {status} ({})", d.note)
        })
        .collect();
    report.rationale = format!(
        "verdict {:?} from criterion and distance; {}{}",
        report.verdict,
        parts.join("; "),
        if report.coherent { "" } else { "; DIAGNOSTICS DISAGREE" }
    );
    report
}
