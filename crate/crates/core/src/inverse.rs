//! Reconstruction of a Jacobi matrix from one reflection coefficient.
//!
//! For a reflection coefficient `σ` the functions `φₙ = tⁿ K_{σ t^{2n}}`
//! are orthonormal in the `σ`-weighted pairing, and multiplication by
//! `z = t + t⁻¹` is tridiagonal in that basis:
//! `qₙ = ⟨z φₙ, φₙ⟩_σ`, `pₙ₊₁ = ⟨z φₙ, φₙ₊₁⟩_σ`.
//!
//! Run on `s₊` this gives `J[s₊]` directly. Run on `s₋` it gives the
//! matrix seen from the other end of the axis; the dual result is mapped
//! back with the reflection `p̃ₙ = p'₋ₙ`, `q̃ₙ = q'₋ₙ₋₁` (see
//! [`JacobiMatrix::reflect`]), which puts both reconstructions of a
//! finite perturbation on top of the original matrix.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circle_fn::CircleFunction;
use crate::hankel::{
    kernel_of_symbol, weighted_apply, HankelError, KernelOptions, ReproducingKernel, SolveMethod,
};
use crate::jacobi::{JacobiError, JacobiMatrix};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InverseError {
    #[error("kernel at n = {n}: {source}")]
    Kernel { n: i64, source: HankelError },
    #[error("reconstructed p_{n} = {p} is not positive")]
    NonPositiveP { n: i64, p: f64 },
    #[error(transparent)]
    Jacobi(#[from] JacobiError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionOptions {
    /// Coefficients are reconstructed on `[-m, m]`.
    pub m: usize,
    /// Requested Hankel truncation order.
    pub n: usize,
    /// Extra rows added on top of the deepest shifted symbol.
    pub margin: usize,
    pub kernel: KernelOptions,
}

impl Default for ReconstructionOptions {
    fn default() -> Self {
        Self {
            m: 24,
            n: 256,
            margin: 16,
            kernel: KernelOptions::default(),
        }
    }
}

/// Hankel order used for basis indices in `[lo, hi]`: at least `n`, and
/// enough to hold the negative reach of every shifted symbol `σ t^{2k}`.
pub fn effective_order(symbol: &CircleFunction, lo: i64, hi: i64, n: usize, margin: usize) -> usize {
    let reach = 2 * lo.unsigned_abs().max(hi.unsigned_abs()) as usize;
    n.max(symbol.negative_depth() + reach + margin)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BasisElement {
    pub phi: Option<CircleFunction>,
    pub k0: Option<f64>,
    pub method: Option<SolveMethod>,
    pub error: Option<String>,
}

/// `φₙ` for `n` in a range, with per-index solve status.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Basis {
    pub order: usize,
    pub elements: BTreeMap<i64, BasisElement>,
}

impl Basis {
    pub fn get(&self, n: i64) -> Option<&CircleFunction> {
        self.elements.get(&n).and_then(|e| e.phi.as_ref())
    }

    /// One line per index whose kernel failed or needed regularization.
    pub fn flags(&self) -> Vec<String> {
        self.elements
            .iter()
            .filter_map(|(n, e)| match (&e.error, e.method) {
                (Some(err), _) => Some(format!("n={n}: {err}")),
                (None, Some(SolveMethod::Regularized)) => Some(format!("n={n}: regularized kernel")),
                _ => None,
            })
            .collect()
    }
}

type KernelResults = BTreeMap<i64, Result<ReproducingKernel, HankelError>>;

fn solve_kernels(
    symbol: &CircleFunction,
    lo: i64,
    hi: i64,
    opts: &ReconstructionOptions,
) -> (usize, KernelResults) {
    let order = effective_order(symbol, lo, hi, opts.n, opts.margin);
    let kernels = (lo..=hi)
        .into_par_iter()
        .map(|n| (n, kernel_of_symbol(&symbol.shift(2 * n), order, &opts.kernel)))
        .collect();
    (order, kernels)
}

fn basis_from(order: usize, kernels: &KernelResults) -> Basis {
    let elements = kernels
        .iter()
        .map(|(&n, k)| {
            let element = match k {
                Ok(k) => BasisElement {
                    phi: Some(k.normalized.shift(n)),
                    k0: Some(k.k0),
                    method: Some(k.method),
                    error: None,
                },
                Err(e) => BasisElement {
                    phi: None,
                    k0: None,
                    method: None,
                    error: Some(e.to_string()),
                },
            };
            (n, element)
        })
        .collect();
    Basis { order, elements }
}

/// `φₙ = tⁿ K_{σ t^{2n}}` for `n ∈ [lo, hi]`; kernel failures are recorded
/// per index rather than aborting.
pub fn build_basis(symbol: &CircleFunction, lo: i64, hi: i64, opts: &ReconstructionOptions) -> Basis {
    let (order, kernels) = solve_kernels(symbol, lo, hi, opts);
    basis_from(order, &kernels)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    /// Built from `s₊`.
    Plus,
    /// Built from `s₋` and reflected.
    Minus,
}

#[derive(Clone, Debug, Serialize)]
pub struct ReconstructionResult {
    #[serde(flatten)]
    pub jacobi: JacobiMatrix,
    pub side: Side,
    /// Hankel order actually used.
    pub order: usize,
    /// `max |⟨φₙ, φₘ⟩_σ - δₙₘ|` over the basis indices.
    pub orthonormality_defect: f64,
    /// `max |⟨z φₙ, φₘ⟩_σ|` over `|n - m| ≥ 2`.
    pub band_defect: f64,
    pub flags: Vec<String>,
    /// Basis in the symbol's own indexing.
    #[serde(skip)]
    pub basis: Basis,
}

struct Coefficients {
    p: BTreeMap<i64, f64>,
    q: BTreeMap<i64, f64>,
    orthonormality_defect: f64,
    band_defect: f64,
    basis: Basis,
}

/// `q` on `[lo, hi]` and `p` on `[lo, hi + 1]` in the symbol's indexing.
fn coefficients(
    symbol: &CircleFunction,
    lo: i64,
    hi: i64,
    opts: &ReconstructionOptions,
) -> Result<Coefficients, InverseError> {
    let (order, kernels) = solve_kernels(symbol, lo - 1, hi + 1, opts);
    if let Some((&n, Err(source))) = kernels.iter().find(|(_, k)| k.is_err()) {
        return Err(InverseError::Kernel {
            n,
            source: source.clone(),
        });
    }
    let basis = basis_from(order, &kernels);
    let z = CircleFunction::uniformizer();
    let phi = |n: i64| basis.get(n).expect("every basis element present");
    let indices: Vec<i64> = (lo - 1..=hi + 1).collect();
    let applied: BTreeMap<i64, (CircleFunction, CircleFunction)> = indices
        .par_iter()
        .map(|&n| {
            let f = phi(n);
            (n, (weighted_apply(f, symbol), weighted_apply(&(&z * f), symbol)))
        })
        .collect();

    let mut p = BTreeMap::new();
    let mut q = BTreeMap::new();
    for n in lo..=hi {
        let zw = &applied[&n].1;
        q.insert(n, zw.dot(phi(n)));
        p.insert(n, applied[&(n - 1)].1.dot(phi(n)));
    }
    p.insert(hi + 1, applied[&hi].1.dot(phi(hi + 1)));

    let (ortho, band) = (lo..=hi)
        .into_par_iter()
        .map(|n| {
            let (w, zw) = &applied[&n];
            let mut ortho: f64 = 0.0;
            let mut band: f64 = 0.0;
            for m in lo..=hi {
                let delta = if m == n { 1.0 } else { 0.0 };
                ortho = ortho.max((w.dot(phi(m)) - delta).abs());
                if (m - n).abs() >= 2 {
                    band = band.max(zw.dot(phi(m)).abs());
                }
            }
            (ortho, band)
        })
        .reduce(|| (0.0, 0.0), |a, b| (a.0.max(b.0), a.1.max(b.1)));

    for (&n, &value) in &p {
        if !(value > 0.0) {
            return Err(InverseError::NonPositiveP { n, p: value });
        }
    }
    Ok(Coefficients {
        p,
        q,
        orthonormality_defect: ortho,
        band_defect: band,
        basis,
    })
}

/// `J[s₊]` on `[-m, m]`.
pub fn reconstruct_jacobi(
    s_plus: &CircleFunction,
    opts: &ReconstructionOptions,
) -> Result<ReconstructionResult, InverseError> {
    let m = opts.m as i64;
    let c = coefficients(s_plus, -m, m, opts)?;
    let jacobi = JacobiMatrix::truncated(-m, m, (-m..=m).map(|n| (n, c.p[&n], c.q[&n])))?;
    let flags = c.basis.flags();
    Ok(ReconstructionResult {
        jacobi,
        side: Side::Plus,
        order: c.basis.order,
        orthonormality_defect: c.orthonormality_defect,
        band_defect: c.band_defect,
        flags,
        basis: c.basis,
    })
}

/// `J[s₋]` on `[-m, m]`, reflected onto the axis of `J[s₊]`.
pub fn reconstruct_dual(
    s_minus: &CircleFunction,
    opts: &ReconstructionOptions,
) -> Result<ReconstructionResult, InverseError> {
    let m = opts.m as i64;
    // the reflection maps the range [-m-1, m] onto [-m, m]
    let c = coefficients(s_minus, -m - 1, m, opts)?;
    let dual = JacobiMatrix::truncated(-m - 1, m, (-m - 1..=m).map(|n| (n, c.p[&n], c.q[&n])))?;
    let flags = c.basis.flags();
    Ok(ReconstructionResult {
        jacobi: dual.reflect(),
        side: Side::Minus,
        order: c.basis.order,
        orthonormality_defect: c.orthonormality_defect,
        band_defect: c.band_defect,
        flags,
        basis: c.basis,
    })
}
