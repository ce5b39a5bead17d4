//! Hankel operators of symbols on the circle, the weighted pairing they
//! define, and the reproducing kernel at the origin.
//!
//! For a symbol `σ`, `H f = P₊[t̄ (σ f)(t̄)]` has matrix entries
//! `H[j][k] = σ̂(-(j+k+1))`, and `⟨f, g⟩_σ = ⟨f + t̄ (σ f)(t̄), g⟩` is the
//! pairing with Gram operator `I + H` on `H²`. The kernel solves
//! `(I + H) k = 1`, regularized by `ε` when `I + H` is singular.
//!
//! Rows and columns with `j ≥ depth(σ)` (the reach of `σ` below index 0)
//! vanish, so only the leading `min(N, depth)` block needs to be solved;
//! the rest of `I + H` is the identity.

use std::io::{self, Write};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circle_fn::CircleFunction;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HankelError {
    #[error("I + H is not positive semidefinite: smallest eigenvalue {min_eigenvalue:e}")]
    NotPositive { min_eigenvalue: f64 },
    #[error("kernel did not converge over the ε schedule: last gap {gap:e} at ε = {epsilon:e}")]
    NotConverged { gap: f64, epsilon: f64 },
    #[error("invalid ε schedule: {0}")]
    BadSchedule(String),
    #[error("truncation order must be at least 1")]
    ZeroOrder,
}

/// Truncated Hankel matrix stored through its generator `h[m] = σ̂(-(m+1))`.
#[derive(Clone, Debug, PartialEq)]
pub struct HankelOperator {
    order: usize,
    active: usize,
    generator: Vec<f64>,
    symbol_window: Option<(i64, i64)>,
}

/// The `N × N` Hankel matrix of `σ`.
pub fn hankel_from_symbol(symbol: &CircleFunction, order: usize) -> HankelOperator {
    let active = order.min(symbol.negative_depth());
    let len = if active == 0 { 0 } else { 2 * active - 1 };
    let generator = (0..len).map(|m| symbol.coeff(-(m as i64) - 1)).collect();
    HankelOperator {
        order,
        active,
        generator,
        symbol_window: symbol.window(),
    }
}

impl HankelOperator {
    /// Truncation order `N`.
    pub fn order(&self) -> usize {
        self.order
    }

    /// Size of the leading block outside of which every entry is zero.
    pub fn active_order(&self) -> usize {
        self.active
    }

    pub fn symbol_window(&self) -> Option<(i64, i64)> {
        self.symbol_window
    }

    pub fn entry(&self, j: usize, k: usize) -> f64 {
        self.generator.get(j + k).copied().unwrap_or(0.0)
    }

    pub fn is_zero(&self) -> bool {
        self.generator.iter().all(|&h| h == 0.0)
    }

    /// The leading `active × active` block of `H`.
    pub fn active_block(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.active, self.active, |j, k| self.entry(j, k))
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.order, self.order, |j, k| self.entry(j, k))
    }

    /// CSV with header `j,k,value`, one row per entry of the active block.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "j,k,value")?;
        for j in 0..self.active {
            for k in 0..self.active {
                writeln!(out, "{j},{k},{:e}", self.entry(j, k))?;
            }
        }
        Ok(())
    }
}

/// `f + t̄ (σ f)(t̄)`, the Gram operator of the weighted pairing applied to `f`.
pub fn weighted_apply(f: &CircleFunction, symbol: &CircleFunction) -> CircleFunction {
    f + &(symbol * f).involute().shift(-1)
}

/// `⟨f + t̄ (σ f)(t̄), g⟩`; symmetric in `f` and `g`.
pub fn weighted_inner_product(f: &CircleFunction, g: &CircleFunction, symbol: &CircleFunction) -> f64 {
    weighted_apply(f, symbol).dot(g)
}

/// Decreasing positive regularization parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct EpsilonSchedule(Vec<f64>);

impl EpsilonSchedule {
    pub fn new(values: Vec<f64>) -> Result<Self, HankelError> {
        if values.is_empty() {
            return Err(HankelError::BadSchedule("empty".into()));
        }
        if values.iter().any(|&e| !(e > 0.0 && e.is_finite())) {
            return Err(HankelError::BadSchedule("values must be positive".into()));
        }
        if values.windows(2).any(|w| w[1] >= w[0]) {
            return Err(HankelError::BadSchedule("values must decrease".into()));
        }
        Ok(Self(values))
    }

    /// `from, from·ratio, …` down to `to`.
    pub fn geometric(from: f64, to: f64, ratio: f64) -> Result<Self, HankelError> {
        if !(ratio > 0.0 && ratio < 1.0) {
            return Err(HankelError::BadSchedule(format!("ratio {ratio} not in (0, 1)")));
        }
        let mut values = Vec::new();
        let mut e = from;
        while e >= to * (1.0 - 1e-9) {
            values.push(e);
            e *= ratio;
        }
        Self::new(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

impl Default for EpsilonSchedule {
    fn default() -> Self {
        Self::geometric(1e-2, 1e-10, 0.1).expect("valid default schedule")
    }
}

impl TryFrom<Vec<f64>> for EpsilonSchedule {
    type Error = HankelError;
    fn try_from(v: Vec<f64>) -> Result<Self, Self::Error> {
        Self::new(v)
    }
}

impl From<EpsilonSchedule> for Vec<f64> {
    fn from(s: EpsilonSchedule) -> Self {
        s.0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelOptions {
    pub schedule: EpsilonSchedule,
    /// Convergence threshold on the `(ε+I+H)`-norm gap of the last two
    /// iterates. Convergent components move by about `ε/λ` per step while
    /// divergent ones grow like `1/ε`, so the default sits between the two.
    pub tol_kernel: f64,
    /// Smallest eigenvalue of `I + H` above which the solve is done at `ε = 0`.
    pub direct_threshold: f64,
    /// Eigenvalues below `-psd_tol` make `I + H` indefinite.
    pub psd_tol: f64,
}

impl Default for KernelOptions {
    fn default() -> Self {
        Self {
            schedule: EpsilonSchedule::default(),
            tol_kernel: 1e-6,
            direct_threshold: 1e-8,
            psd_tol: 1e-10,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveMethod {
    /// Cholesky solve at `ε = 0`.
    Direct,
    /// Limit of the `ε`-regularized solutions.
    Regularized,
}

/// `k = (I + H)^{-1} 1`, `k0 = k(0)` and `K = k/√k0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReproducingKernel {
    pub k: CircleFunction,
    pub k0: f64,
    #[serde(rename = "K")]
    pub normalized: CircleFunction,
    /// `(ε, k0(ε))` along the schedule.
    pub epsilon_trace: Vec<(f64, f64)>,
    pub method: SolveMethod,
    pub min_eigenvalue: f64,
    /// `(ε+I+H)`-norm gap between the last two regularized iterates.
    pub last_gap: f64,
}

impl ReproducingKernel {
    /// `K(0) = √k0`.
    pub fn normalized_at_origin(&self) -> f64 {
        self.k0.sqrt()
    }

    fn from_vector(
        x: Vec<f64>,
        epsilon_trace: Vec<(f64, f64)>,
        method: SolveMethod,
        min_eigenvalue: f64,
        last_gap: f64,
    ) -> Self {
        let k0 = x[0];
        let k = CircleFunction::from_coeffs(0, x).expect("finite kernel");
        let normalized = k.scale(1.0 / k0.sqrt());
        Self {
            k,
            k0,
            normalized,
            epsilon_trace,
            method,
            min_eigenvalue,
            last_gap,
        }
    }
}

/// Solves `(ε + I + H) x = e₀` along the schedule.
///
/// When the smallest eigenvalue of `I + H` exceeds `direct_threshold` the
/// answer is the Cholesky solution at `ε = 0` and the schedule only fills
/// the trace. Otherwise the last regularized iterate is returned, provided
/// the last two iterates agree to `tol_kernel` in the `(I+H)`-norm.
pub fn reproducing_kernel(
    h: &HankelOperator,
    opts: &KernelOptions,
) -> Result<ReproducingKernel, HankelError> {
    if h.order() == 0 {
        return Err(HankelError::ZeroOrder);
    }
    let eps = opts.schedule.values();
    let n = h.active_order();
    if n == 0 {
        let trace = eps.iter().map(|&e| (e, 1.0 / (1.0 + e))).collect();
        return Ok(ReproducingKernel::from_vector(
            vec![1.0],
            trace,
            SolveMethod::Direct,
            1.0,
            0.0,
        ));
    }

    let gram = DMatrix::<f64>::identity(n, n) + h.active_block();
    let eigen = SymmetricEigen::new(gram.clone());
    let min_eigenvalue = eigen.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if min_eigenvalue < -opts.psd_tol {
        return Err(HankelError::NotPositive { min_eigenvalue });
    }

    // x(ε) = Σ_i v_i v_i[0] / (λ_i + ε), eigenvalues clipped at 0
    let lambdas: Vec<f64> = eigen.eigenvalues.iter().map(|&l| l.max(0.0)).collect();
    let solve_eps = |e: f64| -> DVector<f64> {
        let mut x = DVector::zeros(n);
        for (i, &l) in lambdas.iter().enumerate() {
            let v = eigen.eigenvectors.column(i);
            x.axpy(v[0] / (l + e), &v, 1.0);
        }
        x
    };
    let iterates: Vec<DVector<f64>> = eps.iter().map(|&e| solve_eps(e)).collect();
    let trace: Vec<(f64, f64)> = eps.iter().zip(&iterates).map(|(&e, x)| (e, x[0])).collect();
    // measured in the (ε + I + H)-norm so that growth along null directions
    // of I + H is not hidden
    let last_eps = *eps.last().expect("nonempty schedule");
    let last_gap = match iterates.len() {
        0 | 1 => 0.0,
        len => {
            let d = &iterates[len - 1] - &iterates[len - 2];
            (d.dot(&(&gram * &d)) + last_eps * d.norm_squared()).max(0.0).sqrt()
        }
    };

    if min_eigenvalue > opts.direct_threshold {
        let x = match gram.clone().cholesky() {
            Some(chol) => {
                let mut e0 = DVector::zeros(n);
                e0[0] = 1.0;
                chol.solve(&e0)
            }
            None => solve_eps(0.0),
        };
        return Ok(ReproducingKernel::from_vector(
            x.iter().copied().collect(),
            trace,
            SolveMethod::Direct,
            min_eigenvalue,
            last_gap,
        ));
    }
    if !(last_gap < opts.tol_kernel) {
        return Err(HankelError::NotConverged {
            gap: last_gap,
            epsilon: last_eps,
        });
    }
    let x = iterates.last().expect("nonempty schedule");
    Ok(ReproducingKernel::from_vector(
        x.iter().copied().collect(),
        trace,
        SolveMethod::Regularized,
        min_eigenvalue,
        last_gap,
    ))
}

/// Kernel of the Hankel operator of `σ`, with the order enlarged to cover
/// the whole negative reach of `σ`.
pub fn kernel_of_symbol(
    symbol: &CircleFunction,
    order: usize,
    opts: &KernelOptions,
) -> Result<ReproducingKernel, HankelError> {
    let order = order.max(symbol.negative_depth()).max(1);
    reproducing_kernel(&hankel_from_symbol(symbol, order), opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn kernel(symbol: &CircleFunction) -> ReproducingKernel {
        reproducing_kernel(&hankel_from_symbol(symbol, 16), &KernelOptions::default()).unwrap()
    }

    #[test]
    fn analytic_symbol_has_zero_hankel() {
        let sym = CircleFunction::polynomial(&[0.3, -0.2, 0.5]).unwrap();
        let h = hankel_from_symbol(&sym, 8);
        assert!(h.is_zero());
        assert_eq!(h.active_order(), 0);
        assert_eq!(h.to_dense(), DMatrix::zeros(8, 8));
    }

    #[test]
    fn single_negative_coefficient() {
        let h = hankel_from_symbol(&CircleFunction::monomial(-1, 0.4), 5);
        let dense = h.to_dense();
        assert_eq!(dense[(0, 0)], 0.4);
        assert_eq!(dense.iter().filter(|&&x| x != 0.0).count(), 1);
    }

    #[test]
    fn shifted_quadratic_symbol() {
        // (1 + t²)/2 · t⁻²
        let sym = CircleFunction::from_coeffs(-2, vec![0.5, 0.0, 0.5]).unwrap();
        let dense = hankel_from_symbol(&sym, 4).to_dense();
        let mut expected = DMatrix::zeros(4, 4);
        expected[(0, 1)] = 0.5;
        expected[(1, 0)] = 0.5;
        assert_eq!(dense, expected);
    }

    #[test]
    fn kernel_examples() {
        let k = kernel(&CircleFunction::zero());
        assert_eq!(k.k, CircleFunction::one());
        assert_eq!(k.normalized, CircleFunction::one());

        let a = 0.5;
        let k = kernel(&CircleFunction::monomial(-1, a));
        assert!((k.k0 - 1.0 / (1.0 + a)).abs() < 1e-15);
        assert!((k.normalized.coeff(0) - 1.0 / (1.0 + a).sqrt()).abs() < 1e-15);

        let sym = CircleFunction::from_coeffs(-2, vec![0.5, 0.0, 0.5]).unwrap();
        let k = kernel(&sym);
        assert!(k.k.max_abs_diff(&CircleFunction::polynomial(&[4.0 / 3.0, -2.0 / 3.0]).unwrap()) < 1e-14);
        assert!((k.normalized_at_origin() - 2.0 / 3f64.sqrt()).abs() < 1e-14);
        assert_eq!(k.method, SolveMethod::Direct);
    }

    #[test]
    fn indefinite_gram_rejected() {
        let sym = CircleFunction::monomial(-1, -2.0);
        assert!(matches!(
            reproducing_kernel(&hankel_from_symbol(&sym, 4), &KernelOptions::default()),
            Err(HankelError::NotPositive { .. })
        ));
    }

    #[test]
    fn singular_gram_with_one_outside_range_does_not_converge() {
        // I + H = [[0]]: e₀ is not in the range
        let sym = CircleFunction::monomial(-1, -1.0);
        match reproducing_kernel(&hankel_from_symbol(&sym, 4), &KernelOptions::default()) {
            Err(HankelError::NotConverged { gap, .. }) => assert!(gap > 1.0),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn singular_gram_with_one_in_range_converges() {
        // σ̂(-1) = 1, σ̂(-2) = 0, σ̂(-3) = -1
        let sym = CircleFunction::from_coeffs(-3, vec![-1.0, 0.0, 1.0]).unwrap();
        let h = hankel_from_symbol(&sym, 2);
        // I + H = [[2, 0], [0, 0]]
        let k = reproducing_kernel(&h, &KernelOptions::default()).unwrap();
        assert_eq!(k.method, SolveMethod::Regularized);
        assert!((k.k0 - 0.5).abs() < 1e-10);
    }

    #[test]
    fn schedule_validation() {
        assert_eq!(EpsilonSchedule::default().values().len(), 9);
        assert!(EpsilonSchedule::new(vec![1e-3, 1e-2]).is_err());
        assert!(EpsilonSchedule::new(vec![]).is_err());
        assert!(serde_json::from_str::<EpsilonSchedule>("[0.1, -1]").is_err());
    }

    #[test]
    fn trace_is_monotone() {
        let sym = CircleFunction::from_coeffs(-4, vec![0.3, -0.2, 0.1, 0.4]).unwrap();
        let k = kernel(&sym);
        for w in k.epsilon_trace.windows(2) {
            assert!(w[1].1 >= w[0].1);
        }
        assert!((k.epsilon_trace.last().unwrap().1 - k.k0).abs() < 1e-8);
    }

    fn analytic_poly() -> impl Strategy<Value = CircleFunction> {
        prop::collection::vec(-1.0f64..1.0, 1..12)
            .prop_map(|c| CircleFunction::polynomial(&c).unwrap())
    }

    proptest! {
        #[test]
        fn free_pairing_is_plain_dot(f in analytic_poly(), g in analytic_poly()) {
            let w = weighted_inner_product(&f, &g, &CircleFunction::zero());
            prop_assert!((w - f.dot(&g)).abs() < 1e-14);
        }

        #[test]
        fn pairing_is_symmetric(
            f in analytic_poly(),
            g in analytic_poly(),
            sym in prop::collection::vec(-0.3f64..0.3, 1..10),
        ) {
            let sym = CircleFunction::from_coeffs(-5, sym).unwrap();
            let a = weighted_inner_product(&f, &g, &sym);
            let b = weighted_inner_product(&g, &f, &sym);
            prop_assert!((a - b).abs() < 1e-13);
        }

        #[test]
        fn hankel_matrix_is_gram_minus_identity(
            sym in prop::collection::vec(-1.0f64..1.0, 1..10),
            j in 0usize..6,
            k in 0usize..6,
        ) {
            let sym = CircleFunction::from_coeffs(-7, sym).unwrap();
            let h = hankel_from_symbol(&sym, 8);
            let tj = CircleFunction::monomial(j as i64, 1.0);
            let tk = CircleFunction::monomial(k as i64, 1.0);
            let gram = weighted_inner_product(&tk, &tj, &sym);
            let delta = if j == k { 1.0 } else { 0.0 };
            prop_assert!((gram - delta - h.entry(j, k)).abs() < 1e-15);
            prop_assert_eq!(h.entry(j, k), h.entry(k, j));
        }

        #[test]
        fn kernel_reproduces_value_at_origin(
            f in analytic_poly(),
            sym in prop::collection::vec(-0.1f64..0.1, 1..8),
        ) {
            // ‖H‖ ≤ Σ|σ̂| < 1 keeps I + H positive definite
            let sym = CircleFunction::from_coeffs(-8, sym).unwrap();
            let k = kernel_of_symbol(&sym, 16, &KernelOptions::default()).unwrap();
            let lhs = weighted_inner_product(&f, &k.k, &sym);
            prop_assert!((lhs - f.coeff(0)).abs() < 1e-10, "{} vs {}", lhs, f.coeff(0));
        }
    }
}
