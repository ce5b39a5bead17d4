//! Direct and inverse scattering for Jacobi matrices `J₀ + P` on `ℓ²(ℤ)`
//! whose scattering data lies in the Szegő class.
//!
//! The chain is: a finite perturbation ([`JacobiMatrix`]) goes through exact
//! Jost propagation to a [`ScatteringMatrix`]; the right reflection `s₊`
//! yields a Hankel operator and reproducing kernels, from which
//! [`reconstruct_jacobi`] reads the coefficients back. [`uniqueness`] checks
//! whether the reconstructions from `s₊` and `s₋` agree.

// `!(x < tol)` is used on purpose so that NaN fails the check
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod circle_fn;
pub mod direct;
pub mod hankel;
pub mod harness;
pub mod inverse;
pub mod jacobi;
pub mod smatrix;
pub mod uniqueness;

pub use circle_fn::{CircleError, CircleFunction, InnerOptions, InnerSpec};
pub use direct::{extract_smatrix, extract_smatrix_with, DirectError, DirectScattering};
pub use hankel::{
    hankel_from_symbol, kernel_of_symbol, reproducing_kernel, EpsilonSchedule, HankelError,
    HankelOperator, KernelOptions, ReproducingKernel,
};
pub use harness::{run_experiment, ExperimentConfig, ExperimentKind, ExperimentReport, HarnessError, RunStatus};
pub use inverse::{reconstruct_dual, reconstruct_jacobi, InverseError, ReconstructionOptions, ReconstructionResult};
pub use jacobi::{JacobiError, JacobiMatrix};
pub use smatrix::{
    analytic_smatrix, rank3_smatrix, repair, validate, ScatteringMatrix, SmatrixError, ValidationOptions,
    ValidationReport,
};
pub use uniqueness::{
    compare_reconstructions, uniqueness_criterion, UniquenessError, UniquenessOptions, UniquenessReport,
    Verdict,
};

/// Any error raised by the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Circle(#[from] CircleError),
    #[error(transparent)]
    Jacobi(#[from] JacobiError),
    #[error(transparent)]
    Direct(#[from] DirectError),
    #[error(transparent)]
    Smatrix(#[from] SmatrixError),
    #[error(transparent)]
    Hankel(#[from] HankelError),
    #[error(transparent)]
    Inverse(#[from] InverseError),
    #[error(transparent)]
    Uniqueness(#[from] UniquenessError),
    #[error(transparent)]
    Harness(#[from] HarnessError),
}
