//! Named inputs used by the CLI configs, the acceptance suite and the
//! benchmarks.

use crate::circle_fn::{InnerOptions, InnerSpec};
use crate::smatrix::{analytic_smatrix, rank3_smatrix, repair, ScatteringMatrix, ValidationOptions};

use super::HarnessError;

/// Rank-3 perturbations `(p₀, q₀, q₋₁)` without bound states.
pub const RANK3_POINTS: [(f64, f64, f64); 3] = [(0.9, 0.3, -0.2), (0.5, -0.4, 0.1), (0.8, 0.2, 0.0)];

#[derive(Clone, Debug)]
pub struct Example {
    pub name: String,
    pub smatrix: ScatteringMatrix,
}

pub fn analytic_example(degree: u32) -> Result<ScatteringMatrix, HarnessError> {
    let delta = InnerSpec::monomial(degree).build(&InnerOptions::default())?;
    Ok(analytic_smatrix(&delta, &ValidationOptions::default())?)
}

/// Every shipped scattering matrix.
pub fn examples() -> Result<Vec<Example>, HarnessError> {
    let mut out = vec![Example {
        name: "free".into(),
        smatrix: ScatteringMatrix::free(),
    }];
    for (p0, q0, qm1) in RANK3_POINTS {
        out.push(Example {
            name: format!("rank3({p0}, {q0}, {qm1})"),
            smatrix: rank3_smatrix(p0, q0, qm1)?.smatrix,
        });
    }
    let t2 = analytic_example(2)?;
    let phi = InnerSpec::monomial(1).build(&InnerOptions::default())?;
    out.push(Example {
        name: "delta=t^2 repaired by t".into(),
        smatrix: repair(&t2, &phi, &ValidationOptions::default())?,
    });
    out.push(Example {
        name: "delta=t^2".into(),
        smatrix: t2,
    });
    out.push(Example {
        name: "delta=t^4".into(),
        smatrix: analytic_example(4)?,
    });
    Ok(out)
}
