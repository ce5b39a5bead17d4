//! Two-sided Jacobi matrices stored as finite perturbations of the free
//! matrix `J₀` (`p_n = 1`, `q_n = 0`).
//!
//! `(J v)_n = p_n v_{n-1} + q_n v_n + p_{n+1} v_{n+1}`.
//!
//! A matrix produced by reconstruction only knows its coefficients on a
//! finite index range; such matrices are marked truncated and every lookup
//! outside the range is an error instead of a silent free value.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum JacobiError {
    #[error("off-diagonal coefficient p_{n} = {p} is not positive")]
    NonPositiveP { n: i64, p: f64 },
    #[error("coefficient at index {n} is not finite")]
    NonFinite { n: i64 },
    #[error("index {n} lies outside the stored range [{lo}, {hi}] of a truncated matrix")]
    OutOfRange { n: i64, lo: i64, hi: i64 },
    #[error("coefficient window of length {0} is too short (need at least 3)")]
    WindowTooShort(usize),
    #[error("range [{lo}, {hi}] is empty")]
    EmptyRange { lo: i64, hi: i64 },
}

/// Jacobi matrix `J₀ + P` with finitely many nontrivial entries.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "JacobiRepr", into = "JacobiRepr")]
pub struct JacobiMatrix {
    entries: BTreeMap<i64, (f64, f64)>,
    range: Option<(i64, i64)>,
}

/// JSON shape: `{"perturbation": {"n": [p, q]}, "range": [lo, hi], "truncated": true}`.
#[derive(Serialize, Deserialize)]
struct JacobiRepr {
    perturbation: BTreeMap<i64, (f64, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    range: Option<(i64, i64)>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    truncated: bool,
}

impl TryFrom<JacobiRepr> for JacobiMatrix {
    type Error = JacobiError;

    fn try_from(repr: JacobiRepr) -> Result<Self, Self::Error> {
        let entries = repr.perturbation.into_iter().map(|(n, (p, q))| (n, p, q));
        match repr.range {
            Some((lo, hi)) => Self::truncated(lo, hi, entries),
            None => Self::from_perturbation(entries),
        }
    }
}

impl From<JacobiMatrix> for JacobiRepr {
    fn from(j: JacobiMatrix) -> Self {
        JacobiRepr {
            truncated: j.range.is_some(),
            perturbation: j.entries,
            range: j.range,
        }
    }
}

fn check_entry(n: i64, p: f64, q: f64) -> Result<(), JacobiError> {
    if !p.is_finite() || !q.is_finite() {
        return Err(JacobiError::NonFinite { n });
    }
    if p <= 0.0 {
        return Err(JacobiError::NonPositiveP { n, p });
    }
    Ok(())
}

impl JacobiMatrix {
    /// The free matrix `J₀`.
    pub fn free() -> Self {
        Self {
            entries: BTreeMap::new(),
            range: None,
        }
    }

    /// Builds `J₀ + P` from `(n, p_n, q_n)` triples; entries equal to the
    /// free values are dropped. Later triples override earlier ones.
    pub fn from_perturbation(
        entries: impl IntoIterator<Item = (i64, f64, f64)>,
    ) -> Result<Self, JacobiError> {
        let mut map = BTreeMap::new();
        for (n, p, q) in entries {
            check_entry(n, p, q)?;
            if p == 1.0 && q == 0.0 {
                map.remove(&n);
            } else {
                map.insert(n, (p, q));
            }
        }
        Ok(Self {
            entries: map,
            range: None,
        })
    }

    /// The three-parameter family `p₀ = p0`, `q₀ = q0`, `q₋₁ = qm1`.
    pub fn rank3(p0: f64, q0: f64, qm1: f64) -> Result<Self, JacobiError> {
        Self::from_perturbation([(0, p0, q0), (-1, 1.0, qm1)])
    }

    /// A matrix known only on `[lo, hi]`; indices in the range that are
    /// missing from `entries` take the free values.
    pub fn truncated(
        lo: i64,
        hi: i64,
        entries: impl IntoIterator<Item = (i64, f64, f64)>,
    ) -> Result<Self, JacobiError> {
        if hi < lo {
            return Err(JacobiError::EmptyRange { lo, hi });
        }
        let mut map = BTreeMap::new();
        for (n, p, q) in entries {
            check_entry(n, p, q)?;
            if n < lo || n > hi {
                return Err(JacobiError::OutOfRange { n, lo, hi });
            }
            map.insert(n, (p, q));
        }
        Ok(Self {
            entries: map,
            range: Some((lo, hi)),
        })
    }

    pub fn is_truncated(&self) -> bool {
        self.range.is_some()
    }

    pub fn range(&self) -> Option<(i64, i64)> {
        self.range
    }

    /// Stored entries `(n, p_n, q_n)`.
    pub fn entries(&self) -> impl Iterator<Item = (i64, f64, f64)> + '_ {
        self.entries.iter().map(|(&n, &(p, q))| (n, p, q))
    }

    /// Smallest `[lo, hi]` containing every entry that differs from `J₀`.
    pub fn support(&self) -> Option<(i64, i64)> {
        let mut it = self
            .entries
            .iter()
            .filter(|(_, &(p, q))| p != 1.0 || q != 0.0)
            .map(|(&n, _)| n);
        let first = it.next()?;
        let last = it.next_back().unwrap_or(first);
        Some((first, last))
    }

    /// `(p_n, q_n)`; errors outside the range of a truncated matrix.
    pub fn coeffs(&self, n: i64) -> Result<(f64, f64), JacobiError> {
        if let Some((lo, hi)) = self.range {
            if n < lo || n > hi {
                return Err(JacobiError::OutOfRange { n, lo, hi });
            }
        }
        Ok(self.entries.get(&n).copied().unwrap_or((1.0, 0.0)))
    }

    pub fn p(&self, n: i64) -> Result<f64, JacobiError> {
        self.coeffs(n).map(|(p, _)| p)
    }

    pub fn q(&self, n: i64) -> Result<f64, JacobiError> {
        self.coeffs(n).map(|(_, q)| q)
    }

    /// Spatial reflection `p'_m = p_{-m}`, `q'_m = q_{-m-1}`.
    ///
    /// This maps solutions `u` of the recurrence of `J` to solutions
    /// `u'(m) = u(-m-1)` of the recurrence of the reflected matrix, and
    /// swaps the two reflection coefficients. A truncated range `[lo, hi]`
    /// becomes `[-hi, -lo-1]`, the indices where both reflected sequences
    /// are known.
    pub fn reflect(&self) -> Self {
        let lookup = |n: i64| self.entries.get(&n).copied().unwrap_or((1.0, 0.0));
        let mut indices: Vec<i64> = self
            .entries
            .keys()
            .flat_map(|&n| [-n, -n - 1])
            .collect();
        indices.sort_unstable();
        indices.dedup();
        let range = self.range.map(|(lo, hi)| (-hi, -lo - 1));
        let mut entries = BTreeMap::new();
        for m in indices {
            if let Some((lo, hi)) = range {
                if m < lo || m > hi {
                    continue;
                }
            }
            let p = lookup(-m).0;
            let q = lookup(-m - 1).1;
            if range.is_some() || p != 1.0 || q != 0.0 {
                entries.insert(m, (p, q));
            }
        }
        Self { entries, range }
    }

    /// Drops the range of a truncated matrix, keeping only entries that
    /// deviate from the free values by more than `tol`. The result is a
    /// finite perturbation suitable for direct scattering.
    pub fn finite_part(&self, tol: f64) -> Self {
        Self {
            entries: self
                .entries
                .iter()
                .filter(|(_, &(p, q))| (p - 1.0).abs() > tol || q.abs() > tol)
                .map(|(&n, &v)| (n, v))
                .collect(),
            range: None,
        }
    }

    /// `J v` on the interior `[v.lo + 1, v.hi - 1]` of the window.
    pub fn apply_window(&self, v: &CoefficientWindow) -> Result<CoefficientWindow, JacobiError> {
        let len = v.values.len();
        if len < 3 {
            return Err(JacobiError::WindowTooShort(len));
        }
        let mut out = Vec::with_capacity(len - 2);
        for i in 1..len - 1 {
            let n = v.lo + i as i64;
            let (p_n, q_n) = self.coeffs(n)?;
            let p_next = self.p(n + 1)?;
            out.push(p_n * v.values[i - 1] + q_n * v.values[i] + p_next * v.values[i + 1]);
        }
        Ok(CoefficientWindow {
            lo: v.lo + 1,
            values: out,
        })
    }

    /// Largest deviation from `(1, 0)` over `|n| >= tail_from`. For a
    /// truncated matrix only the stored range is inspected.
    pub fn decay_check(&self, tail_from: i64) -> DecayCheck {
        let mut check = DecayCheck::default();
        let inspect = |n: i64, (p, q): (f64, f64), check: &mut DecayCheck| {
            if n.abs() >= tail_from {
                check.max_p_dev = check.max_p_dev.max((p - 1.0).abs());
                check.max_q_dev = check.max_q_dev.max(q.abs());
            }
        };
        for (&n, &v) in &self.entries {
            inspect(n, v, &mut check);
        }
        check
    }

    /// Largest deviation from `(1, 0)` over `n ∈ [lo, hi]`.
    pub fn free_deviation(&self, lo: i64, hi: i64) -> Result<DecayCheck, JacobiError> {
        let mut check = DecayCheck::default();
        for n in lo..=hi {
            let (p, q) = self.coeffs(n)?;
            check.max_p_dev = check.max_p_dev.max((p - 1.0).abs());
            check.max_q_dev = check.max_q_dev.max(q.abs());
        }
        Ok(check)
    }

    /// Rows `(n, p_n, q_n)` over `[lo, hi]`.
    pub fn table(&self, lo: i64, hi: i64) -> Result<Vec<(i64, f64, f64)>, JacobiError> {
        (lo..=hi)
            .map(|n| self.coeffs(n).map(|(p, q)| (n, p, q)))
            .collect()
    }
}

/// `max_n max(|p_n - p'_n|, |q_n - q'_n|)` over `n ∈ [lo, hi]`.
pub fn distance(a: &JacobiMatrix, b: &JacobiMatrix, lo: i64, hi: i64) -> Result<f64, JacobiError> {
    let mut worst: f64 = 0.0;
    for n in lo..=hi {
        let (p, q) = a.coeffs(n)?;
        let (p2, q2) = b.coeffs(n)?;
        worst = worst.max((p - p2).abs()).max((q - q2).abs());
    }
    Ok(worst)
}

/// Per-index differences `(n, p_n - p'_n, q_n - q'_n)` over `[lo, hi]`.
pub fn difference_table(
    a: &JacobiMatrix,
    b: &JacobiMatrix,
    lo: i64,
    hi: i64,
) -> Result<Vec<(i64, f64, f64)>, JacobiError> {
    (lo..=hi)
        .map(|n| {
            let (p, q) = a.coeffs(n)?;
            let (p2, q2) = b.coeffs(n)?;
            Ok((n, p - p2, q - q2))
        })
        .collect()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DecayCheck {
    pub max_p_dev: f64,
    pub max_q_dev: f64,
}

impl DecayCheck {
    pub fn max(&self) -> f64 {
        self.max_p_dev.max(self.max_q_dev)
    }
}

/// Finitely many entries `v_lo, …, v_hi` of a sequence on `Z`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoefficientWindow {
    pub lo: i64,
    pub values: Vec<f64>,
}

impl CoefficientWindow {
    pub fn new(lo: i64, values: Vec<f64>) -> Self {
        Self { lo, values }
    }

    /// Indicator of index `n` padded by `pad` zeros on each side.
    pub fn indicator(n: i64, pad: usize) -> Self {
        let mut values = vec![0.0; 2 * pad + 1];
        values[pad] = 1.0;
        Self {
            lo: n - pad as i64,
            values,
        }
    }

    pub fn hi(&self) -> i64 {
        self.lo + self.values.len() as i64 - 1
    }

    pub fn get(&self, n: i64) -> f64 {
        let i = n - self.lo;
        if i < 0 {
            return 0.0;
        }
        self.values.get(i as usize).copied().unwrap_or(0.0)
    }

    pub fn dot(&self, other: &Self) -> f64 {
        let lo = self.lo.max(other.lo);
        let hi = self.hi().min(other.hi());
        (lo..=hi).map(|n| self.get(n) * other.get(n)).sum()
    }
}
