//! Power-series expansion of rational functions whose poles lie outside the
//! closed unit disk, plus the polynomial helpers it needs.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{CircleError, CircleFunction};

/// Target size of the neglected geometric tail of an expansion.
pub const SERIES_TAIL_TOL: f64 = 1e-14;

/// Upper bound on the number of series coefficients.
pub const SERIES_CAP: usize = 1 << 18;

/// Roots of `Σ coeffs[i] t^i`, via companion-matrix eigenvalues polished by
/// Newton steps. Trailing zero coefficients are ignored.
pub fn polynomial_roots(coeffs: &[f64]) -> Vec<Complex64> {
    let deg = match coeffs.iter().rposition(|&c| c != 0.0) {
        Some(d) => d,
        None => return Vec::new(),
    };
    if deg == 0 {
        return Vec::new();
    }
    let lead = coeffs[deg];
    if deg == 1 {
        return vec![Complex64::new(-coeffs[0] / lead, 0.0)];
    }
    let mut companion = DMatrix::<f64>::zeros(deg, deg);
    for i in 1..deg {
        companion[(i, i - 1)] = 1.0;
    }
    for i in 0..deg {
        companion[(i, deg - 1)] = -coeffs[i] / lead;
    }
    companion
        .complex_eigenvalues()
        .iter()
        .map(|&r| polish_root(&coeffs[..=deg], r))
        .collect()
}

fn polish_root(coeffs: &[f64], mut r: Complex64) -> Complex64 {
    for _ in 0..4 {
        let (mut p, mut dp) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
        for &c in coeffs.iter().rev() {
            dp = dp * r + p;
            p = p * r + c;
        }
        if dp.norm() == 0.0 {
            break;
        }
        let step = p / dp;
        if !step.re.is_finite() || !step.im.is_finite() {
            break;
        }
        r -= step;
        if step.norm() <= 1e-16 * r.norm().max(1.0) {
            break;
        }
    }
    r
}

/// Smallest root modulus of a polynomial with nonnegative indices, or `None`
/// for constants.
pub fn min_root_modulus(poly: &CircleFunction) -> Option<f64> {
    debug_assert!(poly.is_analytic());
    let mut coeffs = vec![0.0; (poly.hi().max(0) + 1) as usize];
    for (m, c) in poly.iter() {
        coeffs[m as usize] = c;
    }
    polynomial_roots(&coeffs)
        .into_iter()
        .map(|r| r.norm())
        .min_by(|a, b| a.total_cmp(b))
}

/// Divides a polynomial by `(1 - e·t)` for `e = ±1`, returning the quotient
/// and the remainder `P(e)`.
pub fn deflate_edge(poly: &CircleFunction, e: f64) -> (CircleFunction, f64) {
    debug_assert!(poly.is_analytic());
    if poly.is_zero() {
        return (CircleFunction::zero(), 0.0);
    }
    let hi = poly.hi() as usize;
    if hi == 0 {
        return (CircleFunction::zero(), poly.coeff(0));
    }
    let mut q = vec![0.0; hi];
    let mut prev = 0.0;
    for (i, slot) in q.iter_mut().enumerate() {
        prev = poly.coeff(i as i64) + e * prev;
        *slot = prev;
    }
    let remainder = poly.coeff(hi as i64) + e * prev;
    (
        CircleFunction::from_coeffs(0, q).expect("finite quotient"),
        remainder,
    )
}

/// Divides a Laurent polynomial by `(1 - e·t)`, factoring out its lowest
/// power first. Returns the quotient and the remainder.
pub fn deflate_edge_laurent(f: &CircleFunction, e: f64) -> (CircleFunction, f64) {
    if f.is_zero() {
        return (CircleFunction::zero(), 0.0);
    }
    let lo = f.lo();
    let (q, r) = deflate_edge(&f.shift(-lo), e);
    (q.shift(lo), r)
}

/// Cancels the factors `(1 ∓ t)` shared by a polynomial denominator and all
/// numerators of a family of rational functions. Values below
/// `tol · (largest coefficient)` count as zero. Returns the reduced
/// denominator and numerators.
pub fn cancel_edge_factors(
    den: &CircleFunction,
    nums: &[CircleFunction],
    tol: f64,
) -> (CircleFunction, Vec<CircleFunction>) {
    let mut den = den.clone();
    let mut nums = nums.to_vec();
    for e in [1.0, -1.0] {
        loop {
            if den.hi() < 1 {
                break;
            }
            let (dq, dr) = deflate_edge(&den, e);
            if dr.abs() > tol * den.max_abs_coeff() {
                break;
            }
            let split: Vec<_> = nums.iter().map(|n| deflate_edge_laurent(n, e)).collect();
            if split
                .iter()
                .zip(&nums)
                .any(|((_, r), n)| r.abs() > tol * n.max_abs_coeff().max(1.0))
            {
                break;
            }
            den = dq;
            nums = split.into_iter().map(|(q, _)| q).collect();
        }
    }
    (den, nums)
}

/// Value of a polynomial at a real point.
pub fn eval_real(poly: &CircleFunction, x: f64) -> f64 {
    poly.iter().map(|(m, c)| c * x.powi(m as i32)).sum()
}

/// Laurent expansion on `T` of `num / den` where `den` has all its zeros off
/// the closed disk (apart from a monomial factor, which is a unit on `T`).
///
/// The reciprocal series is cut once a run of coefficients bounds the
/// remaining geometric tail below `tail_tol`.
pub fn rational_series(
    num: &CircleFunction,
    den: &CircleFunction,
    tail_tol: f64,
) -> Result<CircleFunction, CircleError> {
    if den.is_zero() {
        return Err(CircleError::DenominatorVanishesAtOrigin);
    }
    let shift = den.lo();
    let den = den.shift(-shift);
    let recip = reciprocal_series(&den, tail_tol)?;
    Ok((num * &recip).shift(-shift).trim(1e-300))
}

/// Power series of `1/P` for a polynomial `P` with `P(0) ≠ 0` and no zeros in
/// the closed unit disk.
pub fn reciprocal_series(den: &CircleFunction, tail_tol: f64) -> Result<CircleFunction, CircleError> {
    debug_assert!(den.is_analytic());
    let p0 = den.coeff(0);
    if p0 == 0.0 {
        return Err(CircleError::DenominatorVanishesAtOrigin);
    }
    let deg = den.hi().max(0) as usize;
    if deg == 0 {
        return Ok(CircleFunction::constant(1.0 / p0));
    }
    let min_mod = min_root_modulus(den).unwrap_or(f64::INFINITY);
    if min_mod <= 1.0 + 1e-10 {
        return Err(CircleError::PoleInDisk { modulus: min_mod });
    }
    let rho = 1.0 / min_mod;
    let tail_factor = 1.0 / (1.0 - rho);
    let run = (2 * deg + 2).max(16);
    let p: Vec<f64> = (0..=deg).map(|i| den.coeff(i as i64)).collect();

    let mut c: Vec<f64> = Vec::with_capacity(256);
    let mut small_run = 0usize;
    for m in 0..SERIES_CAP {
        let mut acc = if m == 0 { 1.0 } else { 0.0 };
        for i in 1..=deg.min(m) {
            acc -= p[i] * c[m - i];
        }
        let cm = acc / p0;
        c.push(cm);
        if cm.abs() * tail_factor < tail_tol {
            small_run += 1;
            if small_run >= run && m >= deg {
                return CircleFunction::from_coeffs(0, c);
            }
        } else {
            small_run = 0;
        }
    }
    Err(CircleError::SeriesTooLong { cap: SERIES_CAP })
}
