//! Equispaced sampling of circle functions.

use std::io::{self, Write};

use num_complex::Complex64;
use rustfft::FftPlanner;

use super::{CircleError, CircleFunction};

/// Default number of points used by validation grids.
pub const DEFAULT_GRID: usize = 4096;

/// Samples `f(t_k)` at `t_k = exp(2πi (k + δ)/size)`, with `δ = 0` for the
/// standard grid and `δ = 1/2` for the half-shifted grid.
#[derive(Clone, Debug)]
pub struct GridSampling {
    size: usize,
    shifted: bool,
    values: Vec<Complex64>,
}

impl GridSampling {
    pub fn of(f: &CircleFunction, size: usize) -> Result<Self, CircleError> {
        Self::build(f, size, false)
    }

    /// Half-step offset grid; avoids the points `t = ±1`.
    pub fn of_shifted(f: &CircleFunction, size: usize) -> Result<Self, CircleError> {
        Self::build(f, size, true)
    }

    fn build(f: &CircleFunction, size: usize, shifted: bool) -> Result<Self, CircleError> {
        if !size.is_power_of_two() {
            return Err(CircleError::GridNotPowerOfTwo(size));
        }
        if f.len() > size {
            return Err(CircleError::GridTooSmall {
                grid: size,
                window: f.len(),
            });
        }
        let mut buf = vec![Complex64::new(0.0, 0.0); size];
        let n = size as i64;
        for (m, c) in f.iter() {
            let slot = m.rem_euclid(n) as usize;
            let weight = if shifted {
                Complex64::from_polar(1.0, std::f64::consts::PI * m as f64 / size as f64)
            } else {
                Complex64::new(1.0, 0.0)
            };
            buf[slot] += weight * c;
        }
        // rustfft's inverse transform is the unnormalized Σ x_j e^{+2πi jk/n}.
        FftPlanner::new().plan_fft_inverse(size).process(&mut buf);
        Ok(Self {
            size,
            shifted,
            values: buf,
        })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn is_shifted(&self) -> bool {
        self.shifted
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// The grid point `t_k`.
    pub fn point(&self, k: usize) -> Complex64 {
        let offset = if self.shifted { 0.5 } else { 0.0 };
        Complex64::from_polar(
            1.0,
            2.0 * std::f64::consts::PI * (k as f64 + offset) / self.size as f64,
        )
    }

    /// Index of `t̄_k` on the same grid.
    pub fn mirror_index(&self, k: usize) -> usize {
        if self.shifted {
            self.size - 1 - k
        } else {
            (self.size - k) % self.size
        }
    }

    /// CSV dump with header `index,re,im`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "index,re,im")?;
        for (k, v) in self.values.iter().enumerate() {
            writeln!(out, "{k},{:e},{:e}", v.re, v.im)?;
        }
        Ok(())
    }
}

/// Smallest power of two that is at least `min_size` and at least four times
/// the widest window among `functions`.
pub fn grid_size_for(min_size: usize, functions: &[&CircleFunction]) -> usize {
    let widest = functions.iter().map(|f| f.len()).max().unwrap_or(0);
    min_size.max(4 * widest).max(4).next_power_of_two()
}
