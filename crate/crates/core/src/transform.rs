//! The mixed Fourier (in `x1`) / sine (in `x2`) transform diagonalizing the
//! Dirichlet Laplacian on the strip.
//!
//! Coefficients are normalized so that on the grid
//! `f(x) = sum_{k,m} c(k, m) exp(2 pi i k x1 / L1) sin(pi m x2 / L2)`.
//! The sine transform is computed as a full FFT of the odd extension on the
//! doubled grid, which is also where all products and whole-plane
//! multipliers are evaluated.

use std::sync::Arc;

use num_complex::Complex64;
use once_cell::sync::Lazy;
use parking_lot::Mutex;
use rustfft::{Fft, FftPlanner};

use crate::error::{invalid, Result};
use crate::grid::{odd_extend, restrict, ExtendedField, Field, GridSpec};

static PLANNER: Lazy<Mutex<FftPlanner<f64>>> = Lazy::new(|| Mutex::new(FftPlanner::new()));

fn plan(len: usize, forward: bool) -> Arc<dyn Fft<f64>> {
    let mut planner = PLANNER.lock();
    if forward {
        planner.plan_fft_forward(len)
    } else {
        planner.plan_fft_inverse(len)
    }
}

/// Unnormalized in-place 2D FFT of a row-major `rows x cols` array.
pub(crate) fn fft2(data: &mut [Complex64], rows: usize, cols: usize, forward: bool) {
    debug_assert_eq!(data.len(), rows * cols);
    let (row_fft, col_fft) = (plan(cols, forward), plan(rows, forward));
    let scratch_len = row_fft
        .get_inplace_scratch_len()
        .max(col_fft.get_inplace_scratch_len());
    let mut scratch = vec![Complex64::new(0.0, 0.0); scratch_len];
    row_fft.process_with_scratch(data, &mut scratch);
    let mut t = vec![Complex64::new(0.0, 0.0); data.len()];
    transpose::transpose(data, &mut t, cols, rows);
    col_fft.process_with_scratch(&mut t, &mut scratch);
    transpose::transpose(&t, data, rows, cols);
}

/// Coefficients in the Dirichlet eigenbasis.
///
/// Storage is `n1 x n2`, the first index in FFT order (slots `0..n1/2` hold
/// `k = 0..n1/2-1`, the rest `k = -n1/2..-1`), the second index `m - 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    grid: GridSpec,
    coeffs: Vec<Complex64>,
    real: bool,
}

impl Spectrum {
    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            grid,
            coeffs: vec![Complex64::new(0.0, 0.0); grid.len()],
            real: true,
        }
    }

    /// Wraps raw FFT-ordered coefficients; the reality flag is set when the
    /// array is Hermitian in `k` to round-off.
    pub fn from_coeffs(grid: GridSpec, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(invalid(format!(
                "expected {} coefficients, got {}",
                grid.len(),
                coeffs.len()
            )));
        }
        let mut s = Self {
            grid,
            coeffs,
            real: false,
        };
        s.real = s.hermitian_defect() <= 1e-14 * s.max_abs().max(f64::MIN_POSITIVE);
        Ok(s)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub(crate) fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn is_real(&self) -> bool {
        self.real
    }

    /// Coefficient of mode `(k, m)`, `-n1/2 <= k < n1/2`, `1 <= m <= n2`.
    pub fn get(&self, k: i64, m: usize) -> Option<Complex64> {
        let kk = self.grid.slot_of_k(k)?;
        if m == 0 || m > self.grid.n2() {
            return None;
        }
        Some(self.coeffs[kk * self.grid.n2() + m - 1])
    }

    /// Sets mode `(k, m)`; the reality flag is recomputed lazily by
    /// [`Spectrum::refresh_reality`].
    pub fn set(&mut self, k: i64, m: usize, value: Complex64) -> Result<()> {
        let kk = self
            .grid
            .slot_of_k(k)
            .ok_or_else(|| invalid(format!("x1 index {k} out of range")))?;
        if m == 0 || m > self.grid.n2() {
            return Err(invalid(format!("sine index {m} out of range")));
        }
        let n2 = self.grid.n2();
        self.coeffs[kk * n2 + m - 1] = value;
        Ok(())
    }

    pub fn refresh_reality(&mut self) {
        self.real = self.hermitian_defect() <= 1e-14 * self.max_abs().max(f64::MIN_POSITIVE);
    }

    fn hermitian_defect(&self) -> f64 {
        let n1 = self.grid.n1();
        let n2 = self.grid.n2();
        let mut worst: f64 = 0.0;
        for kk in 0..n1 {
            let partner = (n1 - kk) % n1;
            for m in 0..n2 {
                let d = self.coeffs[kk * n2 + m] - self.coeffs[partner * n2 + m].conj();
                worst = worst.max(d.norm());
            }
        }
        worst
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.norm()))
    }

    /// Sum of `|c|^2` over all modes.
    pub fn energy(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    /// Visits every stored mode as `(storage index, k, m, lambda)`.
    pub fn modes(&self) -> impl Iterator<Item = (usize, i64, i64, f64)> + '_ {
        mode_table(&self.grid)
    }

    /// Multiplies every coefficient by `sigma(lambda(k, m))`.
    pub fn map_symbol(&self, mut sigma: impl FnMut(f64) -> f64) -> Spectrum {
        let mut out = self.clone();
        for (idx, _, _, lambda) in mode_table(&self.grid) {
            out.coeffs[idx] *= sigma(lambda);
        }
        out
    }

    /// `a * self + b * other`.
    pub fn combine(&self, a: f64, other: &Spectrum, b: f64) -> Result<Spectrum> {
        self.grid.check_same(&other.grid)?;
        Ok(Spectrum {
            grid: self.grid,
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(x, y)| x * a + y * b)
                .collect(),
            real: self.real && other.real,
        })
    }

    /// Zeroes every mode outside the dealiasing cutoff.
    pub fn dealiased(&self) -> Spectrum {
        let mut out = self.clone();
        for (idx, k, m, _) in mode_table(&self.grid) {
            if !self.grid.is_resolved(k, m) {
                out.coeffs[idx] = Complex64::new(0.0, 0.0);
            }
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// Coefficients laid out on the doubled grid as the 2D DFT of the odd
    /// extension.
    pub(crate) fn to_doubled_hat(&self) -> Vec<Complex64> {
        let g = self.grid;
        let n1 = g.n1();
        let n2 = g.n2();
        let half = g.half();
        let m2 = g.doubled_n2();
        let scale = (n1 * half) as f64;
        let mut hat = vec![Complex64::new(0.0, 0.0); n1 * m2];
        for kk in 0..n1 {
            for m in 1..=n2 {
                let c = self.coeffs[kk * n2 + m - 1];
                // sin = (e^{i} - e^{-i}) / 2i
                let v = Complex64::new(0.0, -scale) * c;
                hat[kk * m2 + m] = v;
                hat[kk * m2 + m2 - m] = -v;
            }
        }
        hat
    }

    /// Inverse of [`Spectrum::to_doubled_hat`], projecting onto the odd part.
    pub(crate) fn from_doubled_hat(grid: GridSpec, hat: &[Complex64], real: bool) -> Spectrum {
        let n1 = grid.n1();
        let n2 = grid.n2();
        let half = grid.half();
        let m2 = grid.doubled_n2();
        let scale = 1.0 / (2.0 * (n1 * half) as f64);
        let mut coeffs = Vec::with_capacity(grid.len());
        for kk in 0..n1 {
            for m in 1..=n2 {
                let d = hat[kk * m2 + m] - hat[kk * m2 + m2 - m];
                coeffs.push(Complex64::new(0.0, scale) * d);
            }
        }
        Spectrum { grid, coeffs, real }
    }
}

pub(crate) fn mode_table(grid: &GridSpec) -> impl Iterator<Item = (usize, i64, i64, f64)> + '_ {
    let n2 = grid.n2();
    (0..grid.n1()).flat_map(move |kk| {
        let k = grid.k_of_slot(kk);
        let xi1 = grid.xi1(k);
        (1..=n2).map(move |m| {
            let lambda = xi1.hypot(grid.xi2(m as i64));
            (kk * n2 + m - 1, k, m as i64, lambda)
        })
    })
}

/// Physical samples on the doubled grid from a doubled-grid spectrum,
/// consuming the hat buffer.
pub(crate) fn doubled_inverse(grid: &GridSpec, mut hat: Vec<Complex64>) -> Vec<f64> {
    let n1 = grid.n1();
    let m2 = grid.doubled_n2();
    fft2(&mut hat, n1, m2, false);
    let norm = 1.0 / (n1 * m2) as f64;
    hat.into_iter().map(|c| c.re * norm).collect()
}

pub(crate) fn doubled_forward(grid: &GridSpec, values: &[f64]) -> Vec<Complex64> {
    let mut hat: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft2(&mut hat, grid.n1(), grid.doubled_n2(), true);
    hat
}

/// Field to Dirichlet-eigenbasis coefficients.
pub fn forward_transform(f: &Field) -> Result<Spectrum> {
    let ext = odd_extend(f)?;
    Ok(forward_extended(&ext))
}

pub(crate) fn forward_extended(ext: &ExtendedField) -> Spectrum {
    let hat = doubled_forward(ext.grid(), ext.values());
    Spectrum::from_doubled_hat(*ext.grid(), &hat, true)
}

/// Coefficients back to samples. A spectrum without the reality property
/// is synthesized in full and its real part returned, with a warning.
pub fn inverse_transform(s: &Spectrum) -> Field {
    if !s.real {
        log::warn!("inverse transform of a non-Hermitian spectrum; taking the real part");
    }
    restrict(&inverse_extended(s))
}

/// Odd extension of the synthesized field on the doubled grid.
pub(crate) fn inverse_extended(s: &Spectrum) -> ExtendedField {
    let values = doubled_inverse(&s.grid, s.to_doubled_hat());
    ExtendedField::from_raw(s.grid, values)
}

/// `sqrt((2 pi k / L1)^2 + (pi m / L2)^2)`; fails for `m < 1`.
pub fn eigenvalue(grid: &GridSpec, k: i64, m: i64) -> Result<f64> {
    grid.eigenvalue(k, m)
}
