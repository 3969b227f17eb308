//! Grids on the truncated half-plane, sampled fields and their odd/even
//! extensions across `x2 = 0`.
//!
//! The half-plane is truncated to the periodic strip `[0, L1) x [0, L2]`.
//! Only interior rows are stored; the Dirichlet trace rows `x2 = 0` and
//! `x2 = L2` are implicit zeros. Reflecting across `x2 = 0` produces the
//! doubled grid of `n1 x 2(n2 + 1)` points, periodic in both directions,
//! on which whole-plane Fourier multipliers act.

use std::f64::consts::PI;

use crate::error::{invalid, Error, Result};

/// Discretization of the strip and of its odd-doubled periodic companion.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    n1: usize,
    n2: usize,
    l1: f64,
    l2: f64,
    dealias_fraction: f64,
}

impl GridSpec {
    pub const DEFAULT_DEALIAS: f64 = 2.0 / 3.0;

    pub fn new(n1: usize, n2: usize, l1: f64, l2: f64) -> Result<Self> {
        if n1 == 0 || n1 % 2 != 0 {
            return Err(Error::InvalidGrid(format!(
                "n1 must be a positive even integer, got {n1}"
            )));
        }
        if n2 == 0 {
            return Err(Error::InvalidGrid("n2 must be positive".into()));
        }
        if !(l1.is_finite() && l1 > 0.0 && l2.is_finite() && l2 > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "lengths must be positive and finite, got L1={l1}, L2={l2}"
            )));
        }
        Ok(Self {
            n1,
            n2,
            l1,
            l2,
            dealias_fraction: Self::DEFAULT_DEALIAS,
        })
    }

    /// 64 x 63 samples on `[0, 2pi) x (0, pi)`, where the lowest
    /// Dirichlet eigenvalue is exactly 1.
    pub fn standard() -> Self {
        Self::new(64, 63, 2.0 * PI, PI).expect("standard grid is valid")
    }

    pub fn with_dealias_fraction(mut self, fraction: f64) -> Result<Self> {
        if !(fraction > 0.0 && fraction <= 1.0) {
            return Err(Error::InvalidGrid(format!(
                "dealias fraction must lie in (0, 1], got {fraction}"
            )));
        }
        self.dealias_fraction = fraction;
        Ok(self)
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn n2(&self) -> usize {
        self.n2
    }

    pub fn l1(&self) -> f64 {
        self.l1
    }

    pub fn l2(&self) -> f64 {
        self.l2
    }

    pub fn dealias_fraction(&self) -> f64 {
        self.dealias_fraction
    }

    /// Number of stored samples, `n1 * n2`.
    pub fn len(&self) -> usize {
        self.n1 * self.n2
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dx1(&self) -> f64 {
        self.l1 / self.n1 as f64
    }

    pub fn dx2(&self) -> f64 {
        self.l2 / (self.n2 + 1) as f64
    }

    pub fn x1(&self, i: usize) -> f64 {
        i as f64 * self.dx1()
    }

    /// `x2` of interior row `j` (0-based), i.e. `(j + 1) * L2 / (n2 + 1)`.
    pub fn x2(&self, j: usize) -> f64 {
        (j + 1) as f64 * self.dx2()
    }

    /// Half-length of the doubled grid in `x2`, `n2 + 1`.
    pub(crate) fn half(&self) -> usize {
        self.n2 + 1
    }

    /// Number of `x2` points on the doubled grid, `2(n2 + 1)`.
    pub fn doubled_n2(&self) -> usize {
        2 * (self.n2 + 1)
    }

    /// Signed `x1` wavenumber index for FFT-ordered slot `kk`.
    pub(crate) fn k_of_slot(&self, kk: usize) -> i64 {
        let n = self.n1 as i64;
        let kk = kk as i64;
        if kk < n / 2 {
            kk
        } else {
            kk - n
        }
    }

    pub(crate) fn slot_of_k(&self, k: i64) -> Option<usize> {
        let half = (self.n1 / 2) as i64;
        if k < -half || k >= half {
            return None;
        }
        Some(k.rem_euclid(self.n1 as i64) as usize)
    }

    pub(crate) fn xi1(&self, k: i64) -> f64 {
        2.0 * PI * k as f64 / self.l1
    }

    pub(crate) fn xi2(&self, m: i64) -> f64 {
        PI * m as f64 / self.l2
    }

    /// Dirichlet eigenvalue `sqrt((2 pi k / L1)^2 + (pi m / L2)^2)` of the
    /// mode `exp(2 pi i k x1 / L1) sin(pi m x2 / L2)`.
    pub fn eigenvalue(&self, k: i64, m: i64) -> Result<f64> {
        if m < 1 {
            return Err(invalid(format!("sine index must be >= 1, got {m}")));
        }
        Ok(self.xi1(k).hypot(self.xi2(m)))
    }

    /// Smallest eigenvalue on the strip, `pi / L2`.
    pub fn lambda_min(&self) -> f64 {
        PI / self.l2
    }

    /// Largest eigenvalue among stored modes.
    pub fn lambda_max(&self) -> f64 {
        let kmax = (self.n1 / 2) as i64;
        self.xi1(kmax).hypot(self.xi2(self.n2 as i64))
    }

    /// Largest `|k|` kept by the dealiasing cutoff in `x1`.
    pub(crate) fn k_cut(&self) -> i64 {
        strict_cut(self.dealias_fraction, self.n1 / 2)
    }

    /// Largest sine index kept by the dealiasing cutoff in `x2`.
    pub(crate) fn m_cut(&self) -> i64 {
        strict_cut(self.dealias_fraction, self.half())
    }

    /// Whether mode `(k, m)` survives the dealiasing cutoff.
    pub fn is_resolved(&self, k: i64, m: i64) -> bool {
        k.abs() <= self.k_cut() && m.abs() <= self.m_cut()
    }

    pub(crate) fn check_same(&self, other: &GridSpec) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }
}

/// Largest integer strictly below `fraction * nyquist`. The strict bound
/// keeps the 2/3 rule alias-free when `nyquist` is a multiple of 3.
fn strict_cut(fraction: f64, nyquist: usize) -> i64 {
    let bound = fraction * nyquist as f64;
    let cut = bound.ceil() as i64 - 1;
    cut.max(0)
}

/// Real samples on the interior of the half-plane grid, indexed `(i, j)`
/// with `j` fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    grid: GridSpec,
    values: Vec<f64>,
}

impl Field {
    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    pub fn from_values(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(invalid(format!(
                "expected {} samples, got {}",
                grid.len(),
                values.len()
            )));
        }
        let field = Self { grid, values };
        field.check_finite()?;
        Ok(field)
    }

    /// Samples `f(x1, x2)` at every interior point.
    pub fn from_fn(grid: GridSpec, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for i in 0..grid.n1 {
            let x1 = grid.x1(i);
            for j in 0..grid.n2 {
                values.push(f(x1, grid.x2(j)));
            }
        }
        Self { grid, values }
    }

    pub(crate) fn from_raw(grid: GridSpec, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.grid.n2 + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let n2 = self.grid.n2;
        self.values[i * n2 + j] = v;
    }

    pub fn check_finite(&self) -> Result<()> {
        match self.values.iter().position(|v| !v.is_finite()) {
            None => Ok(()),
            Some(idx) => Err(Error::NonFiniteSample {
                i: idx / self.grid.n2,
                j: idx % self.grid.n2,
            }),
        }
    }

    /// Grid maximum of `|f|`.
    pub fn linf(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Quadrature `L^2` norm over interior points.
    pub fn l2(&self) -> f64 {
        let cell = self.grid.dx1() * self.grid.dx2();
        (self.values.iter().map(|v| v * v).sum::<f64>() * cell).sqrt()
    }

    /// Quadrature `L^p` norm; `p = f64::INFINITY` is the grid maximum.
    pub fn lp(&self, p: f64) -> f64 {
        if p.is_infinite() {
            return self.linf();
        }
        let cell = self.grid.dx1() * self.grid.dx2();
        (self.values.iter().map(|v| v.abs().powf(p)).sum::<f64>() * cell).powf(1.0 / p)
    }

    /// Quadrature of `f * g` over the half-plane strip.
    pub fn inner(&self, other: &Field) -> Result<f64> {
        self.grid.check_same(&other.grid)?;
        let cell = self.grid.dx1() * self.grid.dx2();
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum::<f64>()
            * cell)
    }

    pub fn scaled(&self, a: f64) -> Field {
        Field::from_raw(self.grid, self.values.iter().map(|v| a * v).collect())
    }

    /// `a * self + b * other`.
    pub fn combine(&self, a: f64, other: &Field, b: f64) -> Result<Field> {
        self.grid.check_same(&other.grid)?;
        Ok(Field::from_raw(
            self.grid,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(x, y)| a * x + b * y)
                .collect(),
        ))
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        self.combine(1.0, other, -1.0)
    }

    pub fn add(&self, other: &Field) -> Result<Field> {
        self.combine(1.0, other, 1.0)
    }

    /// Grid maximum of `|self - other|`.
    pub fn max_abs_diff(&self, other: &Field) -> Result<f64> {
        self.grid.check_same(&other.grid)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }
}

/// Samples on the doubled grid covering `x2` in `(-L2, L2]` periodically.
///
/// Storage index `jj` in `0..2(n2+1)` stands for `x2 = jj * dx2`, so
/// `jj > n2 + 1` holds the reflected half `x2 = (jj - 2(n2+1)) * dx2`.
#[derive(Clone, Debug, PartialEq)]
pub struct ExtendedField {
    grid: GridSpec,
    values: Vec<f64>,
}

impl ExtendedField {
    pub(crate) fn from_raw(grid: GridSpec, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.n1 * grid.doubled_n2());
        Self { grid, values }
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self::from_raw(grid, vec![0.0; grid.n1 * grid.doubled_n2()])
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Value at column `i` and signed row `j`, where row `j` sits at
    /// `x2 = j * dx2` (periodic with period `2(n2+1)`).
    pub fn at(&self, i: usize, j: i64) -> f64 {
        let m = self.grid.doubled_n2() as i64;
        self.values[i * m as usize + j.rem_euclid(m) as usize]
    }

    /// Values on the trace row `x2 = 0`.
    pub fn trace(&self) -> Vec<f64> {
        (0..self.grid.n1).map(|i| self.at(i, 0)).collect()
    }

    /// Largest `|g(i, -j) + g(i, j)|`, zero for an exactly odd field.
    pub fn odd_defect(&self) -> f64 {
        self.parity_defect(-1.0)
    }

    /// Largest `|g(i, -j) - g(i, j)|`, zero for an exactly even field.
    pub fn even_defect(&self) -> f64 {
        self.parity_defect(1.0)
    }

    fn parity_defect(&self, sign: f64) -> f64 {
        let half = self.grid.half() as i64;
        let mut worst: f64 = 0.0;
        for i in 0..self.grid.n1 {
            for j in 0..=half {
                let d = self.at(i, -j) - sign * self.at(i, j);
                worst = worst.max(d.abs());
            }
        }
        worst
    }

    /// Grid maximum of `|g|` over the closed strip `0 <= x2 <= L2`.
    pub fn linf_closed(&self) -> f64 {
        let half = self.grid.half() as i64;
        let mut worst: f64 = 0.0;
        for i in 0..self.grid.n1 {
            for j in 0..=half {
                worst = worst.max(self.at(i, j).abs());
            }
        }
        worst
    }
}

fn extend(f: &Field, sign: f64) -> Result<ExtendedField> {
    f.check_finite()?;
    let grid = f.grid;
    let m = grid.doubled_n2();
    let half = grid.half();
    let mut values = vec![0.0; grid.n1 * m];
    for i in 0..grid.n1 {
        let row = &mut values[i * m..(i + 1) * m];
        for j in 0..grid.n2 {
            let v = f.get(i, j);
            row[j + 1] = v;
            row[m - (j + 1)] = sign * v;
        }
        if sign > 0.0 {
            let column: Vec<f64> = (0..grid.n2).map(|j| f.get(i, j)).collect();
            row[0] = even_trace(&column);
            let reversed: Vec<f64> = column.iter().rev().copied().collect();
            row[half] = even_trace(&reversed);
        }
    }
    Ok(ExtendedField::from_raw(grid, values))
}

/// Odd reflection `f(x1, -x2) = -f(x1, x2)`; both trace rows are zero.
pub fn odd_extend(f: &Field) -> Result<ExtendedField> {
    extend(f, -1.0)
}

/// Even reflection `f(x1, -x2) = f(x1, x2)`.
///
/// The trace rows are not sampled by a [`Field`]; they are filled by
/// interpolating the interior column as an even polynomial in `x2`.
pub fn even_extend(f: &Field) -> Result<ExtendedField> {
    extend(f, 1.0)
}

/// Restriction of a doubled-grid field to the interior of the strip.
pub fn restrict(g: &ExtendedField) -> Field {
    let grid = g.grid;
    let m = grid.doubled_n2();
    let mut values = Vec::with_capacity(grid.len());
    for i in 0..grid.n1 {
        values.extend_from_slice(&g.values[i * m + 1..i * m + 1 + grid.n2]);
    }
    Field::from_raw(grid, values)
}

const TRACE_NODES: usize = 6;
const EXTRAPOLATION_NODES: usize = 12;

/// Value at `x = 0` of the even polynomial through `(k h, v[k-1])`,
/// `k = 1..=6`.
fn even_trace(column: &[f64]) -> f64 {
    let nodes = TRACE_NODES.min(column.len());
    let s: Vec<f64> = (1..=nodes).map(|k| (k * k) as f64).collect();
    lagrange_at_zero(&s, &column[..nodes])
}

fn lagrange_at_zero(nodes: &[f64], values: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (a, (&xa, &va)) in nodes.iter().zip(values).enumerate() {
        let mut w = 1.0;
        for (b, &xb) in nodes.iter().enumerate() {
            if a != b {
                w *= xb / (xb - xa);
            }
        }
        acc += w * va;
    }
    acc
}

/// One-sided polynomial extrapolation of each column to `x2 = 0` from the
/// first twelve interior rows. For a field whose odd extension is smooth
/// this is `O(dx2^12)`; a leak of parity shows up as an `O(1)` trace.
pub fn extrapolated_trace(f: &Field) -> Vec<f64> {
    let grid = f.grid;
    let nodes = EXTRAPOLATION_NODES.min(grid.n2);
    let xs: Vec<f64> = (1..=nodes).map(|k| k as f64).collect();
    (0..grid.n1)
        .map(|i| {
            let column: Vec<f64> = (0..nodes).map(|j| f.get(i, j)).collect();
            lagrange_at_zero(&xs, &column)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn small_grid() -> GridSpec {
        GridSpec::new(4, 3, 2.0 * PI, PI).unwrap()
    }

    fn random_field(grid: GridSpec, seed: u64) -> Field {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values = (0..grid.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        Field::from_values(grid, values).unwrap()
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(GridSpec::new(3, 3, 1.0, 1.0).is_err());
        assert!(GridSpec::new(0, 3, 1.0, 1.0).is_err());
        assert!(GridSpec::new(4, 0, 1.0, 1.0).is_err());
        assert!(GridSpec::new(4, 3, -1.0, 1.0).is_err());
        assert!(GridSpec::standard().with_dealias_fraction(0.0).is_err());
    }

    #[test]
    fn sample_points() {
        let g = GridSpec::standard();
        assert_eq!(g.x1(0), 0.0);
        assert!((g.x2(0) - PI / 64.0).abs() < 1e-15);
        assert!((g.x2(62) - 63.0 * PI / 64.0).abs() < 1e-15);
        assert_eq!(g.doubled_n2(), 128);
    }

    #[test]
    fn eigenvalues() {
        let g = GridSpec::standard();
        assert!((g.eigenvalue(0, 1).unwrap() - 1.0).abs() < 1e-15);
        assert!((g.eigenvalue(1, 1).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert!((g.eigenvalue(3, 4).unwrap() - 5.0).abs() < 1e-14);
        assert!(g.eigenvalue(1, 0).is_err());
    }

    #[test]
    fn dealias_cut_is_strict() {
        let g = GridSpec::standard();
        assert_eq!(g.k_cut(), 21);
        assert_eq!(g.m_cut(), 42);
        let g6 = GridSpec::new(6, 2, 1.0, 1.0).unwrap();
        // 2/3 of Nyquist 3 is exactly 2, which would alias.
        assert_eq!(g6.k_cut(), 1);
    }

    #[test]
    fn odd_extend_zero() {
        let g = small_grid();
        let e = odd_extend(&Field::zeros(g)).unwrap();
        assert!(e.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn odd_extend_of_sine_is_sine() {
        let g = GridSpec::standard();
        let f = Field::from_fn(g, |_, x2| x2.sin());
        let e = odd_extend(&f).unwrap();
        let h = g.dx2();
        for i in 0..g.n1() {
            for j in -(g.half() as i64) + 1..=g.half() as i64 {
                assert!((e.at(i, j) - (j as f64 * h).sin()).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn odd_extend_matches_index_oracle() {
        let g = small_grid();
        let f = random_field(g, 7);
        let e = odd_extend(&f).unwrap();
        for i in 0..4 {
            assert_eq!(e.at(i, 0), 0.0);
            assert_eq!(e.at(i, 4), 0.0);
            for j in 1..=3i64 {
                assert_eq!(e.at(i, j), f.get(i, (j - 1) as usize));
                assert_eq!(e.at(i, -j), -f.get(i, (j - 1) as usize));
            }
        }
        assert_eq!(e.odd_defect(), 0.0);
    }

    #[test]
    fn even_extend_matches_index_oracle() {
        let g = small_grid();
        let f = random_field(g, 8);
        let e = even_extend(&f).unwrap();
        for i in 0..4 {
            for j in 1..=3i64 {
                assert_eq!(e.at(i, j), f.get(i, (j - 1) as usize));
                assert_eq!(e.at(i, -j), f.get(i, (j - 1) as usize));
            }
        }
        assert_eq!(e.even_defect(), 0.0);
    }

    #[test]
    fn even_extend_constant_and_cosine() {
        let g = GridSpec::standard();
        let one = Field::from_fn(g, |_, _| 1.0);
        let e = even_extend(&one).unwrap();
        assert!(e.values().iter().all(|&v| (v - 1.0).abs() < 1e-12));

        let c = Field::from_fn(g, |_, x2| x2.cos());
        let e = even_extend(&c).unwrap();
        let h = g.dx2();
        for j in -(g.half() as i64) + 1..=g.half() as i64 {
            assert!((e.at(5, j) - (j as f64 * h).cos()).abs() < 1e-10, "row {j}");
        }
    }

    #[test]
    fn restrict_inverts_extension() {
        let g = small_grid();
        let f = random_field(g, 9);
        assert_eq!(restrict(&odd_extend(&f).unwrap()), f);
        assert_eq!(restrict(&even_extend(&f).unwrap()), f);
        assert_eq!(restrict(&ExtendedField::zeros(g)), Field::zeros(g));
    }

    #[test]
    fn rejects_nan() {
        let g = small_grid();
        let mut v = vec![0.0; g.len()];
        v[5] = f64::NAN;
        assert!(matches!(
            Field::from_values(g, v.clone()),
            Err(Error::NonFiniteSample { i: 1, j: 2 })
        ));
        let f = Field::from_raw(g, v);
        assert!(odd_extend(&f).is_err());
    }

    #[test]
    fn trace_extrapolation_of_sine_vanishes() {
        let g = GridSpec::standard();
        let f = Field::from_fn(g, |x1, x2| (x1.sin() + 2.0) * (2.0 * x2).sin());
        let tr = extrapolated_trace(&f);
        assert!(tr.iter().all(|v| v.abs() < 1e-8));
        let bad = Field::from_fn(g, |_, x2| x2.cos());
        assert!(extrapolated_trace(&bad).iter().all(|v| (v - 1.0).abs() < 1e-8));
    }
}
