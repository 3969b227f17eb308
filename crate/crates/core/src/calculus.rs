//! Functional calculus of the square root of the Dirichlet Laplacian:
//! spectral multipliers, the Poisson and heat semigroups, fractional
//! powers, Littlewood-Paley blocks, Besov norms and the SQG velocity.

use num_complex::Complex64;

use crate::error::{invalid, Result};
use crate::grid::{restrict, ExtendedField, Field, GridSpec};
use crate::transform::{doubled_inverse, forward_transform, inverse_transform, Spectrum};

/// Smooth dyadic partition of unity `{phi_j}` on `[j_min, j_max]` with low
/// cutoff `psi`.
///
/// `phi_0(lambda) = h(log2 lambda) / sum_i h(log2 lambda - i)` with
/// `h(x) = exp(-1 / (1 - x^2))` on `|x| < 1`; `phi_j(lambda) =
/// phi_0(lambda / 2^j)`, so `supp phi_0 = [1/2, 2]` and the blocks sum to
/// one identically.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DyadicPartition {
    j_min: i32,
    j_max: i32,
}

fn bump(x: f64) -> f64 {
    if x.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - x * x)).exp()
    }
}

impl DyadicPartition {
    pub fn new(j_min: i32, j_max: i32) -> Result<Self> {
        if j_min >= j_max {
            return Err(invalid(format!(
                "empty dyadic range [{j_min}, {j_max}]"
            )));
        }
        Ok(Self { j_min, j_max })
    }

    /// Smallest partition whose resolved band contains every eigenvalue of
    /// the grid.
    pub fn covering(grid: &GridSpec) -> Self {
        let j_min = grid.lambda_min().log2().floor() as i32 - 1;
        let j_max = grid.lambda_max().log2().ceil() as i32 + 1;
        Self { j_min, j_max }
    }

    pub fn j_min(&self) -> i32 {
        self.j_min
    }

    pub fn j_max(&self) -> i32 {
        self.j_max
    }

    pub fn indices(&self) -> std::ops::RangeInclusive<i32> {
        self.j_min..=self.j_max
    }

    /// Band `[2^(j_min+1), 2^(j_max-1)]` on which the blocks sum to one.
    pub fn resolved_band(&self) -> (f64, f64) {
        (
            2f64.powi(self.j_min + 1),
            2f64.powi(self.j_max - 1),
        )
    }

    pub fn phi0(lambda: f64) -> f64 {
        if !(lambda > 0.0) {
            return 0.0;
        }
        let x = lambda.log2();
        if x.abs() >= 1.0 {
            return 0.0;
        }
        let frac = x - x.floor();
        bump(x) / (bump(frac) + bump(frac - 1.0))
    }

    pub fn phi(j: i32, lambda: f64) -> f64 {
        Self::phi0(lambda / 2f64.powi(j))
    }

    /// `psi(lambda) = 1 - sum_{j >= 1} phi_j(lambda)`.
    pub fn psi(lambda: f64) -> f64 {
        if lambda <= 1.0 {
            1.0
        } else if lambda >= 2.0 {
            0.0
        } else {
            Self::phi0(lambda)
        }
    }

    /// `sum_{j in [j_min, j_max]} phi_j(lambda)`.
    pub fn partial_sum(&self, lambda: f64) -> f64 {
        self.indices().map(|j| Self::phi(j, lambda)).sum()
    }
}

/// Integrability or summability index; only `1`, `2` and `infinity` are
/// supported.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Exponent {
    One,
    Two,
    Infinity,
}

impl Exponent {
    pub fn from_f64(p: f64) -> Result<Self> {
        if p == 1.0 {
            Ok(Self::One)
        } else if p == 2.0 {
            Ok(Self::Two)
        } else if p.is_infinite() && p > 0.0 {
            Ok(Self::Infinity)
        } else {
            Err(invalid(format!("unsupported exponent {p}")))
        }
    }

    pub fn as_f64(self) -> f64 {
        match self {
            Self::One => 1.0,
            Self::Two => 2.0,
            Self::Infinity => f64::INFINITY,
        }
    }

    fn sequence_norm(self, items: impl Iterator<Item = f64>) -> f64 {
        match self {
            Self::One => items.map(f64::abs).sum(),
            Self::Two => items.map(|v| v * v).sum::<f64>().sqrt(),
            Self::Infinity => items.fold(0.0, |m, v| m.max(v.abs())),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BesovParams {
    pub s: f64,
    pub p: Exponent,
    pub q: Exponent,
    pub homogeneous: bool,
}

impl BesovParams {
    /// Homogeneous `B^s_{inf,1}`, the working scale of the solver.
    pub fn inf_one(s: f64) -> Self {
        Self {
            s,
            p: Exponent::Infinity,
            q: Exponent::One,
            homogeneous: true,
        }
    }
}

/// `sigma(Lambda_D) f`.
pub fn apply_multiplier(f: &Field, sigma: impl Fn(f64) -> f64) -> Result<Field> {
    let s = forward_transform(f)?;
    Ok(inverse_transform(&apply_multiplier_spectrum(&s, sigma)?))
}

pub fn apply_multiplier_spectrum(s: &Spectrum, sigma: impl Fn(f64) -> f64) -> Result<Spectrum> {
    let mut bad = None;
    let out = s.map_symbol(|lambda| {
        let v = sigma(lambda);
        if !v.is_finite() && bad.is_none() {
            bad = Some(lambda);
        }
        v
    });
    match bad {
        Some(lambda) => Err(invalid(format!("multiplier is not finite at lambda = {lambda}"))),
        None => Ok(out),
    }
}

fn check_block(j: i32, partition: &DyadicPartition) -> Result<()> {
    if partition.indices().contains(&j) {
        Ok(())
    } else {
        Err(invalid(format!(
            "block {j} outside partition range [{}, {}]",
            partition.j_min, partition.j_max
        )))
    }
}

/// Littlewood-Paley block `phi_j(Lambda_D) f`.
pub fn lp_block(f: &Field, j: i32, partition: &DyadicPartition) -> Result<Field> {
    check_block(j, partition)?;
    apply_multiplier(f, |l| DyadicPartition::phi(j, l))
}

/// Low-frequency block `psi(Lambda_D) f`.
pub fn low_block(f: &Field) -> Result<Field> {
    apply_multiplier(f, DyadicPartition::psi)
}

fn check_time(t: f64) -> Result<()> {
    if t >= 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("time must be finite and >= 0, got {t}")))
    }
}

/// Poisson semigroup `exp(-t Lambda_D) f`.
pub fn semigroup(f: &Field, t: f64) -> Result<Field> {
    check_time(t)?;
    apply_multiplier(f, |l| (-t * l).exp())
}

pub fn semigroup_spectrum(s: &Spectrum, t: f64) -> Result<Spectrum> {
    check_time(t)?;
    Ok(s.map_symbol(|l| (-t * l).exp()))
}

/// Heat semigroup `exp(t Delta_D) f`, symbol `exp(-t lambda^2)`.
pub fn heat_semigroup(f: &Field, t: f64) -> Result<Field> {
    check_time(t)?;
    apply_multiplier(f, |l| (-t * l * l).exp())
}

/// `Lambda_D^s f`. Every stored eigenvalue is at least `pi / L2`, so any
/// real power is defined.
pub fn frac_lambda(f: &Field, s: f64) -> Result<Field> {
    apply_multiplier(f, |l| l.powf(s))
}

/// Wavenumbers on the doubled grid. Odd-order derivatives of Nyquist modes
/// are set to zero.
pub(crate) struct DoubledWavenumbers {
    pub xi1: Vec<f64>,
    pub xi2: Vec<f64>,
    pub nyq1: usize,
    pub nyq2: usize,
}

impl DoubledWavenumbers {
    pub fn new(grid: &GridSpec) -> Self {
        let xi1 = (0..grid.n1()).map(|kk| grid.xi1(grid.k_of_slot(kk))).collect();
        let half = grid.half();
        let m2 = grid.doubled_n2();
        let xi2 = (0..m2)
            .map(|l| {
                let signed = if l <= half { l as i64 } else { l as i64 - m2 as i64 };
                grid.xi2(signed)
            })
            .collect();
        Self {
            xi1,
            xi2,
            nyq1: grid.n1() / 2,
            nyq2: half,
        }
    }

    /// Symbol of `d1^b1 d2^b2` at doubled slot `(kk, l)`.
    pub fn derivative_symbol(&self, kk: usize, l: usize, b1: u32, b2: u32) -> Complex64 {
        if (b1 % 2 == 1 && kk == self.nyq1) || (b2 % 2 == 1 && l == self.nyq2) {
            return Complex64::new(0.0, 0.0);
        }
        let i = Complex64::new(0.0, 1.0);
        (i * self.xi1[kk]).powu(b1) * (i * self.xi2[l]).powu(b2)
    }

    /// Symbols of `(u1, u2) = (-d2, d1) Lambda^{-1}` at `(kk, l)`.
    pub fn velocity_symbols(&self, kk: usize, l: usize) -> (Complex64, Complex64) {
        let norm = self.xi1[kk].hypot(self.xi2[l]);
        if norm == 0.0 {
            return (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
        }
        let d1 = self.derivative_symbol(kk, l, 1, 0);
        let d2 = self.derivative_symbol(kk, l, 0, 1);
        (-d2 / norm, d1 / norm)
    }
}

pub(crate) fn map_doubled(
    grid: &GridSpec,
    hat: &[Complex64],
    symbol: impl Fn(usize, usize) -> Complex64,
) -> Vec<f64> {
    let m2 = grid.doubled_n2();
    let mapped = hat
        .iter()
        .enumerate()
        .map(|(idx, c)| c * symbol(idx / m2, idx % m2))
        .collect();
    doubled_inverse(grid, mapped)
}

/// `d1^b1 d2^b2 f` evaluated on the doubled grid through the odd extension
/// of `f`. Even `b2` yields an odd field, odd `b2` an even one.
pub fn derivative(f: &Field, b1: u32, b2: u32) -> Result<ExtendedField> {
    Ok(derivative_spectrum(&forward_transform(f)?, b1, b2))
}

pub fn derivative_spectrum(s: &Spectrum, b1: u32, b2: u32) -> ExtendedField {
    let grid = *s.grid();
    let k = DoubledWavenumbers::new(&grid);
    let values = map_doubled(&grid, &s.to_doubled_hat(), |kk, l| {
        k.derivative_symbol(kk, l, b1, b2)
    });
    ExtendedField::from_raw(grid, values)
}

/// `u = grad^perp Lambda_D^{-1} theta` on the doubled grid: whole-plane
/// multipliers `i xi^perp / |xi|` applied to the odd extension of theta.
/// `u1` comes out even in `x2` and `u2` odd.
pub fn velocity_extended(theta: &Field) -> Result<(ExtendedField, ExtendedField)> {
    Ok(velocity_spectrum(&forward_transform(theta)?))
}

pub fn velocity_spectrum(s: &Spectrum) -> (ExtendedField, ExtendedField) {
    let grid = *s.grid();
    let k = DoubledWavenumbers::new(&grid);
    let hat = s.to_doubled_hat();
    let u1 = map_doubled(&grid, &hat, |kk, l| k.velocity_symbols(kk, l).0);
    let u2 = map_doubled(&grid, &hat, |kk, l| k.velocity_symbols(kk, l).1);
    (
        ExtendedField::from_raw(grid, u1),
        ExtendedField::from_raw(grid, u2),
    )
}

/// Velocity restricted to the interior of the strip.
pub fn velocity(theta: &Field) -> Result<(Field, Field)> {
    let (u1, u2) = velocity_extended(theta)?;
    Ok((restrict(&u1), restrict(&u2)))
}

/// Grid `L^p` norms of the Littlewood-Paley blocks of one field.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockNorms {
    pub j_min: i32,
    /// `norms[j - j_min] = ||phi_j(Lambda_D) f||_{L^p}`.
    pub norms: Vec<f64>,
    /// `||psi(Lambda_D) f||_{L^p}`.
    pub low: f64,
    /// Fraction of `sum |c|^2` outside the resolved band.
    pub tail_fraction: f64,
}

impl BlockNorms {
    pub fn block(&self, j: i32) -> f64 {
        self.norms[(j - self.j_min) as usize]
    }

    pub fn besov(&self, s: f64, q: Exponent, homogeneous: bool) -> f64 {
        let j_min = self.j_min;
        let weighted = self
            .norms
            .iter()
            .enumerate()
            .map(move |(idx, n)| (j_min + idx as i32, n))
            .filter(move |(j, _)| homogeneous || *j >= 1)
            .map(move |(j, n)| 2f64.powf(s * j as f64) * n);
        if homogeneous {
            q.sequence_norm(weighted)
        } else {
            q.sequence_norm(std::iter::once(self.low).chain(weighted))
        }
    }
}

fn block_field(s: &Spectrum, sigma: impl Fn(f64) -> f64) -> Option<Field> {
    let mut any = false;
    let out = s.map_symbol(|l| {
        let v = sigma(l);
        any |= v != 0.0;
        v
    });
    if !any {
        return None;
    }
    Some(inverse_transform(&out))
}

/// Spectral mass outside the resolved band of `partition`, relative to
/// the total.
pub fn tail_fraction(s: &Spectrum, partition: &DyadicPartition) -> f64 {
    let total = s.energy();
    if total == 0.0 {
        return 0.0;
    }
    let (lo, hi) = partition.resolved_band();
    let outside: f64 = s
        .modes()
        .filter(|(_, _, _, l)| *l < lo || *l > hi)
        .map(|(idx, ..)| s.coeffs()[idx].norm_sqr())
        .sum();
    outside / total
}

const TAIL_WARNING: f64 = 1e-8;

pub fn block_norms_spectrum(s: &Spectrum, p: Exponent, partition: &DyadicPartition) -> BlockNorms {
    let tail = tail_fraction(s, partition);
    if tail > TAIL_WARNING {
        log::warn!(
            "{:.3e} of the spectral mass lies outside the resolved band [{}, {}]",
            tail,
            partition.resolved_band().0,
            partition.resolved_band().1
        );
    }
    let p = p.as_f64();
    let norms = partition
        .indices()
        .map(|j| {
            block_field(s, |l| DyadicPartition::phi(j, l))
                .map(|b| b.lp(p))
                .unwrap_or(0.0)
        })
        .collect();
    let low = block_field(s, DyadicPartition::psi)
        .map(|b| b.lp(p))
        .unwrap_or(0.0);
    BlockNorms {
        j_min: partition.j_min,
        norms,
        low,
        tail_fraction: tail,
    }
}

pub fn block_norms(f: &Field, p: Exponent, partition: &DyadicPartition) -> Result<BlockNorms> {
    Ok(block_norms_spectrum(&forward_transform(f)?, p, partition))
}

/// `|| {2^{sj} ||phi_j(Lambda_D) f||_{L^p}}_j ||_{l^q}`; the inhomogeneous
/// variant replaces blocks `j <= 0` by `psi(Lambda_D) f`.
pub fn besov_norm(f: &Field, params: &BesovParams, partition: &DyadicPartition) -> Result<f64> {
    let norms = block_norms(f, params.p, partition)?;
    Ok(norms.besov(params.s, params.q, params.homogeneous))
}

pub fn besov_norm_spectrum(s: &Spectrum, params: &BesovParams, partition: &DyadicPartition) -> f64 {
    block_norms_spectrum(s, params.p, partition).besov(params.s, params.q, params.homogeneous)
}

/// `sup_j ||phi_j f||_inf / ||f||_inf` over the supplied samples, a lower
/// estimate of `sup_j ||phi_j(Lambda_D)||_{L^inf -> L^inf}`.
pub fn block_operator_norm_estimate(samples: &[Field], partition: &DyadicPartition) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for f in samples {
        let denom = f.linf();
        if denom == 0.0 {
            continue;
        }
        let norms = block_norms(f, Exponent::Infinity, partition)?;
        for n in &norms.norms {
            worst = worst.max(n / denom);
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use std::f64::consts::{PI, SQRT_2};

    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn g() -> GridSpec {
        GridSpec::standard()
    }

    fn random_field(seed: u64) -> Field {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let grid = g();
        Field::from_values(grid, (0..grid.len()).map(|_| rng.random_range(-1.0..1.0)).collect())
            .unwrap()
    }

    #[test]
    fn phi0_support_and_positivity() {
        for i in 0..2000 {
            let l = 0.25 + 4.0 * i as f64 / 2000.0;
            let v = DyadicPartition::phi0(l);
            assert!(v >= 0.0);
            if !(0.5..=2.0).contains(&l) {
                assert_eq!(v, 0.0);
            }
        }
        assert_eq!(DyadicPartition::phi0(1.0), 1.0);
    }

    #[test]
    fn partition_at_one() {
        for j in -4..=4 {
            let v = DyadicPartition::phi(j, 1.0);
            if !(-1..=1).contains(&j) {
                assert_eq!(v, 0.0);
            }
        }
        let p = DyadicPartition::new(-5, 5).unwrap();
        assert!((p.partial_sum(1.0) - 1.0).abs() < 1e-15);
        for j0 in -3..=3 {
            assert!((p.partial_sum(2f64.powi(j0)) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn psi_complements_high_blocks() {
        let p = DyadicPartition::new(1, 12).unwrap();
        for i in 0..500 {
            let l = 0.01 + 1000.0 * i as f64 / 500.0;
            let high: f64 = p.indices().map(|j| DyadicPartition::phi(j, l)).sum();
            assert!((DyadicPartition::psi(l) + high - 1.0).abs() < 1e-12, "lambda {l}");
        }
    }

    #[test]
    fn covering_partition_resolves_grid() {
        let p = DyadicPartition::covering(&g());
        let (lo, hi) = p.resolved_band();
        assert!(lo <= g().lambda_min() && hi >= g().lambda_max());
        assert!(DyadicPartition::new(3, 3).is_err());
    }

    #[test]
    fn multiplier_identity_and_eigen_scaling() {
        let f = random_field(1);
        let same = apply_multiplier(&f, |_| 1.0).unwrap();
        assert!(same.max_abs_diff(&f).unwrap() < 1e-13);

        let e = Field::from_fn(g(), |_, x2| x2.sin());
        for j in -1..=1 {
            let b = apply_multiplier(&e, |l| DyadicPartition::phi(j, l)).unwrap();
            let want = e.scaled(DyadicPartition::phi(j, 1.0));
            assert!(b.max_abs_diff(&want).unwrap() < 1e-14);
        }
        assert!(apply_multiplier(&e, |_| f64::NAN).is_err());
    }

    #[test]
    fn lambda_squared_is_minus_laplacian() {
        let f = random_field(2);
        let got = apply_multiplier(&f, |l| l * l).unwrap();
        // coefficient-wise oracle
        let s = forward_transform(&f).unwrap();
        let mut scaled = s.clone();
        for (idx, k, m, _) in s.modes() {
            let w = (2.0 * PI * k as f64 / g().l1()).powi(2) + (PI * m as f64 / g().l2()).powi(2);
            scaled.coeffs_mut()[idx] = s.coeffs()[idx] * w;
        }
        let want = inverse_transform(&scaled);
        assert!(got.max_abs_diff(&want).unwrap() < 1e-9 * want.linf());
    }

    #[test]
    fn multiplier_composition() {
        let f = random_field(3);
        let a = |l: f64| (-0.1 * l).exp();
        let b = |l: f64| l.sqrt();
        let two = apply_multiplier(&apply_multiplier(&f, a).unwrap(), b).unwrap();
        let one = apply_multiplier(&f, |l| a(l) * b(l)).unwrap();
        assert!(two.max_abs_diff(&one).unwrap() < 1e-12);
    }

    #[test]
    fn semigroup_law_and_contraction() {
        let f = random_field(4);
        let a = semigroup(&semigroup(&f, 0.3).unwrap(), 0.4).unwrap();
        let b = semigroup(&f, 0.7).unwrap();
        assert!(a.max_abs_diff(&b).unwrap() < 1e-12);
        assert_eq!(semigroup(&f, 0.0).unwrap().max_abs_diff(&f).unwrap() < 1e-14, true);
        assert!(semigroup(&f, -1.0).is_err());
        for &t in &[0.1, 0.5, 2.0] {
            let l2 = semigroup(&f, t).unwrap().l2();
            assert!(l2 <= (-t * g().lambda_min()).exp() * f.l2() * (1.0 + 1e-12));
        }
        let e = Field::from_fn(g(), |_, x2| x2.sin());
        let d = semigroup(&e, 0.7).unwrap();
        assert!(d.max_abs_diff(&e.scaled((-0.7f64).exp())).unwrap() < 1e-14);
        let h = heat_semigroup(&Field::from_fn(g(), |_, x2| (2.0 * x2).sin()), 0.5).unwrap();
        let want = Field::from_fn(g(), |_, x2| (-2.0f64).exp() * (2.0 * x2).sin());
        assert!(h.max_abs_diff(&want).unwrap() < 1e-14);
    }

    #[test]
    fn fractional_powers() {
        let f = random_field(5);
        assert!(frac_lambda(&f, 0.0).unwrap().max_abs_diff(&f).unwrap() < 1e-13);
        let back = frac_lambda(&frac_lambda(&f, 0.7).unwrap(), -0.7).unwrap();
        assert!(back.max_abs_diff(&f).unwrap() < 1e-10);
        let e = Field::from_fn(g(), |_, x2| x2.sin());
        assert!(frac_lambda(&e, 3.3).unwrap().max_abs_diff(&e).unwrap() < 1e-10);
        let e34 = Field::from_fn(g(), |x1, x2| (3.0 * x1).cos() * (4.0 * x2).sin());
        let got = frac_lambda(&e34, -1.0).unwrap();
        assert!(got.max_abs_diff(&e34.scaled(0.2)).unwrap() < 1e-14);
    }

    #[test]
    fn velocity_single_modes() {
        let theta = Field::from_fn(g(), |_, x2| x2.sin());
        let (u1, u2) = velocity(&theta).unwrap();
        let want = Field::from_fn(g(), |_, x2| -x2.cos());
        assert!(u1.max_abs_diff(&want).unwrap() < 1e-14);
        assert!(u2.linf() < 1e-15);

        let theta = Field::from_fn(g(), |x1, x2| x1.sin() * x2.sin());
        let (u1, u2) = velocity(&theta).unwrap();
        let w1 = Field::from_fn(g(), |x1, x2| -x1.sin() * x2.cos() / SQRT_2);
        let w2 = Field::from_fn(g(), |x1, x2| x1.cos() * x2.sin() / SQRT_2);
        assert!(u1.max_abs_diff(&w1).unwrap() < 1e-14);
        assert!(u2.max_abs_diff(&w2).unwrap() < 1e-14);
    }

    #[test]
    fn velocity_parity_and_divergence() {
        let theta = forward_transform(&random_field(6)).unwrap().dealiased();
        let theta = inverse_transform(&theta);
        let (u1, u2) = velocity_extended(&theta).unwrap();
        let scale = theta.linf();
        assert!(u1.even_defect() < 1e-12 * scale);
        assert!(u2.odd_defect() < 1e-12 * scale);
        assert!(u2.trace().iter().all(|v| v.abs() < 1e-10 * scale));

        // u1 is even, so differentiate on the doubled grid directly
        let hat1 = crate::transform::doubled_forward(&g(), u1.values());
        let hat2 = crate::transform::doubled_forward(&g(), u2.values());
        let k = DoubledWavenumbers::new(&g());
        let m2 = g().doubled_n2();
        let div: Vec<Complex64> = hat1
            .iter()
            .zip(&hat2)
            .enumerate()
            .map(|(idx, (a, b))| {
                let (kk, l) = (idx / m2, idx % m2);
                a * k.derivative_symbol(kk, l, 1, 0) + b * k.derivative_symbol(kk, l, 0, 1)
            })
            .collect();
        let div = doubled_inverse(&g(), div);
        let worst = div.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(worst <= 1e-10 * scale, "divergence {worst}");
    }

    #[test]
    fn derivative_parity() {
        let f = Field::from_fn(g(), |x1, x2| x1.cos() * (2.0 * x2).sin());
        let d2 = derivative(&f, 0, 1).unwrap();
        let h = g().dx2();
        // d2 f = 2 cos(x1) cos(2 x2), even with trace 2 cos(x1)
        for i in [0usize, 7, 20] {
            let x1 = g().x1(i);
            for j in -5i64..=5 {
                let want = 2.0 * x1.cos() * (2.0 * j as f64 * h).cos();
                assert!((d2.at(i, j) - want).abs() < 1e-12);
            }
        }
        let d11 = derivative(&f, 2, 0).unwrap();
        assert!(d11.odd_defect() < 1e-13);
        assert!(restrict(&d11).max_abs_diff(&f.scaled(-1.0)).unwrap() < 1e-12);
    }

    #[test]
    fn besov_single_eigenfunction() {
        let p = DyadicPartition::covering(&g());
        let e = Field::from_fn(g(), |_, x2| x2.sin());
        let n = besov_norm(&e, &BesovParams::inf_one(0.0), &p).unwrap();
        assert!((n - e.linf()).abs() < 1e-14);
        assert_eq!(besov_norm(&Field::zeros(g()), &BesovParams::inf_one(1.0), &p).unwrap(), 0.0);
    }

    #[test]
    fn besov_two_eigenfunctions_enumeration() {
        let p = DyadicPartition::covering(&g());
        let f1 = Field::from_fn(g(), |_, x2| x2.sin());
        let f8 = Field::from_fn(g(), |_, x2| (8.0 * x2).sin());
        let f = f1.add(&f8).unwrap();
        let got = besov_norm(&f, &BesovParams::inf_one(1.0), &p).unwrap();
        // blocks of the two shells never overlap, so each block is a
        // multiple of one eigenfunction
        let mut want = 0.0;
        for j in -2..=5 {
            let a = DyadicPartition::phi(j, 1.0);
            let b = DyadicPartition::phi(j, 8.0);
            assert!(a == 0.0 || b == 0.0);
            want += 2f64.powi(j) * (a * f1.linf() + b * f8.linf());
        }
        assert!((got - want).abs() < 1e-13 * want);
        assert!((got - 9.0).abs() < 1e-12);
    }

    #[test]
    fn besov_parameters() {
        assert!(Exponent::from_f64(3.0).is_err());
        let p = DyadicPartition::covering(&g());
        let f = random_field(7);
        let inhom = BesovParams {
            s: 0.5,
            p: Exponent::Two,
            q: Exponent::Two,
            homogeneous: false,
        };
        let v = besov_norm(&f, &inhom, &p).unwrap();
        assert!(v.is_finite() && v > 0.0);
        let sup = BesovParams {
            s: 0.0,
            p: Exponent::Infinity,
            q: Exponent::Infinity,
            homogeneous: true,
        };
        let b_inf = besov_norm(&f, &sup, &p).unwrap();
        let b_one = besov_norm(&f, &BesovParams::inf_one(0.0), &p).unwrap();
        assert!(b_inf <= b_one);
    }

    #[test]
    fn resolution_of_identity() {
        let p = DyadicPartition::covering(&g());
        let f = random_field(8);
        let mut acc = Field::zeros(g());
        for j in p.indices() {
            acc = acc.add(&lp_block(&f, j, &p).unwrap()).unwrap();
        }
        assert!(acc.max_abs_diff(&f).unwrap() < 1e-10);
        assert!(lp_block(&f, p.j_max() + 1, &p).is_err());
        let low = low_block(&f).unwrap();
        let mut acc = low;
        for j in 1..=p.j_max() {
            acc = acc.add(&lp_block(&f, j, &p).unwrap()).unwrap();
        }
        assert!(acc.max_abs_diff(&f).unwrap() < 1e-10);
    }

    #[test]
    fn block_operator_norm_is_bounded() {
        let p = DyadicPartition::covering(&g());
        let samples: Vec<Field> = (0..8).map(|s| random_field(100 + s)).collect();
        let c = block_operator_norm_estimate(&samples, &p).unwrap();
        assert!(c > 0.0 && c <= 10.0, "observed {c}");
    }

    #[test]
    fn lift_property_for_eigenfunction() {
        let p = DyadicPartition::covering(&g());
        let e = Field::from_fn(g(), |x1, x2| (3.0 * x1).cos() * (4.0 * x2).sin());
        for &sigma in &[-1.0, 0.5, 1.0] {
            let lifted = frac_lambda(&e, sigma).unwrap();
            let a = besov_norm(&lifted, &BesovParams::inf_one(0.5), &p).unwrap();
            let b = besov_norm(&e, &BesovParams::inf_one(0.5 + sigma), &p).unwrap();
            let r = a / b;
            let bound = 2f64.powf(f64::abs(sigma));
            assert!(r >= 1.0 / bound - 1e-12 && r <= bound + 1e-12, "ratio {r}");
        }
    }
}
