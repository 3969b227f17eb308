//! The transport nonlinearity `(u . grad) theta` and its bilinear form
//! `B(f, g) = (grad^perp Lambda_D^{-1} f . grad) g`.
//!
//! Both operands are reflected oddly across `x2 = 0`, truncated to the
//! dealiased band, differentiated with whole-plane multipliers and
//! multiplied pointwise on the doubled grid. The product is odd again, so
//! its sine coefficients are read back directly and truncated once more.

use num_complex::Complex64;

use crate::calculus::DoubledWavenumbers;
use crate::error::Result;
use crate::grid::{restrict, ExtendedField, Field};
use crate::transform::{doubled_forward, doubled_inverse, forward_transform, Spectrum};

/// Pointwise `u(f) . grad g` on the doubled grid, before any output
/// truncation.
fn raw_product(f: &Spectrum, g: Option<&Spectrum>) -> Result<Vec<f64>> {
    let grid = *f.grid();
    if let Some(g) = g {
        grid.check_same(g.grid())?;
    }
    let k = DoubledWavenumbers::new(&grid);
    let fh = f.dealiased().to_doubled_hat();
    let gh = match g {
        Some(g) => g.dealiased().to_doubled_hat(),
        None => fh.clone(),
    };
    let m2 = grid.doubled_n2();
    let zero = Complex64::new(0.0, 0.0);
    let mut hats = [fh.clone(), fh, gh.clone(), gh];
    for kk in 0..grid.n1() {
        // odd derivatives of the Nyquist rows and columns vanish
        let a = if kk == k.nyq1 { 0.0 } else { k.xi1[kk] };
        for l in 0..m2 {
            let b = if l == k.nyq2 { 0.0 } else { k.xi2[l] };
            let norm = (k.xi1[kk] * k.xi1[kk] + k.xi2[l] * k.xi2[l]).sqrt();
            let idx = kk * m2 + l;
            let (fv, gv) = (hats[0][idx], hats[2][idx]);
            if norm == 0.0 {
                hats[0][idx] = zero;
                hats[1][idx] = zero;
            } else {
                // u = (-d2, d1) / |xi|
                hats[0][idx] = fv * Complex64::new(0.0, -b / norm);
                hats[1][idx] = fv * Complex64::new(0.0, a / norm);
            }
            hats[2][idx] = gv * Complex64::new(0.0, a);
            hats[3][idx] = gv * Complex64::new(0.0, b);
        }
    }
    let [u1, u2, g1, g2] = hats.map(|h| doubled_inverse(&grid, h));
    Ok(u1
        .iter()
        .zip(&u2)
        .zip(g1.iter().zip(&g2))
        .map(|((a1, a2), (b1, b2))| a1 * b1 + a2 * b2)
        .collect())
}

fn project(f: &Spectrum, real: bool, product: &[f64]) -> Spectrum {
    let grid = *f.grid();
    let hat = doubled_forward(&grid, product);
    Spectrum::from_doubled_hat(grid, &hat, real).dealiased()
}

/// `B(f, g)` in coefficient space.
pub fn bilinear_spectrum(f: &Spectrum, g: &Spectrum) -> Result<Spectrum> {
    let product = raw_product(f, Some(g))?;
    Ok(project(f, f.is_real() && g.is_real(), &product))
}

pub fn bilinear(f: &Field, g: &Field) -> Result<Field> {
    let s = bilinear_spectrum(&forward_transform(f)?, &forward_transform(g)?)?;
    Ok(crate::transform::inverse_transform(&s))
}

/// `N(theta) = B(theta, theta)` in coefficient space.
pub fn nonlinear_spectrum(theta: &Spectrum) -> Spectrum {
    let product = raw_product(theta, None).expect("single operand cannot mismatch");
    project(theta, theta.is_real(), &product)
}

/// `(u . grad) theta` with `u = grad^perp Lambda_D^{-1} theta`, dealiased.
pub fn nonlinear_term(theta: &Field) -> Result<Field> {
    let s = nonlinear_spectrum(&forward_transform(theta)?);
    Ok(crate::transform::inverse_transform(&s))
}

/// The pointwise product `u1 d1 theta + u2 d2 theta` on the doubled grid,
/// before the output projection. Its trace row and parity defect measure
/// whether the physical-space product respects the Dirichlet condition.
pub fn nonlinear_term_extended(theta: &Field) -> Result<ExtendedField> {
    let s = forward_transform(theta)?;
    let product = raw_product(&s, None)?;
    Ok(ExtendedField::from_raw(*theta.grid(), product))
}

/// Restriction of [`nonlinear_term_extended`], without truncation.
pub fn nonlinear_term_raw(theta: &Field) -> Result<Field> {
    Ok(restrict(&nonlinear_term_extended(theta)?))
}
