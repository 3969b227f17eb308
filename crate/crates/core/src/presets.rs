//! Library of initial data. Every preset is projected onto the dealiased
//! band, so it vanishes on `x2 = 0` and is resolved by the solver.

use std::f64::consts::PI;

use log::warn;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{invalid, Error, Result};
use crate::grid::{Field, GridSpec};
use crate::transform::{forward_transform, inverse_transform, Spectrum};

#[derive(Clone, Debug, PartialEq)]
pub enum Preset {
    /// `A cos(2 pi k x1 / L1) sin(pi m x2 / L2)`.
    SingleMode { k: i64, m: usize, amplitude: f64 },
    /// `A (sin(2 pi x1 / L1) sin(pi x2 / L2) + sin(2 pi x2 / L2))`.
    TwoMode { amplitude: f64 },
    /// Smooth bump centred at `(x0, 0)` times `x2 / width`.
    BoundaryBump { x0: f64, width: f64, amplitude: f64 },
    InteriorBump { x0: f64, y0: f64, width: f64, amplitude: f64 },
    /// Random coefficients in the spectral band `[2^j_lo, 2^j_hi)`, one
    /// independently normalized component per octave, scaled to sup `A`.
    RandomBand { j_lo: i32, j_hi: i32, amplitude: f64, seed: u64 },
}

pub const PRESET_NAMES: [&str; 5] = ["single_mode", "two_mode", "boundary_bump", "interior_bump", "random_band"];

impl Preset {
    pub fn name(&self) -> &'static str {
        match self {
            Preset::SingleMode { .. } => "single_mode",
            Preset::TwoMode { .. } => "two_mode",
            Preset::BoundaryBump { .. } => "boundary_bump",
            Preset::InteriorBump { .. } => "interior_bump",
            Preset::RandomBand { .. } => "random_band",
        }
    }

    pub fn build(&self, grid: &GridSpec) -> Result<Field> {
        let raw = match *self {
            Preset::SingleMode { k, m, amplitude } => {
                if m == 0 || !grid.is_resolved(k, m as i64) {
                    return Err(invalid(format!("mode ({k}, {m}) is outside the resolved band")));
                }
                let (a, b) = (2.0 * PI * k as f64 / grid.l1(), PI * m as f64 / grid.l2());
                Field::from_fn(*grid, |x1, x2| amplitude * (a * x1).cos() * (b * x2).sin())
            }
            Preset::TwoMode { amplitude } => {
                let (a, b) = (2.0 * PI / grid.l1(), PI / grid.l2());
                Field::from_fn(*grid, |x1, x2| amplitude * ((a * x1).sin() * (b * x2).sin() + (2.0 * b * x2).sin()))
            }
            Preset::BoundaryBump { x0, width, amplitude } => {
                check_width(grid, width)?;
                if width > grid.l2() {
                    return Err(invalid("boundary bump is wider than the strip"));
                }
                Field::from_fn(*grid, |x1, x2| {
                    let r = x2 / width;
                    amplitude * bump(periodic_distance(x1, x0, grid.l1()) / width) * bump(r) * r
                })
            }
            Preset::InteriorBump { x0, y0, width, amplitude } => {
                check_width(grid, width)?;
                if y0 - width < 0.0 || y0 + width > grid.l2() {
                    return Err(invalid(format!(
                        "interior bump support [{}, {}] leaves the strip (0, {})",
                        y0 - width,
                        y0 + width,
                        grid.l2()
                    )));
                }
                Field::from_fn(*grid, |x1, x2| {
                    amplitude * bump(periodic_distance(x1, x0, grid.l1()) / width) * bump((x2 - y0) / width)
                })
            }
            Preset::RandomBand { j_lo, j_hi, amplitude, seed } => return random_band(grid, j_lo, j_hi, amplitude, seed),
        };
        Ok(inverse_transform(&forward_transform(&raw)?.dealiased()))
    }
}

pub fn preset(grid: &GridSpec, preset: &Preset) -> Result<Field> {
    preset.build(grid)
}

/// Rejects names outside [`PRESET_NAMES`].
pub fn check_preset_name(name: &str) -> Result<()> {
    if PRESET_NAMES.contains(&name) {
        Ok(())
    } else {
        Err(Error::UnknownPreset(name.to_string()))
    }
}

fn check_width(grid: &GridSpec, width: f64) -> Result<()> {
    if !(width > 0.0 && width <= 0.5 * grid.l1()) {
        return Err(invalid(format!("bump width {width} must lie in (0, L1/2]")));
    }
    Ok(())
}

/// `exp(1 - 1 / (1 - r^2))` on `|r| < 1`, with peak value 1.
fn bump(r: f64) -> f64 {
    if r.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - r * r)).exp()
    }
}

fn periodic_distance(x: f64, x0: f64, period: f64) -> f64 {
    let d = (x - x0).rem_euclid(period);
    d.min(period - d)
}

fn random_band(grid: &GridSpec, j_lo: i32, j_hi: i32, amplitude: f64, seed: u64) -> Result<Field> {
    if j_lo >= j_hi {
        return Err(invalid(format!("random band needs j_lo < j_hi, got {j_lo} and {j_hi}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut total = Field::zeros(*grid);
    for j in j_lo..j_hi {
        let (lo, hi) = (2f64.powi(j), 2f64.powi(j + 1));
        let mut s = Spectrum::zeros(*grid);
        let mut any = false;
        for (_, k, m, lambda) in s.clone().modes() {
            if k < 0 || lambda < lo || lambda >= hi || !grid.is_resolved(k, m) {
                continue;
            }
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            let c = if k == 0 { Complex64::new(re, 0.0) } else { Complex64::new(re, im) };
            s.set(k, m as usize, c)?;
            if k > 0 {
                s.set(-k, m as usize, c.conj())?;
            }
            any = true;
        }
        if !any {
            warn!("random band octave {j} holds no resolved modes");
            continue;
        }
        s.refresh_reality();
        let part = inverse_transform(&s);
        total = total.combine(1.0, &part, 1.0 / part.linf())?;
    }
    let sup = total.linf();
    if sup == 0.0 {
        return Err(invalid(format!("random band [2^{j_lo}, 2^{j_hi}) holds no resolved modes")));
    }
    Ok(total.scaled(amplitude / sup))
}
