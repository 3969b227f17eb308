//! Time integration of `theta_t + (u . grad) theta + Lambda_D theta = 0`.
//!
//! Production stepping uses exponential integrators that apply
//! `exp(-dt Lambda_D)` exactly in coefficient space. The mild formulation
//! and its Picard map live here too, as a verification device.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use log::warn;

use crate::calculus::{block_norms_spectrum, DyadicPartition, Exponent};
use crate::error::{invalid, Error, Result};
use crate::grid::{Field, GridSpec};
use crate::harness::holder_seminorm;
use crate::nonlinear::nonlinear_spectrum;
use crate::transform::{forward_transform, inverse_transform, mode_table, Spectrum};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheme {
    IntegratingFactorRk4,
    EtdRk2,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::IntegratingFactorRk4 => "integrating_factor_rk4",
            Scheme::EtdRk2 => "etd_rk2",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "integrating_factor_rk4" | "if_rk4" => Ok(Scheme::IntegratingFactorRk4),
            "etd_rk2" => Ok(Scheme::EtdRk2),
            other => Err(invalid(format!("unknown scheme `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    pub dt: f64,
    pub t_end: f64,
    pub scheme: Scheme,
    pub snapshot_stride: usize,
    pub picard_max_iter: usize,
    pub picard_tol: f64,
    /// Trapezoid nodes per stored interval in the Duhamel integral.
    pub quadrature_nodes: usize,
    /// Exponent of the Hölder seminorm recorded in the diagnostics.
    pub holder_exponent: f64,
    pub holder_pairs: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            t_end: 1.0,
            scheme: Scheme::IntegratingFactorRk4,
            snapshot_stride: 10,
            picard_max_iter: 50,
            picard_tol: 1e-10,
            quadrature_nodes: 4,
            holder_exponent: 0.25,
            holder_pairs: 4096,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(invalid(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end.is_finite() && self.dt < self.t_end) {
            return Err(invalid(format!("need dt < t_end, got dt = {} and t_end = {}", self.dt, self.t_end)));
        }
        if self.snapshot_stride == 0 {
            return Err(invalid("snapshot_stride must be at least 1"));
        }
        if !(self.picard_tol > 0.0) {
            return Err(invalid("picard_tol must be positive"));
        }
        if self.quadrature_nodes < 2 {
            return Err(invalid("quadrature_nodes must be at least 2"));
        }
        if !(self.holder_exponent > 0.0 && self.holder_exponent <= 1.0) {
            return Err(invalid("holder exponent must lie in (0, 1]"));
        }
        if self.holder_pairs == 0 {
            return Err(invalid("holder_pairs must be at least 1"));
        }
        Ok(())
    }
}

/// Scalar diagnostics of one snapshot.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Diagnostics {
    pub t: f64,
    pub linf: f64,
    pub l2: f64,
    pub besov0: f64,
    pub besov1: f64,
    pub holder: f64,
    /// `linf` did not exceed the previous snapshot's value by more than a
    /// relative `1e-6`.
    pub max_principle_ok: bool,
}

const MAX_PRINCIPLE_SLACK: f64 = 1e-6;

impl Diagnostics {
    pub fn compute(t: f64, field: &Field, previous_linf: Option<f64>, cfg: &SolverConfig) -> Result<Self> {
        let s = forward_transform(field)?;
        Ok(Self::from_parts(t, field, &s, previous_linf, cfg))
    }

    fn from_parts(t: f64, field: &Field, s: &Spectrum, previous_linf: Option<f64>, cfg: &SolverConfig) -> Self {
        let partition = DyadicPartition::covering(field.grid());
        let blocks = block_norms_spectrum(s, Exponent::Infinity, &partition);
        let linf = field.linf();
        Diagnostics {
            t,
            linf,
            l2: field.l2(),
            besov0: blocks.besov(0.0, Exponent::One, true),
            besov1: blocks.besov(1.0, Exponent::One, true),
            holder: holder_seminorm(field, cfg.holder_exponent, cfg.holder_pairs),
            max_principle_ok: previous_linf.is_none_or(|p| linf <= p * (1.0 + MAX_PRINCIPLE_SLACK)),
        }
    }
}

/// Time-stamped states on a common grid.
#[derive(Clone, Debug, Default)]
pub struct Trajectory {
    times: Vec<f64>,
    states: Vec<Field>,
    diagnostics: Vec<Diagnostics>,
}

impl Trajectory {
    pub fn new() -> Self {
        Self::default()
    }

    /// A trajectory holding `field` at every stamp in `times`.
    pub fn constant(field: &Field, times: &[f64]) -> Result<Self> {
        let mut traj = Self::new();
        for &t in times {
            traj.push(t, field.clone())?;
        }
        Ok(traj)
    }

    pub fn push(&mut self, t: f64, state: Field) -> Result<()> {
        if !t.is_finite() {
            return Err(invalid("trajectory time must be finite"));
        }
        if let Some(&last) = self.times.last() {
            if t <= last {
                return Err(invalid(format!("trajectory times must increase: {t} after {last}")));
            }
            self.states[0].grid().check_same(state.grid())?;
        }
        self.times.push(t);
        self.states.push(state);
        Ok(())
    }

    pub(crate) fn push_with_diagnostics(&mut self, t: f64, state: Field, diagnostics: Diagnostics) -> Result<()> {
        self.push(t, state)?;
        self.diagnostics.push(diagnostics);
        Ok(())
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[Field] {
        &self.states
    }

    /// Per-snapshot diagnostics; empty for trajectories assembled by hand.
    pub fn diagnostics(&self) -> &[Diagnostics] {
        &self.diagnostics
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn grid(&self) -> Option<&GridSpec> {
        self.states.first().map(Field::grid)
    }

    pub fn last(&self) -> Option<(f64, &Field)> {
        self.times.last().map(|&t| (t, self.states.last().unwrap()))
    }

    /// Index of the stamp within `1e-9` relative of `t`.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        let tol = 1e-9 * t.abs().max(1.0);
        self.times.iter().position(|&s| (s - t).abs() <= tol)
    }

    pub fn state_at(&self, t: f64) -> Option<&Field> {
        self.index_of(t).map(|i| &self.states[i])
    }
}

fn scaled(s: &Spectrum, factor: &[f64]) -> Spectrum {
    let mut out = s.clone();
    for (c, f) in out.coeffs_mut().iter_mut().zip(factor) {
        *c *= f;
    }
    out
}

/// `acc += a * factor * x` per mode.
fn add_scaled(acc: &mut Spectrum, a: f64, factor: &[f64], x: &Spectrum) {
    for ((c, f), v) in acc.coeffs_mut().iter_mut().zip(factor).zip(x.coeffs()) {
        *c += v * (a * f);
    }
}

fn axpy(acc: &mut Spectrum, a: f64, x: &Spectrum) {
    for (c, v) in acc.coeffs_mut().iter_mut().zip(x.coeffs()) {
        *c += v * a;
    }
}

fn lambdas(grid: &GridSpec) -> Vec<f64> {
    let mut out = vec![0.0; grid.len()];
    for (idx, _, _, lambda) in mode_table(grid) {
        out[idx] = lambda;
    }
    out
}

/// `(e^z - 1) / z`.
fn phi1(z: f64) -> f64 {
    if z.abs() < 0.5 {
        taylor_phi(z, 1)
    } else {
        z.exp_m1() / z
    }
}

/// `(e^z - 1 - z) / z^2`.
fn phi2(z: f64) -> f64 {
    if z.abs() < 0.5 {
        taylor_phi(z, 2)
    } else {
        (z.exp_m1() - z) / (z * z)
    }
}

/// `sum_n z^n / (n + shift)!`.
fn taylor_phi(z: f64, shift: u32) -> f64 {
    let mut term = (1..=shift).fold(1.0, |acc, n| acc / n as f64);
    let mut sum = 0.0;
    for n in 0..24 {
        sum += term;
        term *= z / (n + 1 + shift) as f64;
    }
    sum
}

struct Stepper {
    scheme: Scheme,
    dt: f64,
    full: Vec<f64>,
    half: Vec<f64>,
    phi1: Vec<f64>,
    phi2: Vec<f64>,
}

impl Stepper {
    fn new(grid: &GridSpec, scheme: Scheme, dt: f64) -> Self {
        let lambda = lambdas(grid);
        let full = lambda.iter().map(|l| (-dt * l).exp()).collect();
        let half = lambda.iter().map(|l| (-0.5 * dt * l).exp()).collect();
        let (phi1, phi2) = match scheme {
            Scheme::EtdRk2 => (
                lambda.iter().map(|l| phi1(-dt * l)).collect(),
                lambda.iter().map(|l| phi2(-dt * l)).collect(),
            ),
            Scheme::IntegratingFactorRk4 => (Vec::new(), Vec::new()),
        };
        Self {
            scheme,
            dt,
            full,
            half,
            phi1,
            phi2,
        }
    }

    fn step(&self, theta: &Spectrum) -> Spectrum {
        let dt = self.dt;
        // R = -N
        let rhs = |s: &Spectrum| nonlinear_spectrum(s);
        match self.scheme {
            Scheme::IntegratingFactorRk4 => {
                let k1 = rhs(theta);
                let mut a = theta.clone();
                axpy(&mut a, -0.5 * dt, &k1);
                let a = scaled(&a, &self.half);
                let k2 = rhs(&a);
                let mut b = scaled(theta, &self.half);
                axpy(&mut b, -0.5 * dt, &k2);
                let k3 = rhs(&b);
                let mut c = scaled(theta, &self.full);
                add_scaled(&mut c, -dt, &self.half, &k3);
                let k4 = rhs(&c);
                let mut out = scaled(theta, &self.full);
                add_scaled(&mut out, -dt / 6.0, &self.full, &k1);
                add_scaled(&mut out, -dt / 3.0, &self.half, &k2);
                add_scaled(&mut out, -dt / 3.0, &self.half, &k3);
                axpy(&mut out, -dt / 6.0, &k4);
                out
            }
            Scheme::EtdRk2 => {
                let n0 = rhs(theta);
                let mut a = scaled(theta, &self.full);
                add_scaled(&mut a, -dt, &self.phi1, &n0);
                let n1 = rhs(&a);
                let diff = n1.combine(1.0, &n0, -1.0).expect("same grid");
                add_scaled(&mut a, -dt, &self.phi2, &diff);
                a
            }
        }
    }
}

/// One step of the configured exponential integrator.
pub fn step_evolve(theta: &Field, dt: f64, cfg: &SolverConfig) -> Result<Field> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(invalid(format!("dt must be positive, got {dt}")));
    }
    theta.check_finite()?;
    let stepper = Stepper::new(theta.grid(), cfg.scheme, dt);
    let out = stepper.step(&forward_transform(theta)?);
    if !out.is_finite() {
        return Err(Error::NonFiniteStep { step: 1 });
    }
    Ok(inverse_transform(&out))
}

/// Step sizes landing exactly on `t_end`: full steps of `dt` and a final
/// shortened one when `t_end / dt` is not an integer.
fn step_plan(t_end: f64, dt: f64) -> (usize, f64) {
    let ratio = t_end / dt;
    let n = (ratio - 1e-9).ceil().max(1.0) as usize;
    let last = t_end - (n - 1) as f64 * dt;
    (n, last)
}

/// Integrates from 0 to `t_end` without recording snapshots.
pub fn integrate(theta0: &Field, t_end: f64, dt: f64, scheme: Scheme) -> Result<Field> {
    if !(dt > 0.0 && t_end >= 0.0) {
        return Err(invalid("integrate needs dt > 0 and t_end >= 0"));
    }
    theta0.check_finite()?;
    if t_end == 0.0 {
        return Ok(theta0.clone());
    }
    let grid = *theta0.grid();
    let (n, last) = step_plan(t_end, dt);
    let full = Stepper::new(&grid, scheme, dt);
    let tail = Stepper::new(&grid, scheme, last);
    let mut state = forward_transform(theta0)?;
    for step in 1..=n {
        state = if step == n { tail.step(&state) } else { full.step(&state) };
        if !state.is_finite() {
            return Err(Error::NonFiniteStep { step });
        }
    }
    Ok(inverse_transform(&state))
}

/// Integrates to `cfg.t_end`, recording the initial state and every
/// `snapshot_stride`-th step (always including the last) with diagnostics.
pub fn simulate(theta0: &Field, cfg: &SolverConfig) -> Result<Trajectory> {
    cfg.validate()?;
    theta0.check_finite()?;
    let grid = *theta0.grid();
    let (n, last) = step_plan(cfg.t_end, cfg.dt);
    let full = Stepper::new(&grid, cfg.scheme, cfg.dt);
    let tail = Stepper::new(&grid, cfg.scheme, last);

    let mut traj = Trajectory::new();
    let mut state = forward_transform(theta0)?;
    let d0 = Diagnostics::from_parts(0.0, theta0, &state, None, cfg);
    traj.push_with_diagnostics(0.0, theta0.clone(), d0)?;
    let mut previous = d0.linf;
    for step in 1..=n {
        state = if step == n { tail.step(&state) } else { full.step(&state) };
        if !state.is_finite() {
            return Err(Error::NonFiniteStep { step });
        }
        if step % cfg.snapshot_stride == 0 || step == n {
            let t = if step == n { cfg.t_end } else { step as f64 * cfg.dt };
            let field = inverse_transform(&state);
            let d = Diagnostics::from_parts(t, &field, &state, Some(previous), cfg);
            previous = d.linf;
            traj.push_with_diagnostics(t, field, d)?;
        }
    }
    Ok(traj)
}

/// Per-mode weights of one Duhamel interval of length `h_int`, evaluated
/// `h_eval <= h_int` into it: the forcing is interpolated linearly between
/// the stamps and the semigroup factor is exact at each trapezoid node.
struct IntervalWeights {
    decay: Vec<f64>,
    alpha: Vec<f64>,
    beta: Vec<f64>,
}

impl IntervalWeights {
    fn new(lambda: &[f64], h_int: f64, h_eval: f64, nodes: usize) -> Self {
        let q = nodes.max(2);
        let step = h_eval / (q - 1) as f64;
        let mut decay = Vec::with_capacity(lambda.len());
        let mut alpha = Vec::with_capacity(lambda.len());
        let mut beta = Vec::with_capacity(lambda.len());
        for &l in lambda {
            let (mut a, mut b) = (0.0, 0.0);
            for r in 0..q {
                let s = r as f64 * step;
                let w = if r == 0 || r == q - 1 { 0.5 * step } else { step };
                let e = (-(h_eval - s) * l).exp();
                let frac = s / h_int;
                a += w * e * (1.0 - frac);
                b += w * e * frac;
            }
            decay.push((-h_eval * l).exp());
            alpha.push(a);
            beta.push(b);
        }
        Self { decay, alpha, beta }
    }
}

struct WeightCache<'a> {
    lambda: &'a [f64],
    nodes: usize,
    cache: HashMap<(u64, u64), IntervalWeights>,
}

impl<'a> WeightCache<'a> {
    fn new(lambda: &'a [f64], nodes: usize) -> Self {
        Self {
            lambda,
            nodes,
            cache: HashMap::new(),
        }
    }

    fn get(&mut self, h_int: f64, h_eval: f64) -> &IntervalWeights {
        let (lambda, nodes) = (self.lambda, self.nodes);
        self.cache
            .entry((h_int.to_bits(), h_eval.to_bits()))
            .or_insert_with(|| IntervalWeights::new(lambda, h_int, h_eval, nodes))
    }
}

/// `I_{k+1} = decay * I_k + alpha * F_k + beta * F_{k+1}`.
fn advance(acc: &Spectrum, w: &IntervalWeights, f0: &Spectrum, f1: &Spectrum) -> Spectrum {
    let mut out = scaled(acc, &w.decay);
    add_scaled(&mut out, 1.0, &w.alpha, f0);
    add_scaled(&mut out, 1.0, &w.beta, f1);
    out
}

fn check_stamps(times: &[f64], forcing: &[Spectrum]) -> Result<()> {
    if times.is_empty() || times.len() != forcing.len() {
        return Err(invalid("forcing needs one spectrum per stamp and at least one stamp"));
    }
    if times[0].abs() > 1e-14 {
        return Err(invalid("forcing must start at t = 0"));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("stamps must increase"));
    }
    let grid = forcing[0].grid();
    forcing.iter().try_for_each(|f| grid.check_same(f.grid()))
}

/// `int_0^{t_k} exp(-(t_k - tau) Lambda_D) F(tau) dtau` at every stamp.
pub fn duhamel_series(times: &[f64], forcing: &[Spectrum], nodes: usize) -> Result<Vec<Spectrum>> {
    check_stamps(times, forcing)?;
    let lambda = lambdas(forcing[0].grid());
    let mut cache = WeightCache::new(&lambda, nodes);
    let mut out = Vec::with_capacity(times.len());
    out.push(Spectrum::zeros(*forcing[0].grid()));
    for k in 0..times.len() - 1 {
        let h = times[k + 1] - times[k];
        let next = advance(&out[k], cache.get(h, h), &forcing[k], &forcing[k + 1]);
        out.push(next);
    }
    Ok(out)
}

/// The same integral at an arbitrary `t` inside the stamps.
pub fn duhamel_at(times: &[f64], forcing: &[Spectrum], t: f64, nodes: usize) -> Result<Spectrum> {
    check_stamps(times, forcing)?;
    let end = *times.last().unwrap();
    let tol = 1e-12 * end.abs().max(1.0);
    if !(t >= -tol && t <= end + tol) {
        return Err(Error::OutOfSpan { t, start: times[0], end });
    }
    let lambda = lambdas(forcing[0].grid());
    let mut cache = WeightCache::new(&lambda, nodes);
    let mut acc = Spectrum::zeros(*forcing[0].grid());
    for k in 0..times.len() - 1 {
        if times[k] >= t - tol {
            break;
        }
        let h = times[k + 1] - times[k];
        let h_eval = (t - times[k]).min(h);
        acc = advance(&acc, cache.get(h, h_eval), &forcing[k], &forcing[k + 1]);
    }
    Ok(acc)
}

/// `Psi(theta)(t) = exp(-t Lambda_D) theta0 - int_0^t exp(-(t - tau) Lambda_D) N(theta(tau)) dtau`
/// with `theta` read from `traj`, which must start at `t = 0`.
pub fn mild_rhs(theta0: &Field, traj: &Trajectory, t: f64, nodes: usize) -> Result<Field> {
    let (start, end) = match (traj.times().first(), traj.times().last()) {
        (Some(&a), Some(&b)) => (a, b),
        _ => return Err(Error::OutOfSpan { t, start: f64::NAN, end: f64::NAN }),
    };
    if start.abs() > 1e-14 || t < 0.0 || t > end * (1.0 + 1e-12) {
        return Err(Error::OutOfSpan { t, start, end });
    }
    theta0.grid().check_same(traj.grid().unwrap())?;
    let forcing: Vec<Spectrum> = traj
        .states()
        .iter()
        .map(|s| forward_transform(s).map(|s| nonlinear_spectrum(&s)))
        .collect::<Result<_>>()?;
    let integral = duhamel_at(traj.times(), &forcing, t, nodes)?;
    let lambda = lambdas(theta0.grid());
    let decay: Vec<f64> = lambda.iter().map(|l| (-t * l).exp()).collect();
    let mut out = scaled(&forward_transform(theta0)?, &decay);
    axpy(&mut out, -1.0, &integral);
    Ok(inverse_transform(&out))
}

/// The mild-solution metric `sup_t |a - b|_{B^0_{inf,1}} + int |a - b|_{B^1_{inf,1}} dt`,
/// with the time integral by the trapezoid rule over the stamps.
pub fn mild_distance(times: &[f64], a: &[Spectrum], b: &[Spectrum]) -> Result<f64> {
    if a.len() != times.len() || b.len() != times.len() || times.is_empty() {
        return Err(invalid("distance needs one spectrum per stamp"));
    }
    let partition = DyadicPartition::covering(a[0].grid());
    let mut sup: f64 = 0.0;
    let mut integrand = Vec::with_capacity(times.len());
    for (x, y) in a.iter().zip(b) {
        let d = x.combine(1.0, y, -1.0)?;
        let blocks = block_norms_spectrum(&d, Exponent::Infinity, &partition);
        sup = sup.max(blocks.besov(0.0, Exponent::One, true));
        integrand.push(blocks.besov(1.0, Exponent::One, true));
    }
    Ok(sup + trapezoid(times, &integrand))
}

pub(crate) fn trapezoid(times: &[f64], values: &[f64]) -> f64 {
    times
        .windows(2)
        .zip(values.windows(2))
        .map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1]))
        .sum()
}

/// Result of [`picard_solve`].
#[derive(Clone, Debug)]
pub struct PicardOutcome {
    pub trajectory: Trajectory,
    pub iterations: usize,
    /// `d_n / d_{n-1}` for consecutive iterates.
    pub contraction_history: Vec<f64>,
    /// `d(theta^{n}, theta^{n-1})` per iteration.
    pub distances: Vec<f64>,
    pub converged: bool,
    /// `sup_t |Psi(theta) - theta|_{B^0_{inf,1}}` for the returned iterate.
    pub residual: f64,
}

const SMALLNESS_WARNING: f64 = 0.1;

/// Iterates the Duhamel map from the free evolution on uniform stamps of
/// spacing close to `cfg.dt` until consecutive iterates are within
/// `cfg.picard_tol` in the mild metric. Failing to converge is reported
/// through [`PicardOutcome::converged`], not as an error.
pub fn picard_solve(theta0: &Field, t_end: f64, cfg: &SolverConfig) -> Result<PicardOutcome> {
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(invalid(format!("picard horizon must be positive, got {t_end}")));
    }
    if !(cfg.dt > 0.0) || cfg.quadrature_nodes < 2 || !(cfg.picard_tol > 0.0) || cfg.picard_max_iter == 0 {
        return Err(invalid("picard needs dt > 0, quadrature_nodes >= 2, picard_tol > 0, picard_max_iter >= 1"));
    }
    theta0.check_finite()?;
    let grid = *theta0.grid();
    let partition = DyadicPartition::covering(&grid);
    let s0 = forward_transform(theta0)?;
    let size = block_norms_spectrum(&s0, Exponent::Infinity, &partition).besov(0.0, Exponent::One, true);
    if size > SMALLNESS_WARNING {
        warn!("initial data has B^0_inf,1 norm {size:.3e} > {SMALLNESS_WARNING}; the contraction may fail");
    }

    let n = ((t_end / cfg.dt).round() as usize).max(1);
    let h = t_end / n as f64;
    let times: Vec<f64> = (0..=n).map(|k| if k == n { t_end } else { k as f64 * h }).collect();
    let lambda = lambdas(&grid);
    let linear: Vec<Spectrum> = times
        .iter()
        .map(|&t| {
            let decay: Vec<f64> = lambda.iter().map(|l| (-t * l).exp()).collect();
            scaled(&s0, &decay)
        })
        .collect();

    let psi = |current: &[Spectrum]| -> Result<Vec<Spectrum>> {
        let forcing: Vec<Spectrum> = current.iter().map(nonlinear_spectrum).collect();
        let integral = duhamel_series(&times, &forcing, cfg.quadrature_nodes)?;
        Ok(linear
            .iter()
            .zip(&integral)
            .map(|(l, i)| l.combine(1.0, i, -1.0).expect("same grid"))
            .collect())
    };

    let mut current = linear.clone();
    let mut distances = Vec::new();
    let mut ratios = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    for it in 1..=cfg.picard_max_iter {
        iterations = it;
        let next = psi(&current)?;
        if next.iter().any(|s| !s.is_finite()) {
            warn!("picard iterate {it} became non-finite");
            break;
        }
        let d = mild_distance(&times, &next, &current)?;
        if let Some(&prev) = distances.last() {
            ratios.push(d / prev);
        }
        distances.push(d);
        current = next;
        if d <= cfg.picard_tol {
            converged = true;
            break;
        }
    }
    if !converged {
        warn!("picard iteration did not reach {:.1e} in {iterations} iterations", cfg.picard_tol);
    }

    let residual = if current.iter().all(Spectrum::is_finite) {
        let image = psi(&current)?;
        image
            .iter()
            .zip(&current)
            .map(|(a, b)| {
                let d = a.combine(1.0, b, -1.0).expect("same grid");
                block_norms_spectrum(&d, Exponent::Infinity, &partition).besov(0.0, Exponent::One, true)
            })
            .fold(0.0, f64::max)
    } else {
        f64::INFINITY
    };

    let mut trajectory = Trajectory::new();
    let mut previous = None;
    for (t, s) in times.iter().zip(&current) {
        let field = inverse_transform(s);
        let d = Diagnostics::from_parts(*t, &field, s, previous, cfg);
        previous = Some(d.linf);
        trajectory.push_with_diagnostics(*t, field, d)?;
    }
    Ok(PicardOutcome {
        trajectory,
        iterations,
        contraction_history: ratios,
        distances,
        converged,
        residual,
    })
}
