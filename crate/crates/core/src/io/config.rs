//! Plain `key = value` run configuration.
//!
//! Blank lines and text after `#` are ignored. Every key has a default, so
//! an empty file is a valid configuration. Command-line overrides use the
//! same syntax and replace file values.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::presets::{check_preset_name, Preset};
use crate::solver::{Scheme, SolverConfig};

/// Every accepted key with its default and a one-line description.
pub const KEYS: &[(&str, &str, &str)] = &[
    ("grid.n1", "64", "samples along x1 (even)"),
    ("grid.n2", "63", "interior samples along x2"),
    ("grid.L1", "2pi", "period in x1; a trailing `pi` multiplies by pi"),
    ("grid.L2", "pi", "strip height"),
    ("grid.dealias_fraction", "0.6666666666666666", "kept fraction of each Nyquist range"),
    ("solver.dt", "1e-3", "time step"),
    ("solver.t_end", "1", "final time"),
    ("solver.scheme", "integrating_factor_rk4", "integrating_factor_rk4 or etd_rk2"),
    ("solver.snapshot_stride", "10", "steps between snapshots"),
    ("solver.picard_max_iter", "50", "Picard iteration cap"),
    ("solver.picard_tol", "1e-10", "Picard stopping distance"),
    ("solver.quadrature_nodes", "4", "trapezoid nodes per Duhamel interval"),
    ("init.preset", "two_mode", "single_mode, two_mode, boundary_bump, interior_bump, random_band"),
    ("init.amplitude", "0.01", "preset amplitude"),
    ("init.k", "0", "single_mode x1 wavenumber"),
    ("init.m", "1", "single_mode x2 index"),
    ("init.x0", "pi", "bump centre in x1"),
    ("init.y0", "0.5pi", "interior bump centre in x2"),
    ("init.width", "1", "bump radius"),
    ("init.j_lo", "0", "random_band lowest octave"),
    ("init.j_hi", "4", "random_band octave bound (exclusive)"),
    ("init.file", "", "FieldFile with the initial state; overrides init.preset"),
    ("mode", "simulate", "simulate, picard, verify or analyticity"),
    ("output.dir", "out", "output directory"),
    ("output.gnuplot", "false", "also write diagnostics.gp"),
    ("seed", "0", "seed of random_band data and the verify battery"),
    ("holder.a", "0.25", "Hölder exponent in (0, 1]"),
    ("holder.pairs", "4096", "low-discrepancy pairs sampled by the Hölder monitor"),
    ("verify.pairs", "100", "random pairs in the bilinear battery"),
    ("analyticity.t", "", "evaluation time; defaults to solver.t_end"),
    ("analyticity.beta_max", "8", "highest derivative order"),
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Simulate,
    Picard,
    Verify,
    Analyticity,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Simulate => "simulate",
            Mode::Picard => "picard",
            Mode::Verify => "verify",
            Mode::Analyticity => "analyticity",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "simulate" => Ok(Mode::Simulate),
            "picard" => Ok(Mode::Picard),
            "verify" => Ok(Mode::Verify),
            "analyticity" => Ok(Mode::Analyticity),
            other => Err(format!("unknown mode `{other}`")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum InitialData {
    Preset(Preset),
    File(PathBuf),
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub grid: GridSpec,
    pub solver: SolverConfig,
    pub initial_data: InitialData,
    pub mode: Mode,
    pub output_dir: PathBuf,
    pub seed: u64,
    pub emit_gnuplot: bool,
    pub bilinear_pairs: usize,
    pub analyticity_t: Option<f64>,
    pub beta_max: u32,
}

/// Raw values with the line they came from; line 0 marks an override.
#[derive(Clone, Debug, Default)]
pub struct ConfigMap {
    values: BTreeMap<String, (String, usize)>,
}

fn known(key: &str) -> bool {
    KEYS.iter().any(|(k, _, _)| *k == key)
}

fn split(line: &str) -> Option<(&str, &str)> {
    let (k, v) = line.split_once('=')?;
    let k = k.trim();
    (!k.is_empty()).then_some((k, v.trim()))
}

impl ConfigMap {
    pub fn parse(text: &str) -> Result<Self> {
        let mut map = Self::default();
        for (n, raw) in text.lines().enumerate() {
            let line_no = n + 1;
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = split(line).ok_or_else(|| Error::Config {
                line: line_no,
                msg: format!("expected `key = value`, got `{line}`"),
            })?;
            if !known(k) {
                return Err(Error::Config { line: line_no, msg: format!("unknown key `{k}`") });
            }
            if let Some((_, first)) = map.values.get(k) {
                return Err(Error::Config { line: line_no, msg: format!("`{k}` already set on line {first}") });
            }
            map.values.insert(k.to_string(), (v.to_string(), line_no));
        }
        Ok(map)
    }

    /// Applies one `key=value` override.
    pub fn set(&mut self, assignment: &str) -> Result<()> {
        let (k, v) = split(assignment).ok_or_else(|| Error::Config {
            line: 0,
            msg: format!("override `{assignment}` is not `key=value`"),
        })?;
        if !known(k) {
            return Err(Error::Config { line: 0, msg: format!("unknown key `{k}` in override") });
        }
        self.values.insert(k.to_string(), (v.to_string(), 0));
        Ok(())
    }

    fn raw(&self, key: &str) -> (&str, usize) {
        match self.values.get(key) {
            Some((v, line)) => (v.as_str(), *line),
            None => (KEYS.iter().find(|(k, _, _)| *k == key).expect("known key").1, 0),
        }
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<T> {
        let (v, line) = self.raw(key);
        v.parse().map_err(|_| Error::Config { line, msg: format!("cannot parse `{v}` for `{key}`") })
    }

    fn real(&self, key: &str) -> Result<f64> {
        let (v, line) = self.raw(key);
        parse_real(v).ok_or_else(|| Error::Config { line, msg: format!("`{key}` needs a finite number, got `{v}`") })
    }

    fn line_of(&self, key: &str) -> usize {
        self.raw(key).1
    }

    pub fn build(&self) -> Result<RunConfig> {
        let at = |key: &str| {
            let line = self.line_of(key);
            move |e: Error| Error::Config { line, msg: e.to_string() }
        };
        let grid = GridSpec::new(self.get("grid.n1")?, self.get("grid.n2")?, self.real("grid.L1")?, self.real("grid.L2")?)
            .map_err(at("grid.n1"))?
            .with_dealias_fraction(self.real("grid.dealias_fraction")?)
            .map_err(at("grid.dealias_fraction"))?;
        let (scheme, line) = self.raw("solver.scheme");
        let scheme: Scheme = scheme.parse().map_err(|e: Error| Error::Config { line, msg: e.to_string() })?;
        let solver = SolverConfig {
            dt: self.real("solver.dt")?,
            t_end: self.real("solver.t_end")?,
            scheme,
            snapshot_stride: self.get("solver.snapshot_stride")?,
            picard_max_iter: self.get("solver.picard_max_iter")?,
            picard_tol: self.real("solver.picard_tol")?,
            quadrature_nodes: self.get("solver.quadrature_nodes")?,
            holder_exponent: self.real("holder.a")?,
            holder_pairs: self.get("holder.pairs")?,
        };
        solver.validate().map_err(at("solver.dt"))?;

        let seed: u64 = self.get("seed")?;
        let (file, _) = self.raw("init.file");
        let initial_data = if file.is_empty() {
            InitialData::Preset(self.preset(seed)?)
        } else {
            InitialData::File(PathBuf::from(file))
        };
        let (mode, line) = self.raw("mode");
        let mode = mode.parse().map_err(|msg| Error::Config { line, msg })?;
        let (dir, line) = self.raw("output.dir");
        if dir.is_empty() {
            return Err(Error::Config { line, msg: "output.dir must not be empty".into() });
        }
        let (t, line) = self.raw("analyticity.t");
        let analyticity_t = if t.is_empty() {
            None
        } else {
            Some(parse_real(t).ok_or_else(|| Error::Config { line, msg: format!("bad analyticity.t `{t}`") })?)
        };
        Ok(RunConfig {
            grid,
            solver,
            initial_data,
            mode,
            output_dir: PathBuf::from(dir),
            seed,
            emit_gnuplot: self.get("output.gnuplot")?,
            bilinear_pairs: self.get("verify.pairs")?,
            analyticity_t,
            beta_max: self.get("analyticity.beta_max")?,
        })
    }

    fn preset(&self, seed: u64) -> Result<Preset> {
        let (name, line) = self.raw("init.preset");
        check_preset_name(name).map_err(|e| Error::Config { line, msg: e.to_string() })?;
        let amplitude = self.real("init.amplitude")?;
        Ok(match name {
            "single_mode" => Preset::SingleMode { k: self.get("init.k")?, m: self.get("init.m")?, amplitude },
            "two_mode" => Preset::TwoMode { amplitude },
            "boundary_bump" => Preset::BoundaryBump { x0: self.real("init.x0")?, width: self.real("init.width")?, amplitude },
            "interior_bump" => Preset::InteriorBump {
                x0: self.real("init.x0")?,
                y0: self.real("init.y0")?,
                width: self.real("init.width")?,
                amplitude,
            },
            _ => Preset::RandomBand { j_lo: self.get("init.j_lo")?, j_hi: self.get("init.j_hi")?, amplitude, seed },
        })
    }
}

/// A finite real, optionally written as a multiple of pi (`pi`, `2pi`,
/// `0.5pi`).
pub fn parse_real(s: &str) -> Option<f64> {
    let s = s.trim();
    let v = match s.strip_suffix("pi") {
        Some("") => PI,
        Some(c) => c.trim_end_matches('*').parse::<f64>().ok()? * PI,
        None => s.parse().ok()?,
    };
    v.is_finite().then_some(v)
}

impl RunConfig {
    pub fn parse(text: &str, overrides: &[String]) -> Result<Self> {
        let mut map = ConfigMap::parse(text)?;
        for o in overrides {
            map.set(o)?;
        }
        map.build()
    }

    pub fn load(path: &std::path::Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text, overrides)
    }
}

/// The key table formatted for `--help`.
pub fn key_help() -> String {
    let mut out = String::from("configuration keys (default in brackets):\n");
    for (k, d, doc) in KEYS {
        out.push_str(&format!("  {k:<24} {doc} [{d}]\n"));
    }
    out
}
