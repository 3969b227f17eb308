//! Executes one configured run and maps its outcome to an exit code.

use std::fs;
use std::path::{Path, PathBuf};

use log::{info, warn};

use super::config::{InitialData, Mode, RunConfig};
use super::csv;
use super::fieldfile::{read_field, write_field};
use crate::error::{Error, Result};
use crate::grid::Field;
use crate::harness::{analyticity_diagnostic, example_battery, Verdict};
use crate::solver::{picard_solve, simulate, Trajectory};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_AUDIT: i32 = 4;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunOutcome {
    pub files: Vec<PathBuf>,
    /// A verify report failed or the Picard iteration did not converge.
    pub audit_failed: bool,
}

pub fn exit_code(result: &Result<RunOutcome>) -> i32 {
    match result {
        Ok(o) if o.audit_failed => EXIT_AUDIT,
        Ok(_) => EXIT_OK,
        Err(Error::NonFiniteStep { .. }) => EXIT_NUMERICAL,
        Err(Error::Io(_)) => EXIT_IO,
        Err(_) => EXIT_CONFIG,
    }
}

pub fn initial_state(config: &RunConfig) -> Result<Field> {
    match &config.initial_data {
        InitialData::Preset(p) => p.build(&config.grid),
        InitialData::File(path) => {
            let (field, _) = read_field(path)?;
            let g = field.grid();
            if (g.n1(), g.n2(), g.l1(), g.l2())
                != (config.grid.n1(), config.grid.n2(), config.grid.l1(), config.grid.l2())
            {
                warn!("initial data file {} overrides the configured grid", path.display());
            }
            let grid = g.with_dealias_fraction(config.grid.dealias_fraction())?;
            Field::from_values(grid, field.into_values())
        }
    }
}

struct Writer<'a> {
    dir: &'a Path,
    files: Vec<PathBuf>,
}

impl Writer<'_> {
    fn text(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, contents)?;
        self.files.push(path);
        Ok(())
    }

    fn snapshots(&mut self, traj: &Trajectory) -> Result<()> {
        for (k, (t, f)) in traj.times().iter().zip(traj.states()).enumerate() {
            let path = self.dir.join(format!("snapshot_{k:05}.sqgf"));
            write_field(&path, f, *t)?;
            self.files.push(path);
        }
        Ok(())
    }

    fn diagnostics(&mut self, traj: &Trajectory, gnuplot: bool) -> Result<()> {
        self.text("diagnostics.csv", &csv::diagnostics_csv(traj.diagnostics()))?;
        if gnuplot {
            self.text("diagnostics.gp", &csv::gnuplot_script("diagnostics.csv"))?;
        }
        Ok(())
    }
}

/// Runs the configured mode, writing its outputs under `output_dir`.
pub fn execute(config: &RunConfig) -> Result<RunOutcome> {
    fs::create_dir_all(&config.output_dir)?;
    let mut w = Writer { dir: &config.output_dir, files: Vec::new() };
    let mut audit_failed = false;
    match config.mode {
        Mode::Simulate => {
            let traj = simulate(&initial_state(config)?, &config.solver)?;
            w.snapshots(&traj)?;
            w.diagnostics(&traj, config.emit_gnuplot)?;
        }
        Mode::Picard => {
            let out = picard_solve(&initial_state(config)?, config.solver.t_end, &config.solver)?;
            info!(
                "picard: {} iterations, converged = {}, residual = {:e}",
                out.iterations, out.converged, out.residual
            );
            w.snapshots(&out.trajectory)?;
            w.diagnostics(&out.trajectory, config.emit_gnuplot)?;
            w.text("picard.csv", &csv::picard_csv(&out))?;
            audit_failed = !out.converged;
        }
        Mode::Verify => {
            let reports = example_battery(&config.grid, config.seed, config.bilinear_pairs)?;
            for r in &reports {
                info!("{}: worst ratio {:e} against {:e}, {}", r.name, r.worst_ratio, r.fitted_constant, r.verdict);
            }
            w.text("reports.csv", &csv::reports_csv(&reports))?;
            audit_failed = reports.iter().any(|r| r.verdict == Verdict::Fail);
        }
        Mode::Analyticity => {
            let t = config.analyticity_t.unwrap_or(config.solver.t_end);
            let mut solver = config.solver.clone();
            solver.t_end = t;
            solver.validate()?;
            let traj = simulate(&initial_state(config)?, &solver)?;
            let report = analyticity_diagnostic(&traj, t, config.beta_max)?;
            w.diagnostics(&traj, config.emit_gnuplot)?;
            w.text("analyticity.csv", &csv::analyticity_csv(&report))?;
            w.text("analyticity_summary.csv", &csv::analyticity_summary_csv(&report))?;
        }
    }
    Ok(RunOutcome { files: w.files, audit_failed })
}

/// Loads, runs and reports; every error is printed to standard error.
/// Without a config file every key takes its default.
pub fn run(config_path: Option<&Path>, overrides: &[String]) -> i32 {
    let text = match config_path.map(fs::read_to_string).transpose() {
        Ok(text) => text.unwrap_or_default(),
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", config_path.unwrap_or(Path::new("")).display());
            return EXIT_CONFIG;
        }
    };
    let config = RunConfig::parse(&text, overrides);
    let result = config.and_then(|c| execute(&c));
    if let Err(e) = &result {
        eprintln!("error: {e}");
    }
    if let Ok(o) = &result {
        if o.audit_failed {
            eprintln!("audit failed; see the files in the output directory");
        }
    }
    exit_code(&result)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(dir: &Path, extra: &str) -> RunConfig {
        let text = format!("output.dir={}\nsolver.t_end=0.05\nsolver.dt=0.01\nsolver.snapshot_stride=2\n{extra}", dir.display());
        RunConfig::parse(&text, &[]).unwrap()
    }

    #[test]
    fn simulate_writes_snapshots_and_diagnostics() {
        let dir = tempfile::tempdir().unwrap();
        let out = execute(&config(dir.path(), "grid.n1=16\ngrid.n2=15\nholder.pairs=64\noutput.gnuplot=true\n")).unwrap();
        assert!(!out.audit_failed);
        let names: Vec<String> = out.files.iter().map(|p| p.file_name().unwrap().to_string_lossy().into()).collect();
        assert_eq!(
            names,
            ["snapshot_00000.sqgf", "snapshot_00001.sqgf", "snapshot_00002.sqgf", "snapshot_00003.sqgf", "diagnostics.csv", "diagnostics.gp"]
        );
        let csv = fs::read_to_string(dir.path().join("diagnostics.csv")).unwrap();
        assert_eq!(csv.lines().count(), 5);
        let (_, t) = read_field(&dir.path().join("snapshot_00003.sqgf")).unwrap();
        assert_eq!(t, 0.05);
    }

    #[test]
    fn file_initial_data() {
        let dir = tempfile::tempdir().unwrap();
        let g = crate::grid::GridSpec::new(8, 7, 1.0, 1.0).unwrap();
        let f = Field::from_fn(g, |x1, x2| x1 * x2);
        let path = dir.path().join("init.sqgf");
        write_field(&path, &f, 0.0).unwrap();
        let c = config(dir.path(), &format!("init.file={}\n", path.display()));
        assert_eq!(initial_state(&c).unwrap().values(), f.values());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Ok(RunOutcome::default())), EXIT_OK);
        assert_eq!(exit_code(&Ok(RunOutcome { files: vec![], audit_failed: true })), EXIT_AUDIT);
        assert_eq!(exit_code(&Err(Error::NonFiniteStep { step: 3 })), EXIT_NUMERICAL);
        assert_eq!(exit_code(&Err(Error::Config { line: 1, msg: String::new() })), EXIT_CONFIG);
        assert_eq!(exit_code(&Err(Error::Io(std::io::Error::other("x")))), EXIT_IO);
    }

    #[test]
    fn nan_exits_with_numerical_code() {
        let dir = tempfile::tempdir().unwrap();
        let text = format!("output.dir={}\ngrid.n1=8\ngrid.n2=7\ninit.amplitude=1e200\nsolver.dt=0.1\n", dir.path().display());
        let c = RunConfig::parse(&text, &[]).unwrap();
        assert_eq!(exit_code(&execute(&c)), EXIT_NUMERICAL);
    }
}
