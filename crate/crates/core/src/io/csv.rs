//! CSV writers. Reals use Rust's shortest round-trip exponent form, which
//! is locale-independent.

use std::fmt::Write as _;

use crate::harness::{AnalyticityReport, EstimateReport};
use crate::solver::{Diagnostics, PicardOutcome};

pub const DIAGNOSTICS_HEADER: &str = "t,linf,l2,besov0_inf_1,besov1_inf_1,holder_a,max_principle_ok";
pub const REPORTS_HEADER: &str = "name,samples,fitted_constant,fitted_exponent,worst_ratio,verdict,notes";
pub const PICARD_HEADER: &str = "iteration,distance,contraction_ratio";
pub const ANALYTICITY_HEADER: &str = "table,alpha,b1,b2,order,value,joint";
pub const ANALYTICITY_SUMMARY_HEADER: &str = "t,beta_max,estimated_c,estimated_c_joint,radius_fit";

fn real(x: f64) -> String {
    format!("{x:e}")
}

/// Quotes a free-text cell when it holds a delimiter or a quote.
fn text(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn diagnostics_csv(rows: &[Diagnostics]) -> String {
    let mut out = format!("{DIAGNOSTICS_HEADER}\n");
    for d in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            real(d.t),
            real(d.linf),
            real(d.l2),
            real(d.besov0),
            real(d.besov1),
            real(d.holder),
            d.max_principle_ok
        );
    }
    out
}

pub fn reports_csv(reports: &[EstimateReport]) -> String {
    let mut out = format!("{REPORTS_HEADER}\n");
    for r in reports {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            text(&r.name),
            r.samples,
            real(r.fitted_constant),
            r.fitted_exponent.map(real).unwrap_or_default(),
            real(r.worst_ratio),
            r.verdict,
            text(&r.notes)
        );
    }
    out
}

pub fn picard_csv(outcome: &PicardOutcome) -> String {
    let mut out = format!("{PICARD_HEADER}\n");
    for (i, d) in outcome.distances.iter().enumerate() {
        let ratio = if i == 0 { String::new() } else { real(outcome.contraction_history[i - 1]) };
        let _ = writeln!(out, "{},{},{}", i + 1, real(*d), ratio);
    }
    out
}

pub fn analyticity_csv(report: &AnalyticityReport) -> String {
    let mut out = format!("{ANALYTICITY_HEADER}\n");
    for e in &report.space_table {
        let _ = writeln!(out, "space,0,{},{},{},{},{}", e.b1, e.b2, e.b1 + e.b2, real(e.value), real(e.joint));
    }
    for (alpha, v) in report.time_table.iter().enumerate() {
        let _ = writeln!(out, "time,{alpha},0,0,{alpha},{},{}", real(*v), real(*v));
    }
    out
}

pub fn analyticity_summary_csv(report: &AnalyticityReport) -> String {
    format!(
        "{ANALYTICITY_SUMMARY_HEADER}\n{},{},{},{},{}\n",
        real(report.t),
        report.beta_max,
        real(report.estimated_c),
        real(report.estimated_c_joint),
        report.radius_fit.map(real).unwrap_or_default()
    )
}

/// A gnuplot script plotting the diagnostics columns against `t`.
pub fn gnuplot_script(csv_name: &str) -> String {
    format!(
        "set datafile separator ','\n\
         set key autotitle columnhead\n\
         set logscale y\n\
         set xlabel 't'\n\
         set terminal pngcairo size 900,600\n\
         set output 'diagnostics.png'\n\
         plot for [c=2:6] '{csv_name}' using 1:c with lines\n"
    )
}
