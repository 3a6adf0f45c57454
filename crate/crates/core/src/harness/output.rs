//! CSV and JSON emission.
//!
//! Trajectory CSV columns: `t`, then for each subsystem `i` (one-based)
//! `x{i}_1..x{i}_n, y{i}, u{i}`, then `Q, Qdot_bound`. Numbers are written
//! in scientific notation with 17 significant digits, which round-trips
//! every `f64` exactly.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use super::{RunMetrics, RunOutcome, SweepRow};
use crate::error::{Error, Result};
use crate::harness::config::ExperimentConfig;
use crate::integrate::Trajectory;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

pub fn fmt_num(v: f64) -> String {
    format!("{v:.16e}")
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.display().to_string(),
        source,
    }
}

pub fn csv_header(traj: &Trajectory) -> String {
    let mut cols = vec!["t".to_string()];
    if let Some(states) = traj.states.first() {
        for (i, x) in states.iter().enumerate() {
            let i = i + 1;
            cols.extend((1..=x.dim()).map(|j| format!("x{i}_{j}")));
            cols.push(format!("y{i}"));
            cols.push(format!("u{i}"));
        }
    }
    cols.push("Q".into());
    cols.push("Qdot_bound".into());
    cols.join(",")
}

pub fn write_csv(traj: &Trajectory, mut w: impl Write) -> std::io::Result<()> {
    writeln!(w, "{}", csv_header(traj))?;
    let mut row = Vec::new();
    for k in 0..traj.len() {
        row.clear();
        row.push(fmt_num(traj.times[k]));
        for (i, x) in traj.states[k].iter().enumerate() {
            row.extend(x.as_slice().iter().map(|&v| fmt_num(v)));
            row.push(fmt_num(traj.outputs[k][i]));
            row.push(fmt_num(traj.controls[k][i]));
        }
        row.push(fmt_num(traj.goal[k]));
        row.push(fmt_num(traj.goal_rate_bound[k]));
        writeln!(w, "{}", row.join(","))?;
    }
    w.flush()
}

/// Writes the trajectory CSV to `path`.
pub fn emit_csv(traj: &Trajectory, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(io_err(path))?;
    write_csv(traj, BufWriter::new(file)).map_err(io_err(path))
}

#[derive(Serialize)]
struct Report<'a> {
    schema_version: u32,
    config: &'a ExperimentConfig,
    metrics: &'a RunMetrics,
    audits: &'a super::RunAudits,
    passed: bool,
}

pub fn report_json(cfg: &ExperimentConfig, outcome: &RunOutcome) -> String {
    let report = Report {
        schema_version: REPORT_SCHEMA_VERSION,
        config: cfg,
        metrics: &outcome.metrics,
        audits: &outcome.audits,
        passed: outcome.passed(),
    };
    serde_json::to_string_pretty(&report).expect("report serializes")
}

pub fn emit_report(cfg: &ExperimentConfig, outcome: &RunOutcome, path: &Path) -> Result<()> {
    let mut text = report_json(cfg, outcome);
    text.push('\n');
    std::fs::write(path, text).map_err(io_err(path))
}

pub const SWEEP_COLUMNS: &[&str] = &[
    "value",
    "Q_initial",
    "Q_final",
    "max_Q_rise",
    "final_output_spread",
    "u_tail_max",
    "aligned_value",
    "theorem1_branch",
    "passed",
];

pub fn write_sweep_csv(rows: &[SweepRow], mut w: impl Write) -> std::io::Result<()> {
    writeln!(w, "{}", SWEEP_COLUMNS.join(","))?;
    for r in rows {
        let m = &r.metrics;
        let branch = m
            .theorem1_branch
            .map(|b| serde_json::to_value(b).unwrap().as_str().unwrap_or("").to_string())
            .unwrap_or_default();
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{}",
            fmt_num(r.value),
            fmt_num(m.q_initial),
            fmt_num(m.q_final),
            fmt_num(m.max_q_rise),
            fmt_num(m.final_output_spread),
            fmt_num(m.u_tail_max),
            fmt_num(m.aligned_value),
            branch,
            r.passed
        )?;
    }
    w.flush()
}

pub fn emit_sweep_csv(rows: &[SweepRow], path: &Path) -> Result<()> {
    let file = File::create(path).map_err(io_err(path))?;
    write_sweep_csv(rows, BufWriter::new(file)).map_err(io_err(path))
}
