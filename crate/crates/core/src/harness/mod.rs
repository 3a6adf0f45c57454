//! Declarative experiments: config parsing, the scenario catalog, single
//! runs with audits and metrics, parameter sweeps, and file output.

pub mod catalog;
pub mod config;
pub mod output;

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use catalog::{catalog, scenario, Scenario};
pub use config::{parse_config, ExperimentConfig, ModelRegistry};
pub use output::{emit_csv, emit_report, emit_sweep_csv};

use crate::diagnostics::{
    audit_theorem1, check_conservative, check_goal_rate, check_gradient, check_lyapunov_decrease,
    AuditReport, LyapunovCandidate, Sampler, Theorem1Audit, Theorem1Branch,
};
use crate::dynamics::StateVector;
use crate::error::{Error, Result};
use crate::integrate::{simulate, Trajectory};
use crate::rng::Lcg64;

/// Relative tolerance and floor of the recorded-`Q̇` audit.
pub const GOAL_RATE_REL_TOL: f64 = 1e-3;
pub const GOAL_RATE_FLOOR: f64 = 1e-8;

/// Post-run summary.
///
/// Equality ignores `wall_time_secs`, so two runs of one config compare equal.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunMetrics {
    #[serde(rename = "Q_initial")]
    pub q_initial: f64,
    #[serde(rename = "Q_final")]
    pub q_final: f64,
    #[serde(rename = "max_Q_rise")]
    pub max_q_rise: f64,
    /// `max yᵢ − min yᵢ` at the final time.
    pub final_output_spread: f64,
    /// `max |uᵢ|` over the audit tail.
    pub u_tail_max: f64,
    /// Mean of the final outputs.
    pub aligned_value: f64,
    /// `None` for open-loop runs.
    pub theorem1_branch: Option<Theorem1Branch>,
    /// No state entry exceeded the boundedness limit.
    pub bounded: bool,
    pub wall_time_secs: f64,
}

impl PartialEq for RunMetrics {
    fn eq(&self, o: &Self) -> bool {
        self.q_initial.to_bits() == o.q_initial.to_bits()
            && self.q_final.to_bits() == o.q_final.to_bits()
            && self.max_q_rise.to_bits() == o.max_q_rise.to_bits()
            && self.final_output_spread.to_bits() == o.final_output_spread.to_bits()
            && self.u_tail_max.to_bits() == o.u_tail_max.to_bits()
            && self.aligned_value.to_bits() == o.aligned_value.to_bits()
            && self.theorem1_branch == o.theorem1_branch
            && self.bounded == o.bounded
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunAudits {
    pub theorem1: Option<Theorem1Audit>,
    pub goal_rate: Option<AuditReport>,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub trajectory: Trajectory,
    pub metrics: RunMetrics,
    pub audits: RunAudits,
}

impl RunOutcome {
    pub fn passed(&self) -> bool {
        self.metrics.bounded
            && self.audits.theorem1.as_ref().is_none_or(Theorem1Audit::passed)
            && self.audits.goal_rate.as_ref().is_none_or(|r| r.passed)
    }
}

/// Initial states with the optional seeded perturbation applied.
pub fn initial_states(cfg: &ExperimentConfig) -> Result<Vec<StateVector>> {
    let mut rng = Lcg64::new(cfg.seed);
    let delta = cfg.controller.perturb_delta.unwrap_or(0.0);
    cfg.subsystems
        .iter()
        .map(|s| {
            let x = s
                .initial_state
                .iter()
                .map(|&v| if delta > 0.0 { v + rng.uniform(-delta, delta) } else { v })
                .collect();
            StateVector::new(x)
        })
        .collect()
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunOutcome> {
    run_experiment_with(cfg, &ModelRegistry::default())
}

/// Builds, simulates, audits and summarizes one experiment, writing the CSV
/// and report when the config names paths.
pub fn run_experiment_with(cfg: &ExperimentConfig, registry: &ModelRegistry) -> Result<RunOutcome> {
    let started = Instant::now();
    let context = |e: Error| Error::InvalidConfig(format!("experiment `{}`: {e}", cfg.name));
    cfg.validate().map_err(context)?;
    let net = cfg.network(registry).map_err(context)?;
    let spec = cfg.controller.spec()?;
    let integ = cfg.integrator.spec()?;
    let x0 = initial_states(cfg)?;

    let traj = simulate(&net, &x0, spec.as_ref(), &integ, cfg.integrator.record_every)?;

    let (theorem1, goal_rate) = match spec {
        Some(_) if !traj.any_clipped() => (
            Some(audit_theorem1(&traj, &cfg.audit)?),
            Some(check_goal_rate(&net, &traj, GOAL_RATE_REL_TOL, GOAL_RATE_FLOOR)?),
        ),
        _ => (None, None),
    };

    let metrics = compute_metrics(&traj, cfg, theorem1.as_ref(), started);
    let outcome = RunOutcome {
        trajectory: traj,
        metrics,
        audits: RunAudits { theorem1, goal_rate },
    };
    if let Some(p) = &cfg.outputs.csv_path {
        emit_csv(&outcome.trajectory, p)?;
    }
    if let Some(p) = &cfg.outputs.report_path {
        emit_report(cfg, &outcome, p)?;
    }
    Ok(outcome)
}

fn compute_metrics(
    traj: &Trajectory,
    cfg: &ExperimentConfig,
    theorem1: Option<&Theorem1Audit>,
    started: Instant,
) -> RunMetrics {
    let max_q_rise = traj
        .goal
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(0.0, f64::max);
    let y_final = traj.outputs.last().cloned().unwrap_or_default();
    let (lo, hi) = y_final
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let t_end = traj.times.last().copied().unwrap_or(0.0);
    let tail_start = (1.0 - cfg.audit.tail_fraction) * t_end;
    let u_tail_max = traj
        .times
        .iter()
        .zip(&traj.controls)
        .filter(|(t, _)| **t >= tail_start)
        .flat_map(|(_, u)| u.iter())
        .fold(0.0f64, |m, v| m.max(v.abs()));
    RunMetrics {
        q_initial: traj.goal.first().copied().unwrap_or(0.0),
        q_final: traj.goal.last().copied().unwrap_or(0.0),
        max_q_rise,
        final_output_spread: hi - lo,
        u_tail_max,
        aligned_value: y_final.iter().sum::<f64>() / y_final.len().max(1) as f64,
        theorem1_branch: theorem1.map(|a| a.branch),
        bounded: traj.is_bounded(),
        wall_time_secs: started.elapsed().as_secs_f64(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub value: f64,
    pub metrics: RunMetrics,
    pub passed: bool,
}

/// Returns a copy of `cfg` with the numeric field at the dotted `path` set to
/// `value`. Array elements are addressed by index, e.g.
/// `subsystems.0.initial_state.1`.
pub fn with_parameter(cfg: &ExperimentConfig, path: &str, value: f64) -> Result<ExperimentConfig> {
    let unresolved = || Error::InvalidConfig(format!("parameter path `{path}` does not resolve to a numeric config field"));
    let mut doc = serde_json::to_value(cfg).expect("config serializes");
    let mut node = &mut doc;
    for seg in path.split('.') {
        node = match node {
            serde_json::Value::Object(map) => map.get_mut(seg).ok_or_else(unresolved)?,
            serde_json::Value::Array(items) => {
                let i: usize = seg.parse().map_err(|_| unresolved())?;
                items.get_mut(i).ok_or_else(unresolved)?
            }
            _ => return Err(unresolved()),
        };
    }
    let is_integer = node.as_u64().is_some();
    *node = match node {
        serde_json::Value::Number(_) | serde_json::Value::Null => {
            if is_integer && value >= 0.0 && value.fract() == 0.0 {
                serde_json::Value::from(value as u64)
            } else {
                serde_json::Number::from_f64(value)
                    .map(serde_json::Value::Number)
                    .ok_or_else(|| Error::InvalidConfig(format!("sweep value {value} is not finite")))?
            }
        }
        _ => return Err(unresolved()),
    };
    let updated: ExperimentConfig = serde_json::from_value(doc)
        .map_err(|e| Error::InvalidConfig(format!("`{path}` = {value}: {e}")))?;
    updated.validate()?;
    Ok(updated)
}

/// One independent run per value, executed in parallel, results in input order.
/// Per-run output files are suppressed.
pub fn run_sweep(cfg: &ExperimentConfig, path: &str, values: &[f64]) -> Result<Vec<SweepRow>> {
    run_sweep_with(cfg, path, values, &ModelRegistry::default())
}

pub fn run_sweep_with(
    cfg: &ExperimentConfig,
    path: &str,
    values: &[f64],
    registry: &ModelRegistry,
) -> Result<Vec<SweepRow>> {
    // resolve the path even for an empty sweep
    with_parameter(cfg, path, cfg_probe_value(cfg, path))?;
    let configs = values
        .iter()
        .map(|&v| {
            let mut c = with_parameter(cfg, path, v)?;
            c.outputs = Default::default();
            Ok((v, c))
        })
        .collect::<Result<Vec<_>>>()?;
    configs
        .par_iter()
        .map(|(v, c)| {
            let out = run_experiment_with(c, registry)?;
            Ok(SweepRow {
                value: *v,
                passed: out.passed(),
                metrics: out.metrics,
            })
        })
        .collect()
}

/// Current value at `path`, or 1.0 when it is null or absent.
fn cfg_probe_value(cfg: &ExperimentConfig, path: &str) -> f64 {
    let doc = serde_json::to_value(cfg).expect("config serializes");
    let mut node = &doc;
    for seg in path.split('.') {
        let next = match node {
            serde_json::Value::Object(m) => m.get(seg),
            serde_json::Value::Array(a) => seg.parse::<usize>().ok().and_then(|i| a.get(i)),
            _ => None,
        };
        match next {
            Some(n) => node = n,
            None => return 1.0,
        }
    }
    node.as_f64().unwrap_or(1.0)
}

/// Sampling boxes used by [`run_checks`].
pub const CHECK_BOX: f64 = 3.0;
pub const LYAPUNOV_BOX: f64 = 2.0;

/// Model-level diagnostics for every configured subsystem plus a network
/// Lyapunov check with `V = Q` (or the output sum for a single subsystem).
pub fn run_checks(cfg: &ExperimentConfig, registry: &ModelRegistry) -> Result<Vec<(String, AuditReport)>> {
    cfg.validate()?;
    let net = cfg.network(registry)?;
    let mut out = Vec::new();
    for (i, m) in net.subsystems().iter().enumerate() {
        let who = format!("subsystem {} ({})", i + 1, m.label());
        let s = Sampler::new(-CHECK_BOX, CHECK_BOX, 1000, cfg.seed);
        out.push((who.clone(), check_conservative(m, &s, 1e-10)));
        let s = Sampler::new(-CHECK_BOX, CHECK_BOX, 100, cfg.seed);
        out.push((who, check_gradient(m, &s, 1e-6)));
    }
    let candidate = if net.len() >= 2 {
        LyapunovCandidate::goal(&net)
    } else {
        LyapunovCandidate::output_sum(&net)
    };
    let s = Sampler::new(-LYAPUNOV_BOX, LYAPUNOV_BOX, 300, cfg.seed);
    out.push((
        format!("network (V = {})", candidate.label),
        check_lyapunov_decrease(&net, &candidate, &s, 1e-10),
    ));
    Ok(out)
}
