//! Sampled-point audits of model hypotheses and trajectory audits of the
//! closed-loop conclusions.
//!
//! Every check returns an [`AuditReport`]; a report passes iff it found no
//! violations. Sampling goes through the seeded [`Lcg64`] so a report is a
//! pure function of its inputs.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::controller::{recorded_goal, ControllerKind, Feedback};
use crate::dynamics::{dot, NetworkSystem, StateVector, SubsystemModel};
use crate::error::{Error, Result};
use crate::integrate::Trajectory;
use crate::numdiff;
use crate::rng::Lcg64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub check: String,
    pub samples: usize,
    pub violations: usize,
    /// Largest offending (or, when passing, largest observed) magnitude.
    pub worst: f64,
    pub worst_location: Option<Vec<f64>>,
    pub passed: bool,
}

impl AuditReport {
    fn new(check: &str) -> Self {
        Self {
            check: check.to_string(),
            samples: 0,
            violations: 0,
            worst: 0.0,
            worst_location: None,
            passed: true,
        }
    }

    /// Records one observation of `magnitude` at `location`.
    fn observe(&mut self, magnitude: f64, violated: bool, location: impl FnOnce() -> Vec<f64>) {
        self.samples += 1;
        if violated {
            self.violations += 1;
        }
        // NaN counts as worst.
        if exceeds(magnitude, self.worst) || self.worst_location.is_none() {
            self.worst = magnitude;
            self.worst_location = Some(location());
        }
        self.passed = self.violations == 0;
    }
}

impl fmt::Display for AuditReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:<24} {} samples={} violations={} worst={:.3e}",
            self.check,
            if self.passed { "PASS" } else { "FAIL" },
            self.samples,
            self.violations,
            self.worst
        )
    }
}

/// `v > tol`, with NaN counted as exceeding.
fn exceeds(v: f64, tol: f64) -> bool {
    v.is_nan() || v > tol
}

/// Uniform sampling over the box `[low, high]ⁿ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sampler {
    pub low: f64,
    pub high: f64,
    pub count: usize,
    pub seed: u64,
}

impl Sampler {
    pub fn new(low: f64, high: f64, count: usize, seed: u64) -> Self {
        Self {
            low,
            high,
            count,
            seed,
        }
    }

    fn draw(&self, rng: &mut Lcg64, dim: usize) -> Vec<f64> {
        (0..dim).map(|_| rng.uniform(self.low, self.high)).collect()
    }
}

/// Fails every sampled state with `|L_f h| > tol`.
pub fn check_conservative(model: &SubsystemModel, sampler: &Sampler, tol: f64) -> AuditReport {
    let mut report = AuditReport::new("conservative");
    let mut rng = Lcg64::new(sampler.seed);
    for _ in 0..sampler.count {
        let x = sampler.draw(&mut rng, model.state_dim());
        let value = StateVector::new(x.clone())
            .and_then(|s| model.lie_drift_output(&s))
            .map_or(f64::NAN, f64::abs);
        report.observe(value, exceeds(value, tol), || x);
    }
    report
}

/// Central-difference gradient of the output at `x`, step `1e-6·max(1, |xⱼ|)`.
pub fn fd_gradient(model: &SubsystemModel, x: &[f64]) -> Vec<f64> {
    let sys = model.system();
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|j| {
            let s = 1e-6 * x[j].abs().max(1.0);
            probe[j] = x[j] + s;
            let up = (probe[j], sys.output(&probe));
            probe[j] = x[j] - s;
            let down = (probe[j], sys.output(&probe));
            probe[j] = x[j];
            (up.1 - down.1) / (up.0 - down.0)
        })
        .collect()
}

/// Norm-wise relative error between analytic and finite-difference gradients,
/// with the denominator floored at `1e-9`.
pub fn check_gradient(model: &SubsystemModel, sampler: &Sampler, rel_tol: f64) -> AuditReport {
    const FLOOR: f64 = 1e-9;
    let mut report = AuditReport::new("gradient");
    let mut rng = Lcg64::new(sampler.seed);
    let n = model.state_dim();
    let mut analytic = vec![0.0; n];
    for _ in 0..sampler.count {
        let x = sampler.draw(&mut rng, n);
        model.system().output_gradient(&x, &mut analytic);
        let fd = fd_gradient(model, &x);
        let diff = analytic
            .iter()
            .zip(&fd)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let scale = dot(&analytic, &analytic).sqrt().max(FLOOR);
        let err = diff / scale;
        report.observe(err, exceeds(err, rel_tol), || x);
    }
    report
}

type CandidateFn = dyn Fn(&[StateVector]) -> f64 + Send + Sync;

/// A nonnegative function of the joint network state.
#[derive(Clone)]
pub struct LyapunovCandidate {
    pub label: String,
    value: Arc<CandidateFn>,
}

impl fmt::Debug for LyapunovCandidate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LyapunovCandidate").field("label", &self.label).finish()
    }
}

impl LyapunovCandidate {
    pub fn new(
        label: impl Into<String>,
        value: impl Fn(&[StateVector]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            label: label.into(),
            value: Arc::new(value),
        }
    }

    /// The cyclic goal of the outputs; the default candidate.
    pub fn goal(net: &NetworkSystem) -> Self {
        let net = net.clone();
        Self::new("goal", move |states| {
            let y = net.outputs(states).unwrap_or_else(|_| vec![f64::NAN]);
            recorded_goal(None, &y)
        })
    }

    /// Sum of the subsystem outputs.
    pub fn output_sum(net: &NetworkSystem) -> Self {
        let net = net.clone();
        Self::new("output-sum", move |states| {
            net.outputs(states).map_or(f64::NAN, |y| y.iter().sum())
        })
    }

    pub fn value(&self, states: &[StateVector]) -> f64 {
        (self.value)(states)
    }
}

/// Directional derivative of `value` at `x` along `dir`, via Ridders with an
/// initial step of `rel_step` times the state scale.
fn directional_derivative(value: impl Fn(&[f64]) -> f64, x: &[f64], dir: &[f64], rel_step: f64) -> f64 {
    let norm = dot(dir, dir).sqrt();
    if norm == 0.0 {
        return 0.0;
    }
    let scale = dot(x, x).sqrt().max(1.0);
    let (d, _) = numdiff::ridders(
        |s| {
            let probe: Vec<f64> = x.iter().zip(dir).map(|(a, b)| a + s * b / norm).collect();
            value(&probe)
        },
        rel_step * scale,
    );
    d * norm
}

/// Fails every sampled joint state where the zero-control rate of the
/// candidate exceeds `tol`.
pub fn check_lyapunov_decrease(
    net: &NetworkSystem,
    candidate: &LyapunovCandidate,
    sampler: &Sampler,
    tol: f64,
) -> AuditReport {
    let mut report = AuditReport::new("lyapunov-decrease");
    let mut rng = Lcg64::new(sampler.seed);
    let Ok(mut fb) = Feedback::new(net, None) else {
        return report;
    };
    let dim = net.total_dim();
    let mut drift = vec![0.0; dim];
    for _ in 0..sampler.count {
        let x = sampler.draw(&mut rng, dim);
        fb.vector_field(&x, &mut drift);
        let rate = directional_derivative(
            |p| net.unstack(p).map_or(f64::NAN, |s| candidate.value(&s)),
            &x,
            &drift,
            0.05,
        );
        report.observe(rate, exceeds(rate, tol), || x);
    }
    report
}

/// Which alternative of the convergence theorem held over the tail.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Theorem1Branch {
    /// Outputs aligned (or reached the target).
    Goal,
    /// Some subsystem's `∇h·g` vanished.
    LieVanish,
    Both,
    Neither,
}

impl Theorem1Branch {
    pub fn is_valid(self) -> bool {
        self != Theorem1Branch::Neither
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Theorem1Thresholds {
    /// Largest allowed rise of the goal between consecutive samples.
    pub q_monotone_slack: f64,
    /// Bound on `max |uᵢ|` over the tail.
    pub u_final_tol: f64,
    /// Fraction of the horizon treated as the tail.
    pub tail_fraction: f64,
    /// Threshold for both branches of the alternative.
    pub alternative_tol: f64,
}

impl Default for Theorem1Thresholds {
    fn default() -> Self {
        Self {
            q_monotone_slack: 1e-9,
            u_final_tol: 1e-4,
            tail_fraction: 0.1,
            alternative_tol: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Theorem1Audit {
    pub monotone: AuditReport,
    pub control_decay: AuditReport,
    pub alternative: AuditReport,
    pub branch: Theorem1Branch,
    /// Zero-based indices of subsystems whose `|∇h·g|` stayed below the threshold over the tail.
    pub vanishing_subsystems: Vec<usize>,
    /// Largest `|2yᵢ − yᵢ₋₁ − yᵢ₊₁|` (tracking: `|yᵢ − y*|`) over the tail.
    pub tail_goal_error: f64,
}

impl Theorem1Audit {
    pub fn passed(&self) -> bool {
        self.monotone.passed && self.control_decay.passed && self.alternative.passed
    }

    pub fn reports(&self) -> [&AuditReport; 3] {
        [&self.monotone, &self.control_decay, &self.alternative]
    }
}

/// Audits a closed-loop, unsaturated trajectory against the conclusions of
/// the convergence theorem: monotone goal, decaying control, and the
/// goal-or-vanishing-Lie-factor alternative.
pub fn audit_theorem1(traj: &Trajectory, thresholds: &Theorem1Thresholds) -> Result<Theorem1Audit> {
    let spec = traj
        .controller
        .ok_or_else(|| Error::InvalidInput("audit requires a closed-loop trajectory".into()))?;
    if traj.any_clipped() {
        return Err(Error::InvalidInput(
            "audit is undefined for a trajectory with saturated controls".into(),
        ));
    }
    if traj.is_empty() {
        return Err(Error::InvalidInput("empty trajectory".into()));
    }
    if !(thresholds.tail_fraction > 0.0 && thresholds.tail_fraction <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "tail_fraction must lie in (0, 1], got {}",
            thresholds.tail_fraction
        )));
    }

    let mut monotone = AuditReport::new("monotone");
    for (k, w) in traj.goal.windows(2).enumerate() {
        let rise = w[1] - w[0];
        monotone.observe(rise.max(0.0), exceeds(rise, thresholds.q_monotone_slack), || {
            vec![traj.times[k + 1]]
        });
    }

    let t_end = *traj.times.last().unwrap();
    let tail_start = (1.0 - thresholds.tail_fraction) * t_end;
    let tail: Vec<usize> = (0..traj.len()).filter(|&k| traj.times[k] >= tail_start).collect();

    let mut control_decay = AuditReport::new("control-decay");
    for &k in &tail {
        let u = traj.controls[k].iter().fold(0.0f64, |m, v| m.max(v.abs()));
        control_decay.observe(u, exceeds(u, thresholds.u_final_tol), || vec![traj.times[k]]);
    }

    let n = traj.subsystem_count();
    let goal_error = |y: &[f64]| -> f64 {
        match spec.kind() {
            ControllerKind::Alignment => (0..n)
                .map(|i| (2.0 * y[i] - y[(i + n - 1) % n] - y[(i + 1) % n]).abs())
                .fold(0.0, f64::max),
            ControllerKind::Tracking => {
                let target = spec.target().unwrap_or(0.0);
                y.iter().map(|v| (v - target).abs()).fold(0.0, f64::max)
            }
        }
    };
    let tail_goal_error = tail
        .iter()
        .map(|&k| goal_error(&traj.outputs[k]))
        .fold(0.0, f64::max);
    let tail_lie: Vec<f64> = (0..n)
        .map(|i| {
            tail.iter()
                .map(|&k| traj.lie_factors[k][i].abs())
                .fold(0.0, f64::max)
        })
        .collect();
    let vanishing_subsystems: Vec<usize> = (0..n)
        .filter(|&i| tail_lie[i] <= thresholds.alternative_tol)
        .collect();
    let goal_held = tail_goal_error <= thresholds.alternative_tol;
    let branch = match (goal_held, !vanishing_subsystems.is_empty()) {
        (true, true) => Theorem1Branch::Both,
        (true, false) => Theorem1Branch::Goal,
        (false, true) => Theorem1Branch::LieVanish,
        (false, false) => Theorem1Branch::Neither,
    };
    let mut alternative = AuditReport::new("alternative");
    let smallest_lie = tail_lie.iter().copied().fold(f64::INFINITY, f64::min);
    alternative.observe(tail_goal_error.min(smallest_lie), !branch.is_valid(), || {
        vec![tail_start, t_end]
    });
    alternative.samples = tail.len();

    Ok(Theorem1Audit {
        monotone,
        control_decay,
        alternative,
        branch,
        vanishing_subsystems,
        tail_goal_error,
    })
}

/// Compares the recorded analytic `Q̇` with a numerical derivative of the
/// recorded goal along the closed-loop vector field at every sample where
/// `|Q̇| > floor`.
pub fn check_goal_rate(
    net: &NetworkSystem,
    traj: &Trajectory,
    rel_tol: f64,
    floor: f64,
) -> Result<AuditReport> {
    let spec = traj.controller;
    let mut fb = Feedback::new(net, spec.as_ref())?;
    let mut report = AuditReport::new("goal-rate");
    let mut field = vec![0.0; net.total_dim()];
    for k in 0..traj.len() {
        let bound = traj.goal_rate_bound[k];
        if bound.abs() <= floor {
            continue;
        }
        let x = net.stack(&traj.states[k])?;
        fb.vector_field(&x, &mut field);
        let numeric = directional_derivative(
            |p| {
                let mut y = vec![0.0; net.len()];
                net.outputs_raw(p, &mut y);
                recorded_goal(spec.as_ref(), &y)
            },
            &x,
            &field,
            // near alignment the rate is tiny next to the curvature of Q
            1e-3,
        );
        let err = (numeric - bound).abs() / bound.abs();
        report.observe(err, exceeds(err, rel_tol), || vec![traj.times[k]]);
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankProbe {
    pub depth: usize,
    /// `Z, L_f Z, …, L_f^depth Z` with `Z = ∇h`.
    pub rows: Vec<Vec<f64>>,
    pub singular_values: Vec<f64>,
    pub rank: usize,
}

pub const MAX_PROBE_DEPTH: usize = 4;
const PROBE_STEP: f64 = 1e-3;
const RANK_RATIO: f64 = 1e-8;

fn iterated_lie(model: &SubsystemModel, x: &[f64], k: usize) -> Vec<f64> {
    let sys = model.system();
    let n = sys.state_dim();
    let mut out = vec![0.0; n];
    if k == 0 {
        sys.output_gradient(x, &mut out);
        return out;
    }
    let mut f = vec![0.0; n];
    sys.drift(x, &mut f);
    if f.iter().all(|&v| v == 0.0) {
        return out;
    }
    let shifted = |sign: f64| -> Vec<f64> {
        let xs: Vec<f64> = x.iter().zip(&f).map(|(a, b)| a + sign * PROBE_STEP * b).collect();
        iterated_lie(model, &xs, k - 1)
    };
    let (up, down) = (shifted(1.0), shifted(-1.0));
    for i in 0..n {
        out[i] = (up[i] - down[i]) / (2.0 * PROBE_STEP);
    }
    out
}

/// Advisory numerical rank of `span{Z, L_f Z, …}` at `x`, with `Z = ∇h` and
/// the Lie derivatives approximated by nested central differences.
pub fn probe_rank_condition(model: &SubsystemModel, x: &StateVector, depth: usize) -> Result<RankProbe> {
    if depth > MAX_PROBE_DEPTH {
        return Err(Error::InvalidParameter(format!(
            "probe depth must be at most {MAX_PROBE_DEPTH}, got {depth}"
        )));
    }
    if x.dim() != model.state_dim() {
        return Err(Error::InvalidInput(format!(
            "state has dimension {}, model expects {}",
            x.dim(),
            model.state_dim()
        )));
    }
    let rows: Vec<Vec<f64>> = (0..=depth).map(|k| iterated_lie(model, x.as_slice(), k)).collect();
    let n = model.state_dim();
    let m = DMatrix::from_fn(rows.len(), n, |i, j| rows[i][j]);
    let mut singular_values: Vec<f64> = m.singular_values().iter().copied().collect();
    singular_values.sort_by(|a, b| b.total_cmp(a));
    let largest = singular_values.first().copied().unwrap_or(0.0);
    let rank = if largest > 0.0 {
        singular_values.iter().filter(|&&s| s > RANK_RATIO * largest).count()
    } else {
        0
    };
    Ok(RankProbe {
        depth,
        rows,
        singular_values,
        rank,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::controller::ControllerSpec;
    use crate::dynamics::{
        make_custom, make_damped_oscillator, make_integrator, make_oscillator, make_pendulum,
    };
    use crate::integrate::{simulate, IntegratorSpec};

    fn sv(v: &[f64]) -> StateVector {
        StateVector::new(v.to_vec()).unwrap()
    }

    fn zoo() -> Vec<SubsystemModel> {
        vec![
            make_oscillator(1.0).unwrap(),
            make_oscillator(2.0).unwrap(),
            make_pendulum(1.0, 1.0, 1.0).unwrap(),
            make_pendulum(0.5, 2.0, 9.81).unwrap(),
        ]
    }

    #[test]
    fn conservative_zoo_passes() {
        let s = Sampler::new(-3.0, 3.0, 1000, 1);
        for m in zoo() {
            let r = check_conservative(&m, &s, 1e-10);
            assert!(r.passed, "{}: {r}", m.label());
            assert!(r.worst <= 1e-12);
            assert_eq!(r.samples, 1000);
        }
        assert!(check_conservative(&make_integrator(), &s, 1e-10).passed);
    }

    #[test]
    fn damped_oscillator_fails_conservativity() {
        let s = Sampler::new(-3.0, 3.0, 1000, 2);
        let r = check_conservative(&make_damped_oscillator(0.1), &s, 1e-10);
        assert!(!r.passed);
        // L_f h = 0.1 p²; the worst sample is the largest 0.1·p² drawn.
        let mut rng = Lcg64::new(2);
        let oracle = (0..1000)
            .map(|_| {
                let _q = rng.uniform(-3.0, 3.0);
                let p = rng.uniform(-3.0, 3.0);
                0.1 * p * p
            })
            .fold(0.0, f64::max);
        assert!((r.worst - oracle).abs() < 1e-12);
        assert!(r.worst > 0.85 && r.worst <= 0.9);
    }

    #[test]
    fn gradients_of_zoo_pass() {
        let s = Sampler::new(-3.0, 3.0, 100, 3);
        for m in zoo() {
            let r = check_gradient(&m, &s, 1e-6);
            assert!(r.passed, "{}: {r}", m.label());
        }
        let r = check_gradient(&make_integrator(), &s, 1e-6);
        assert!(r.passed);
        assert_eq!(r.worst, 0.0);
    }

    #[test]
    fn wrong_gradient_fails_everywhere() {
        let m = make_custom(
            2,
            |x| vec![x[1], -x[0]],
            |_| vec![0.0, 1.0],
            |x| 0.5 * (x[0] * x[0] + x[1] * x[1]),
            |x| vec![2.0 * x[0], 2.0 * x[1]],
            "bad-gradient",
        );
        let r = check_gradient(&m, &Sampler::new(-3.0, 3.0, 50, 4), 1e-6);
        assert_eq!(r.violations, 50);
    }

    #[test]
    fn lyapunov_goal_and_sum_pass_on_conservative_networks() {
        let s = Sampler::new(-2.0, 2.0, 300, 5);
        let nets = [
            NetworkSystem::new(vec![make_oscillator(1.0).unwrap(); 3]).unwrap(),
            NetworkSystem::new(vec![make_pendulum(1.0, 1.0, 1.0).unwrap(), make_oscillator(2.0).unwrap()]).unwrap(),
            NetworkSystem::new(zoo()).unwrap(),
        ];
        for net in &nets {
            let r = check_lyapunov_decrease(net, &LyapunovCandidate::goal(net), &s, 1e-10);
            assert!(r.passed, "{r}");
            let r = check_lyapunov_decrease(net, &LyapunovCandidate::output_sum(net), &s, 1e-10);
            assert!(r.passed, "{r}");
        }
    }

    #[test]
    fn lyapunov_first_coordinate_fails() {
        let net = NetworkSystem::new(vec![make_oscillator(1.0).unwrap(); 2]).unwrap();
        let v = LyapunovCandidate::new("q1", |s: &[StateVector]| s[0][0]);
        let r = check_lyapunov_decrease(&net, &v, &Sampler::new(-2.0, 2.0, 100, 6), 1e-10);
        assert!(!r.passed);
        // witness: the flow increases q1 where p1 > 0
        let w = r.worst_location.unwrap();
        assert!(w[1] > 0.0);
        assert!((r.worst - w[1]).abs() < 1e-8);
    }

    #[test]
    fn reports_are_reproducible() {
        let m = make_damped_oscillator(0.1);
        let s = Sampler::new(-1.0, 1.0, 200, 99);
        assert_eq!(check_conservative(&m, &s, 1e-10), check_conservative(&m, &s, 1e-10));
        assert_eq!(check_gradient(&m, &s, 1e-6), check_gradient(&m, &s, 1e-6));
    }

    fn two_osc_run(horizon: f64) -> (NetworkSystem, Trajectory) {
        let net = NetworkSystem::new(vec![make_oscillator(1.0).unwrap(); 2]).unwrap();
        let spec = ControllerSpec::alignment(0.5).unwrap();
        let traj = simulate(
            &net,
            &[sv(&[1.0, 1.0]), sv(&[0.5, 0.5])],
            Some(&spec),
            &IntegratorSpec::rk4(1e-3, horizon).unwrap(),
            10,
        )
        .unwrap();
        (net, traj)
    }

    #[test]
    fn theorem1_audit_on_leveling_run() {
        let (_, traj) = two_osc_run(200.0);
        let audit = audit_theorem1(&traj, &Theorem1Thresholds::default()).unwrap();
        assert!(audit.passed(), "{audit:?}");
        assert_eq!(audit.branch, Theorem1Branch::Goal);
    }

    #[test]
    fn theorem1_audit_rejects_open_loop_and_saturation() {
        let net = NetworkSystem::new(vec![make_oscillator(1.0).unwrap(); 2]).unwrap();
        let integ = IntegratorSpec::rk4(1e-2, 1.0).unwrap();
        let x0 = [sv(&[1.0, 1.0]), sv(&[0.5, 0.5])];
        let open = simulate(&net, &x0, None, &integ, 1).unwrap();
        assert!(audit_theorem1(&open, &Theorem1Thresholds::default()).is_err());
        let sat = ControllerSpec::alignment(1.0).unwrap().with_saturation(1e-3).unwrap();
        let clipped = simulate(&net, &x0, Some(&sat), &integ, 1).unwrap();
        assert!(audit_theorem1(&clipped, &Theorem1Thresholds::default()).is_err());
    }

    #[test]
    fn goal_rate_matches_numerical_derivative() {
        let (net, traj) = two_osc_run(20.0);
        let r = check_goal_rate(&net, &traj, 1e-3, 1e-8).unwrap();
        assert!(r.passed, "{r}");
        assert!(r.samples > 100);
    }

    #[test]
    fn rank_probe() {
        let osc = make_oscillator(1.0).unwrap();
        // At the equilibrium every Lie derivative of ∇h vanishes.
        let p = probe_rank_condition(&osc, &sv(&[0.0, 0.0]), 2).unwrap();
        assert_eq!(p.rank, 0);
        let p = probe_rank_condition(&osc, &sv(&[1.0, 0.0]), 2).unwrap();
        assert_eq!(p.rank, 2);
        assert!((p.rows[1][0] - 0.0).abs() < 1e-9 && (p.rows[1][1] + 1.0).abs() < 1e-9);

        let integ = make_integrator();
        for x in [-2.0, 0.0, 3.5] {
            assert_eq!(probe_rank_condition(&integ, &sv(&[x]), 3).unwrap().rank, 1);
        }
        assert!(matches!(
            probe_rank_condition(&osc, &sv(&[0.0, 0.0]), 10),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn rank_probe_pendulum_rows_match_hand_derivation() {
        // Z = (sin q, p), f = (p, −sin q) ⇒ L_f Z = J_Z f = (p cos q, −sin q).
        let pend = make_pendulum(1.0, 1.0, 1.0).unwrap();
        let (q, p): (f64, f64) = (0.5, 0.3);
        let probe = probe_rank_condition(&pend, &sv(&[q, p]), 1).unwrap();
        assert!((probe.rows[1][0] - p * q.cos()).abs() < 1e-6);
        assert!((probe.rows[1][1] + q.sin()).abs() < 1e-6);
        assert_eq!(probe.rank, 2);
    }
}
