//! Explicit Runge–Kutta integration of the open- or closed-loop network.
//!
//! The controller is a static state feedback, so controls are recomputed at
//! every stage evaluation rather than held over a step.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::controller::{recorded_goal, recorded_goal_rate, ControllerSpec, Feedback};
use crate::dynamics::{NetworkSystem, StateVector};
use crate::error::{Error, Result};

/// Smallest step the adaptive integrator may take.
pub const MIN_STEP: f64 = 1e-12;
/// States beyond this magnitude mark a trajectory as unbounded.
pub const BOUNDEDNESS_LIMIT: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Method {
    Rk4,
    Rk45,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorSpec {
    pub method: Method,
    /// Fixed step for RK4, initial step for RK45.
    pub step: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub horizon: f64,
}

impl IntegratorSpec {
    pub const DEFAULT_REL_TOL: f64 = 1e-8;
    pub const DEFAULT_ABS_TOL: f64 = 1e-10;

    pub fn rk4(step: f64, horizon: f64) -> Result<Self> {
        Self::new(Method::Rk4, step, horizon, Self::DEFAULT_REL_TOL, Self::DEFAULT_ABS_TOL)
    }

    pub fn rk45(step: f64, horizon: f64, rel_tol: f64, abs_tol: f64) -> Result<Self> {
        Self::new(Method::Rk45, step, horizon, rel_tol, abs_tol)
    }

    pub fn new(method: Method, step: f64, horizon: f64, rel_tol: f64, abs_tol: f64) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::InvalidConfig(format!("horizon must be positive, got {horizon}")));
        }
        if !(step > 0.0 && step < horizon) {
            return Err(Error::InvalidConfig(format!(
                "step must satisfy 0 < step < horizon, got step {step}, horizon {horizon}"
            )));
        }
        check_tolerances(rel_tol, abs_tol)?;
        Ok(Self {
            method,
            step,
            rel_tol,
            abs_tol,
            horizon,
        })
    }
}

fn check_tolerances(rel_tol: f64, abs_tol: f64) -> Result<()> {
    if !(rel_tol > 0.0 && rel_tol.is_finite() && abs_tol > 0.0 && abs_tol.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "tolerances must be positive, got rel_tol {rel_tol}, abs_tol {abs_tol}"
        )));
    }
    Ok(())
}

/// Recorded samples of a simulation. All per-time sequences share one length.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<StateVector>>,
    pub outputs: Vec<Vec<f64>>,
    pub controls: Vec<Vec<f64>>,
    /// Goal value at each sample.
    pub goal: Vec<f64>,
    /// Analytic `Q̇` at each sample, from the unclipped law.
    pub goal_rate_bound: Vec<f64>,
    /// `∇hᵢ·gᵢ` per subsystem at each sample.
    pub lie_factors: Vec<Vec<f64>>,
    /// Whether saturation clipped any control since the previous sample.
    pub clipped: Vec<bool>,
    /// `None` for open-loop runs.
    pub controller: Option<ControllerSpec>,
    /// Largest absolute state entry seen at any step.
    pub max_abs_state: f64,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn subsystem_count(&self) -> usize {
        self.outputs.first().map_or(0, Vec::len)
    }

    pub fn any_clipped(&self) -> bool {
        self.clipped.iter().any(|&c| c)
    }

    pub fn is_bounded(&self) -> bool {
        self.max_abs_state <= BOUNDEDNESS_LIMIT
    }

    pub fn final_states(&self) -> Option<&[StateVector]> {
        self.states.last().map(Vec::as_slice)
    }
}

/// A failed simulation together with everything recorded before the failure.
#[derive(Debug)]
pub struct SimulationFailure {
    pub error: Error,
    pub partial: Box<Trajectory>,
}

impl fmt::Display for SimulationFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({} samples recorded", self.error, self.partial.len())?;
        if let Some(t) = self.partial.times.last() {
            write!(f, ", last at t = {t}")?;
        }
        write!(f, ")")
    }
}

impl std::error::Error for SimulationFailure {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.error)
    }
}

fn check_finite(x: &[f64], t: f64) -> Result<()> {
    if let Some(i) = x.iter().position(|v| !v.is_finite()) {
        return Err(Error::NumericDomain {
            time: Some(t),
            what: format!("state component {i} became {}", x[i]),
        });
    }
    Ok(())
}

/// Stage buffers shared by both integrators.
struct Stepper<'a> {
    fb: Feedback<'a>,
    k: [Vec<f64>; 7],
    tmp: Vec<f64>,
    err: Vec<f64>,
}

impl<'a> Stepper<'a> {
    fn new(fb: Feedback<'a>, dim: usize) -> Self {
        Self {
            fb,
            k: std::array::from_fn(|_| vec![0.0; dim]),
            tmp: vec![0.0; dim],
            err: vec![0.0; dim],
        }
    }

    fn stage(&mut self, x: &[f64], coeffs: &[(usize, f64)], h: f64, into: usize, t: f64) -> Result<bool> {
        self.tmp.copy_from_slice(x);
        for &(j, a) in coeffs {
            for (v, k) in self.tmp.iter_mut().zip(&self.k[j]) {
                *v += h * a * k;
            }
        }
        check_finite(&self.tmp, t)?;
        let mut out = std::mem::take(&mut self.k[into]);
        let clipped = self.fb.vector_field(&self.tmp, &mut out);
        self.k[into] = out;
        Ok(clipped)
    }

    /// Classical RK4 in place; returns whether any stage clipped.
    fn rk4(&mut self, x: &mut [f64], h: f64, t: f64) -> Result<bool> {
        let mut clipped = self.stage(x, &[], h, 0, t)?;
        clipped |= self.stage(x, &[(0, 0.5)], h, 1, t)?;
        clipped |= self.stage(x, &[(1, 0.5)], h, 2, t)?;
        clipped |= self.stage(x, &[(2, 1.0)], h, 3, t)?;
        let [k1, k2, k3, k4, ..] = &self.k;
        for i in 0..x.len() {
            x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        check_finite(x, t + h)?;
        Ok(clipped)
    }

    /// One Dormand–Prince 5(4) attempt. Writes the fifth-order candidate to
    /// `out` and returns the scaled RMS error norm and the clipping flag.
    fn dopri(&mut self, x: &[f64], out: &mut [f64], h: f64, t: f64, rel_tol: f64, abs_tol: f64) -> Result<(f64, bool)> {
        let mut clipped = self.stage(x, &[], h, 0, t)?;
        clipped |= self.stage(x, &[(0, 1.0 / 5.0)], h, 1, t)?;
        clipped |= self.stage(x, &[(0, 3.0 / 40.0), (1, 9.0 / 40.0)], h, 2, t)?;
        clipped |= self.stage(x, &[(0, 44.0 / 45.0), (1, -56.0 / 15.0), (2, 32.0 / 9.0)], h, 3, t)?;
        clipped |= self.stage(
            x,
            &[
                (0, 19372.0 / 6561.0),
                (1, -25360.0 / 2187.0),
                (2, 64448.0 / 6561.0),
                (3, -212.0 / 729.0),
            ],
            h,
            4,
            t,
        )?;
        clipped |= self.stage(
            x,
            &[
                (0, 9017.0 / 3168.0),
                (1, -355.0 / 33.0),
                (2, 46732.0 / 5247.0),
                (3, 49.0 / 176.0),
                (4, -5103.0 / 18656.0),
            ],
            h,
            5,
            t,
        )?;
        const B: [f64; 6] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0];
        let coeffs: Vec<(usize, f64)> = B.iter().copied().enumerate().collect();
        clipped |= self.stage(x, &coeffs, h, 6, t)?;
        out.copy_from_slice(&self.tmp);

        // b − b̂ for the embedded fourth-order solution
        const E: [f64; 7] = [
            71.0 / 57600.0,
            0.0,
            -71.0 / 16695.0,
            71.0 / 1920.0,
            -17253.0 / 339200.0,
            22.0 / 525.0,
            -1.0 / 40.0,
        ];
        self.err.fill(0.0);
        for (j, e) in E.iter().enumerate() {
            for (acc, k) in self.err.iter_mut().zip(&self.k[j]) {
                *acc += h * e * k;
            }
        }
        let n = x.len() as f64;
        let sum: f64 = self
            .err
            .iter()
            .zip(x.iter().zip(out.iter()))
            .map(|(e, (a, b))| {
                let scale = abs_tol + rel_tol * a.abs().max(b.abs());
                (e / scale).powi(2)
            })
            .sum();
        Ok(((sum / n).sqrt(), clipped))
    }
}

/// One classical RK4 step of the closed loop (open loop when `spec` is `None`).
pub fn step_rk4(
    net: &NetworkSystem,
    states: &[StateVector],
    spec: Option<&ControllerSpec>,
    h: f64,
) -> Result<Vec<StateVector>> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidParameter(format!("step must be positive, got {h}")));
    }
    let mut x = net.stack(states)?;
    let mut stepper = Stepper::new(Feedback::new(net, spec)?, x.len());
    stepper.rk4(&mut x, h, 0.0)?;
    net.unstack(&x)
}

/// Result of one adaptive step attempt.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveStep {
    /// New states if accepted, otherwise the unchanged input.
    pub states: Vec<StateVector>,
    pub accepted: bool,
    pub next_step: f64,
    pub error_norm: f64,
}

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 5.0;

fn next_step(h: f64, err: f64) -> f64 {
    let factor = if err == 0.0 {
        MAX_FACTOR
    } else {
        (SAFETY * err.powf(-0.2)).clamp(MIN_FACTOR, MAX_FACTOR)
    };
    h * factor
}

/// One Dormand–Prince 5(4) attempt with step `h`.
pub fn step_rk45(
    net: &NetworkSystem,
    states: &[StateVector],
    spec: Option<&ControllerSpec>,
    h: f64,
    rel_tol: f64,
    abs_tol: f64,
) -> Result<AdaptiveStep> {
    check_tolerances(rel_tol, abs_tol)?;
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidParameter(format!("step must be positive, got {h}")));
    }
    let x = net.stack(states)?;
    let mut out = vec![0.0; x.len()];
    let mut stepper = Stepper::new(Feedback::new(net, spec)?, x.len());
    let (err, _) = stepper.dopri(&x, &mut out, h, 0.0, rel_tol, abs_tol)?;
    let accepted = err <= 1.0;
    let next = next_step(h, err);
    if !accepted && next < MIN_STEP {
        return Err(Error::StepUnderflow { time: 0.0, step: next });
    }
    Ok(AdaptiveStep {
        states: if accepted { net.unstack(&out)? } else { states.to_vec() },
        accepted,
        next_step: next,
        error_norm: err,
    })
}

struct Recorder<'a> {
    net: &'a NetworkSystem,
    traj: Trajectory,
}

impl<'a> Recorder<'a> {
    fn record(&mut self, fb: &mut Feedback<'_>, t: f64, x: &[f64], clipped_since: bool) -> Result<()> {
        let clipped_now = fb.evaluate(x);
        let spec = fb.spec();
        let tr = &mut self.traj;
        tr.times.push(t);
        tr.states.push(self.net.unstack(x)?);
        tr.goal.push(recorded_goal(spec, &fb.outputs));
        tr.goal_rate_bound.push(recorded_goal_rate(spec, &fb.outputs, &fb.lie));
        tr.outputs.push(fb.outputs.clone());
        tr.controls.push(fb.controls.clone());
        tr.lie_factors.push(fb.lie.clone());
        tr.clipped.push(clipped_since || clipped_now);
        Ok(())
    }
}

fn max_abs(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Integrates from `t = 0` to the horizon, recording the initial state, every
/// `record_every`-th step and the final state.
pub fn simulate(
    net: &NetworkSystem,
    initial: &[StateVector],
    controller: Option<&ControllerSpec>,
    integ: &IntegratorSpec,
    record_every: usize,
) -> std::result::Result<Trajectory, SimulationFailure> {
    let mut rec = Recorder {
        net,
        traj: Trajectory {
            controller: controller.copied(),
            ..Trajectory::default()
        },
    };
    match run(net, initial, controller, integ, record_every, &mut rec) {
        Ok(()) => Ok(rec.traj),
        Err(error) => Err(SimulationFailure {
            error,
            partial: Box::new(rec.traj),
        }),
    }
}

fn run(
    net: &NetworkSystem,
    initial: &[StateVector],
    controller: Option<&ControllerSpec>,
    integ: &IntegratorSpec,
    record_every: usize,
    rec: &mut Recorder<'_>,
) -> Result<()> {
    if record_every == 0 {
        return Err(Error::InvalidConfig("record_every must be at least 1".into()));
    }
    let mut x = net.stack(initial)?;
    let dim = x.len();
    let mut stepper = Stepper::new(Feedback::new(net, controller)?, dim);
    let mut probe = Feedback::new(net, controller)?;
    rec.traj.max_abs_state = max_abs(&x);
    rec.record(&mut probe, 0.0, &x, false)?;

    match integ.method {
        Method::Rk4 => {
            let h = integ.step;
            let t_end = integ.horizon;
            let ratio = t_end / h;
            let n_steps = if (ratio.round() * h - t_end).abs() <= 1e-9 * t_end {
                ratio.round() as usize
            } else {
                ratio.ceil() as usize
            };
            let mut clipped = false;
            for k in 0..n_steps {
                let t = k as f64 * h;
                let last = k + 1 == n_steps;
                let step = if last { t_end - t } else { h };
                clipped |= stepper.rk4(&mut x, step, t)?;
                rec.traj.max_abs_state = rec.traj.max_abs_state.max(max_abs(&x));
                if last || (k + 1) % record_every == 0 {
                    let t_next = if last { t_end } else { (k + 1) as f64 * h };
                    rec.record(&mut probe, t_next, &x, clipped)?;
                    clipped = false;
                }
            }
        }
        Method::Rk45 => {
            let mut t = 0.0;
            let mut h = integ.step;
            let mut accepted_steps = 0usize;
            let mut clipped = false;
            let mut candidate = vec![0.0; dim];
            while t < integ.horizon {
                let remaining = integ.horizon - t;
                let last = h >= remaining;
                let step = if last { remaining } else { h };
                let (err, c) =
                    stepper.dopri(&x, &mut candidate, step, t, integ.rel_tol, integ.abs_tol)?;
                let proposal = next_step(step, err);
                if err <= 1.0 {
                    x.copy_from_slice(&candidate);
                    t = if last { integ.horizon } else { t + step };
                    clipped |= c;
                    accepted_steps += 1;
                    rec.traj.max_abs_state = rec.traj.max_abs_state.max(max_abs(&x));
                    if last || accepted_steps.is_multiple_of(record_every) {
                        rec.record(&mut probe, t, &x, clipped)?;
                        clipped = false;
                    }
                    h = proposal;
                } else {
                    if proposal < MIN_STEP {
                        return Err(Error::StepUnderflow { time: t, step: proposal });
                    }
                    h = proposal;
                }
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{make_custom, make_integrator, make_oscillator, make_pendulum};

    fn sv(v: &[f64]) -> StateVector {
        StateVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn rk4_rotation_of_oscillator() {
        let net = NetworkSystem::single(make_oscillator(1.0).unwrap());
        let h: f64 = 0.01;
        let x = step_rk4(&net, &[sv(&[1.0, 0.0])], None, h).unwrap();
        assert!((x[0][0] - h.cos()).abs() < 1e-9);
        assert!((x[0][1] + h.sin()).abs() < 1e-9);
    }

    #[test]
    fn rk4_exact_for_constant_input() {
        let net = NetworkSystem::single(make_custom(
            1,
            |_| vec![1.0],
            |_| vec![1.0],
            |x| x[0],
            |_| vec![1.0],
            "constant-flow",
        ));
        let x = step_rk4(&net, &[sv(&[0.0])], None, 0.5).unwrap();
        assert_eq!(x[0][0], 0.5);
        let net = NetworkSystem::single(make_integrator());
        let x = step_rk4(&net, &[sv(&[0.0])], None, 0.5).unwrap();
        assert_eq!(x[0][0], 0.0);
    }

    #[test]
    fn rk4_consistency_with_vector_field() {
        let p = make_pendulum(1.0, 1.0, 1.0).unwrap();
        let net = NetworkSystem::new(vec![p.clone(), p]).unwrap();
        let spec = ControllerSpec::alignment(0.5).unwrap();
        let x0 = [sv(&[0.7, -0.3]), sv(&[-0.2, 1.1])];
        let mut fb = Feedback::new(&net, Some(&spec)).unwrap();
        let flat = net.stack(&x0).unwrap();
        let mut field = vec![0.0; 4];
        fb.vector_field(&flat, &mut field);
        let quotient = |h: f64| -> Vec<f64> {
            let x1 = net.stack(&step_rk4(&net, &x0, Some(&spec), h).unwrap()).unwrap();
            x1.iter().zip(&flat).map(|(a, b)| (a - b) / h).collect()
        };
        let (q6, q7) = (quotient(1e-6), quotient(1e-7));
        for i in 0..4 {
            let e6 = (q6[i] - field[i]).abs();
            let e7 = (q7[i] - field[i]).abs();
            assert!(e6 < 1e-5 && e7 < 1e-5, "component {i}: {e6} {e7}");
            // Richardson: (10·q7 − q6)/9 removes the O(h) term.
            let rich = (10.0 * q7[i] - q6[i]) / 9.0;
            assert!((rich - field[i]).abs() < 1e-6);
        }
    }

    #[test]
    fn rk4_non_finite_reports_time() {
        let net = NetworkSystem::single(make_custom(
            1,
            |x| vec![x[0] * x[0]],
            |_| vec![1.0],
            |x| x[0],
            |_| vec![1.0],
            "blowup",
        ));
        let integ = IntegratorSpec::rk4(0.1, 10.0).unwrap();
        let err = simulate(&net, &[sv(&[1.0])], None, &integ, 1).unwrap_err();
        assert!(matches!(err.error, Error::NumericDomain { time: Some(_), .. }));
        assert!(!err.partial.is_empty());
        assert_eq!(err.partial.times[0], 0.0);
    }

    #[test]
    fn rk45_returns_after_one_period() {
        let net = NetworkSystem::single(make_oscillator(1.0).unwrap());
        let rel_tol = 1e-8;
        let integ = IntegratorSpec::rk45(1e-3, 2.0 * std::f64::consts::PI, rel_tol, 1e-10).unwrap();
        let traj = simulate(&net, &[sv(&[1.0, 0.0])], None, &integ, 1).unwrap();
        let x = &traj.final_states().unwrap()[0];
        assert!((x[0] - 1.0).abs() <= rel_tol * 10.0);
        assert!(x[1].abs() <= rel_tol * 10.0);
        assert_eq!(*traj.times.last().unwrap(), 2.0 * std::f64::consts::PI);
    }

    #[test]
    fn rk45_agrees_with_rk4() {
        let net = NetworkSystem::single(make_pendulum(1.0, 1.0, 1.0).unwrap());
        let x0 = [sv(&[1.0, 0.5])];
        let a = simulate(&net, &x0, None, &IntegratorSpec::rk45(1e-3, 10.0, 1e-10, 1e-12).unwrap(), 1).unwrap();
        let b = simulate(&net, &x0, None, &IntegratorSpec::rk4(1e-4, 10.0).unwrap(), 100).unwrap();
        let xa = &a.final_states().unwrap()[0];
        let xb = &b.final_states().unwrap()[0];
        for i in 0..2 {
            assert!((xa[i] - xb[i]).abs() < 1e-6);
        }
    }

    #[test]
    fn rk45_rejects_bad_tolerance() {
        let net = NetworkSystem::single(make_oscillator(1.0).unwrap());
        assert!(step_rk45(&net, &[sv(&[1.0, 0.0])], None, 0.1, 0.0, 1e-10).is_err());
        assert!(IntegratorSpec::rk45(0.1, 1.0, 0.0, 1e-10).is_err());
    }

    #[test]
    fn rk45_step_controller() {
        let net = NetworkSystem::single(make_oscillator(1.0).unwrap());
        let s = step_rk45(&net, &[sv(&[1.0, 0.0])], None, 1e-3, 1e-8, 1e-10).unwrap();
        assert!(s.accepted);
        assert!(s.next_step <= 5.0 * 1e-3 && s.next_step > 1e-3);
        let s = step_rk45(&net, &[sv(&[1.0, 0.0])], None, 3.0, 1e-8, 1e-10).unwrap();
        assert!(!s.accepted);
        assert_eq!(s.states[0], sv(&[1.0, 0.0]));
        assert!(s.next_step >= 0.2 * 3.0 && s.next_step < 3.0);
    }

    #[test]
    fn rk45_underflow() {
        // ẋ = x² from x = 1 blows up at t = 1.
        let net = NetworkSystem::single(make_custom(
            1,
            |x| vec![x[0] * x[0]],
            |_| vec![1.0],
            |x| x[0],
            |_| vec![1.0],
            "blowup",
        ));
        let integ = IntegratorSpec::rk45(1e-3, 2.0, 1e-8, 1e-10).unwrap();
        let err = simulate(&net, &[sv(&[1.0])], None, &integ, 1).unwrap_err();
        assert!(
            matches!(err.error, Error::StepUnderflow { .. } | Error::NumericDomain { .. }),
            "{}",
            err.error
        );
    }

    #[test]
    fn integrator_spec_validation() {
        assert!(IntegratorSpec::rk4(1.0, 1.0).is_err());
        assert!(IntegratorSpec::rk4(0.0, 1.0).is_err());
        assert!(IntegratorSpec::rk4(0.1, -1.0).is_err());
        assert!(IntegratorSpec::rk4(0.1, 1.0).is_ok());
    }

    #[test]
    fn recording_layout() {
        let net = NetworkSystem::new(vec![make_oscillator(1.0).unwrap(), make_oscillator(1.0).unwrap()]).unwrap();
        let spec = ControllerSpec::alignment(0.5).unwrap();
        let integ = IntegratorSpec::rk4(0.01, 1.0).unwrap();
        let traj = simulate(&net, &[sv(&[1.0, 1.0]), sv(&[0.5, 0.5])], Some(&spec), &integ, 10).unwrap();
        assert_eq!(traj.len(), 11);
        assert_eq!(traj.times[10], 1.0);
        for seq_len in [traj.states.len(), traj.outputs.len(), traj.controls.len(), traj.goal.len(),
                        traj.goal_rate_bound.len(), traj.lie_factors.len(), traj.clipped.len()] {
            assert_eq!(seq_len, traj.len());
        }
        assert!(traj.times.windows(2).all(|w| w[0] < w[1]));
        for k in 0..traj.len() {
            assert_eq!(traj.goal[k], crate::controller::goal_value(&traj.outputs[k]).unwrap());
        }
        // uneven horizon: final partial step still lands on T
        let integ = IntegratorSpec::rk4(0.03, 1.0).unwrap();
        let traj = simulate(&net, &[sv(&[1.0, 1.0]), sv(&[0.5, 0.5])], Some(&spec), &integ, 7).unwrap();
        assert_eq!(*traj.times.last().unwrap(), 1.0);
        assert!(traj.times.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn open_loop_has_zero_controls() {
        let net = NetworkSystem::new(vec![make_oscillator(1.0).unwrap(), make_oscillator(1.0).unwrap()]).unwrap();
        let integ = IntegratorSpec::rk4(0.01, 1.0).unwrap();
        let traj = simulate(&net, &[sv(&[1.0, 1.0]), sv(&[0.5, 0.5])], None, &integ, 5).unwrap();
        assert!(traj.controls.iter().flatten().all(|&u| u == 0.0));
        assert!(traj.goal_rate_bound.iter().all(|&r| r == 0.0));
        assert!(traj.controller.is_none());
    }

    #[test]
    fn clipping_is_flagged() {
        let net = NetworkSystem::new(vec![make_oscillator(1.0).unwrap(), make_oscillator(1.0).unwrap()]).unwrap();
        let spec = ControllerSpec::alignment(1.0).unwrap().with_saturation(0.01).unwrap();
        let integ = IntegratorSpec::rk4(0.01, 1.0).unwrap();
        let traj = simulate(&net, &[sv(&[1.0, 1.0]), sv(&[0.5, 0.5])], Some(&spec), &integ, 5).unwrap();
        assert!(traj.any_clipped());
        assert!(traj.controls.iter().flatten().all(|u| u.abs() <= 0.01));
    }
}
