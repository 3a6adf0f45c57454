//! Affine-in-control subsystem models `ẋ = f(x) + g(x)u`, `y = h(x)`, with a
//! scalar input per subsystem, and the small zoo of conservative models used
//! throughout the crate.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{non_finite, Error, Result};

/// A finite, non-empty state vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct StateVector(Vec<f64>);

impl StateVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidInput("state vector must be non-empty".into()));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "state entry {i} is not finite ({})",
                values[i]
            )));
        }
        Ok(Self(values))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl TryFrom<Vec<f64>> for StateVector {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Self::new(values)
    }
}

impl From<StateVector> for Vec<f64> {
    fn from(s: StateVector) -> Self {
        s.0
    }
}

impl std::ops::Index<usize> for StateVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Raw evaluation interface of an affine-in-control system with one input.
///
/// Implementations write vector results into `out`, which always has length
/// `state_dim()`. They must be pure: equal inputs give bit-identical outputs.
pub trait AffineSystem: Send + Sync {
    fn state_dim(&self) -> usize;
    /// Drift `f(x)`.
    fn drift(&self, x: &[f64], out: &mut [f64]);
    /// Input column `g(x)`.
    fn input_map(&self, x: &[f64], out: &mut [f64]);
    /// Output `h(x)`.
    fn output(&self, x: &[f64]) -> f64;
    /// Gradient `∇h(x)`.
    fn output_gradient(&self, x: &[f64], out: &mut [f64]);
    fn label(&self) -> &str;
}

/// Shared handle to an [`AffineSystem`] with dimension-checked evaluation.
#[derive(Clone)]
pub struct SubsystemModel {
    inner: Arc<dyn AffineSystem>,
}

impl fmt::Debug for SubsystemModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SubsystemModel")
            .field("label", &self.label())
            .field("state_dim", &self.state_dim())
            .finish()
    }
}

impl SubsystemModel {
    pub fn from_system(system: impl AffineSystem + 'static) -> Self {
        Self {
            inner: Arc::new(system),
        }
    }

    pub fn state_dim(&self) -> usize {
        self.inner.state_dim()
    }

    /// Input dimension; fixed at one.
    pub fn input_dim(&self) -> usize {
        1
    }

    pub fn label(&self) -> &str {
        self.inner.label()
    }

    pub fn system(&self) -> &dyn AffineSystem {
        self.inner.as_ref()
    }

    fn check_dim(&self, x: &StateVector) -> Result<()> {
        if x.dim() != self.state_dim() {
            return Err(Error::InvalidInput(format!(
                "{}: state has dimension {}, model expects {}",
                self.label(),
                x.dim(),
                self.state_dim()
            )));
        }
        Ok(())
    }

    fn eval_field(
        &self,
        x: &StateVector,
        name: &str,
        field: impl Fn(&[f64], &mut [f64]),
    ) -> Result<StateVector> {
        self.check_dim(x)?;
        let mut out = vec![0.0; self.state_dim()];
        field(x.as_slice(), &mut out);
        if out.iter().any(|v| !v.is_finite()) {
            return Err(non_finite(format!("{}: {name} is not finite at {:?}", self.label(), x.as_slice())));
        }
        Ok(StateVector(out))
    }

    pub fn eval_drift(&self, x: &StateVector) -> Result<StateVector> {
        self.eval_field(x, "drift", |x, out| self.inner.drift(x, out))
    }

    pub fn eval_input_map(&self, x: &StateVector) -> Result<StateVector> {
        self.eval_field(x, "input map", |x, out| self.inner.input_map(x, out))
    }

    pub fn eval_output_gradient(&self, x: &StateVector) -> Result<StateVector> {
        self.eval_field(x, "output gradient", |x, out| {
            self.inner.output_gradient(x, out)
        })
    }

    pub fn eval_output(&self, x: &StateVector) -> Result<f64> {
        self.check_dim(x)?;
        let y = self.inner.output(x.as_slice());
        if !y.is_finite() {
            return Err(non_finite(format!("{}: output is not finite", self.label())));
        }
        Ok(y)
    }

    /// `L_f h(x) = ∇h(x)·f(x)`, the rate of change of the output under zero control.
    pub fn lie_drift_output(&self, x: &StateVector) -> Result<f64> {
        let grad = self.eval_output_gradient(x)?;
        let f = self.eval_drift(x)?;
        Ok(dot(grad.as_slice(), f.as_slice()))
    }

    /// `L_g h(x) = ∇h(x)·g(x)`, the sensitivity of the output rate to the input.
    pub fn lie_input_output(&self, x: &StateVector) -> Result<f64> {
        let grad = self.eval_output_gradient(x)?;
        let g = self.eval_input_map(x)?;
        Ok(dot(grad.as_slice(), g.as_slice()))
    }

    /// Unchecked `∇h·g` on a raw slice; used on hot integration paths.
    pub(crate) fn lie_input_output_raw(&self, x: &[f64], scratch: &mut Scratch) -> f64 {
        let n = self.state_dim();
        scratch.resize(n);
        self.inner.output_gradient(x, &mut scratch.a[..n]);
        self.inner.input_map(x, &mut scratch.b[..n]);
        dot(&scratch.a[..n], &scratch.b[..n])
    }
}

/// Reusable buffers for raw evaluations.
#[derive(Debug, Default)]
pub(crate) struct Scratch {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl Scratch {
    pub fn resize(&mut self, n: usize) {
        if self.a.len() < n {
            self.a.resize(n, 0.0);
            self.b.resize(n, 0.0);
        }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |acc, (x, y)| acc + x * y)
}

/// Harmonic oscillator `q̇ = p`, `ṗ = −ω²q + u` with energy output.
#[derive(Debug, Clone)]
pub struct Oscillator {
    omega_sq: f64,
    label: String,
}

impl AffineSystem for Oscillator {
    fn state_dim(&self) -> usize {
        2
    }

    fn drift(&self, x: &[f64], out: &mut [f64]) {
        out[0] = x[1];
        out[1] = -(self.omega_sq * x[0]);
    }

    fn input_map(&self, _x: &[f64], out: &mut [f64]) {
        out[0] = 0.0;
        out[1] = 1.0;
    }

    fn output(&self, x: &[f64]) -> f64 {
        0.5 * (self.omega_sq * x[0] * x[0] + x[1] * x[1])
    }

    fn output_gradient(&self, x: &[f64], out: &mut [f64]) {
        out[0] = self.omega_sq * x[0];
        out[1] = x[1];
    }

    fn label(&self) -> &str {
        &self.label
    }
}

/// Planar pendulum in angle/momentum coordinates, torque input on `p`.
/// The angle is never wrapped.
#[derive(Debug, Clone)]
pub struct Pendulum {
    inertia: f64,
    mgl: f64,
    label: String,
}

impl AffineSystem for Pendulum {
    fn state_dim(&self) -> usize {
        2
    }

    fn drift(&self, x: &[f64], out: &mut [f64]) {
        out[0] = x[1] / self.inertia;
        out[1] = -(self.mgl * x[0].sin());
    }

    fn input_map(&self, _x: &[f64], out: &mut [f64]) {
        out[0] = 0.0;
        out[1] = 1.0;
    }

    fn output(&self, x: &[f64]) -> f64 {
        // 1 − cos q written as 2 sin²(q/2) to avoid cancellation near q = 0.
        let s = (0.5 * x[0]).sin();
        x[1] * x[1] / (2.0 * self.inertia) + self.mgl * 2.0 * s * s
    }

    fn output_gradient(&self, x: &[f64], out: &mut [f64]) {
        out[0] = self.mgl * x[0].sin();
        out[1] = x[1] / self.inertia;
    }

    fn label(&self) -> &str {
        &self.label
    }
}

type VectorFn = dyn Fn(&[f64]) -> Vec<f64> + Send + Sync;
type ScalarFn = dyn Fn(&[f64]) -> f64 + Send + Sync;

/// User-supplied model. Nothing about it (conservativity, gradient
/// correctness) is assumed; run the diagnostics on it.
pub struct CustomSystem {
    state_dim: usize,
    drift: Box<VectorFn>,
    input_map: Box<VectorFn>,
    output: Box<ScalarFn>,
    output_gradient: Box<VectorFn>,
    label: String,
}

fn copy_checked(src: Vec<f64>, out: &mut [f64]) {
    // A callable returning the wrong length poisons the result instead of
    // panicking so the evaluation layer reports it as a domain error.
    if src.len() == out.len() {
        out.copy_from_slice(&src);
    } else {
        out.fill(f64::NAN);
    }
}

impl AffineSystem for CustomSystem {
    fn state_dim(&self) -> usize {
        self.state_dim
    }

    fn drift(&self, x: &[f64], out: &mut [f64]) {
        copy_checked((self.drift)(x), out)
    }

    fn input_map(&self, x: &[f64], out: &mut [f64]) {
        copy_checked((self.input_map)(x), out)
    }

    fn output(&self, x: &[f64]) -> f64 {
        (self.output)(x)
    }

    fn output_gradient(&self, x: &[f64], out: &mut [f64]) {
        copy_checked((self.output_gradient)(x), out)
    }

    fn label(&self) -> &str {
        &self.label
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be positive and finite, got {v}")))
    }
}

/// Unit-mass oscillator with natural frequency `omega`:
/// `h = (ω²q² + p²)/2`.
pub fn make_oscillator(omega: f64) -> Result<SubsystemModel> {
    positive("omega", omega)?;
    Ok(SubsystemModel::from_system(Oscillator {
        omega_sq: omega * omega,
        label: format!("oscillator(omega={omega})"),
    }))
}

/// Pendulum with `h = p²/(2ml²) + mgl(1 − cos q)`.
pub fn make_pendulum(mass: f64, length: f64, gravity: f64) -> Result<SubsystemModel> {
    positive("mass", mass)?;
    positive("length", length)?;
    positive("gravity", gravity)?;
    Ok(SubsystemModel::from_system(Pendulum {
        inertia: mass * length * length,
        mgl: mass * gravity * length,
        label: format!("pendulum(m={mass}, l={length}, g={gravity})"),
    }))
}

pub fn make_custom<F, G, H, DH>(
    state_dim: usize,
    drift: F,
    input_map: G,
    output: H,
    output_gradient: DH,
    label: impl Into<String>,
) -> SubsystemModel
where
    F: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    G: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    H: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    DH: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
{
    SubsystemModel::from_system(CustomSystem {
        state_dim,
        drift: Box::new(drift),
        input_map: Box::new(input_map),
        output: Box::new(output),
        output_gradient: Box::new(output_gradient),
        label: label.into(),
    })
}

/// `ẋ = u`, `y = x`.
pub fn make_integrator() -> SubsystemModel {
    make_custom(
        1,
        |_| vec![0.0],
        |_| vec![1.0],
        |x| x[0],
        |_| vec![1.0],
        "integrator",
    )
}

/// Oscillator with negative damping `ṗ = −q + c·p`; not conservative.
pub fn make_damped_oscillator(c: f64) -> SubsystemModel {
    make_custom(
        2,
        move |x| vec![x[1], -x[0] + c * x[1]],
        |_| vec![0.0, 1.0],
        |x| 0.5 * (x[0] * x[0] + x[1] * x[1]),
        |x| vec![x[0], x[1]],
        format!("damped-oscillator(c={c})"),
    )
}

/// Ordered collection of subsystems with cyclic neighbour indexing.
#[derive(Debug, Clone)]
pub struct NetworkSystem {
    subsystems: Vec<SubsystemModel>,
    offsets: Vec<usize>,
}

impl NetworkSystem {
    /// A network of at least two subsystems.
    pub fn new(subsystems: Vec<SubsystemModel>) -> Result<Self> {
        if subsystems.len() < 2 {
            return Err(Error::InvalidConfig(format!(
                "a network needs at least 2 subsystems, got {}",
                subsystems.len()
            )));
        }
        Ok(Self::build(subsystems))
    }

    /// A single subsystem wrapped for the tracking and open-loop paths.
    pub fn single(model: SubsystemModel) -> Self {
        Self::build(vec![model])
    }

    fn build(subsystems: Vec<SubsystemModel>) -> Self {
        let mut offsets = Vec::with_capacity(subsystems.len() + 1);
        let mut acc = 0;
        offsets.push(0);
        for s in &subsystems {
            acc += s.state_dim();
            offsets.push(acc);
        }
        Self { subsystems, offsets }
    }

    pub fn len(&self) -> usize {
        self.subsystems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subsystems.is_empty()
    }

    pub fn subsystems(&self) -> &[SubsystemModel] {
        &self.subsystems
    }

    pub fn subsystem(&self, i: usize) -> &SubsystemModel {
        &self.subsystems[i]
    }

    /// Total dimension of the stacked state.
    pub fn total_dim(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    /// Range of subsystem `i` inside the stacked state.
    pub fn range(&self, i: usize) -> std::ops::Range<usize> {
        self.offsets[i]..self.offsets[i + 1]
    }

    /// Zero-based index of the neighbour `offset` steps away, wrapping around.
    pub fn neighbor_of(&self, i: usize, offset: isize) -> usize {
        let n = self.len() as isize;
        (i as isize + offset).rem_euclid(n) as usize
    }

    /// Checks per-subsystem dimensions and flattens the states.
    pub fn stack(&self, states: &[StateVector]) -> Result<Vec<f64>> {
        if states.len() != self.len() {
            return Err(Error::InvalidInput(format!(
                "expected {} subsystem states, got {}",
                self.len(),
                states.len()
            )));
        }
        let mut flat = Vec::with_capacity(self.total_dim());
        for (i, (model, x)) in self.subsystems.iter().zip(states).enumerate() {
            if x.dim() != model.state_dim() {
                return Err(Error::InvalidInput(format!(
                    "subsystem {}: state has dimension {}, model expects {}",
                    i + 1,
                    x.dim(),
                    model.state_dim()
                )));
            }
            flat.extend_from_slice(x.as_slice());
        }
        Ok(flat)
    }

    /// Splits a stacked state back into per-subsystem vectors.
    pub fn unstack(&self, flat: &[f64]) -> Result<Vec<StateVector>> {
        (0..self.len())
            .map(|i| StateVector::new(flat[self.range(i)].to_vec()))
            .collect()
    }

    pub(crate) fn outputs_raw(&self, flat: &[f64], out: &mut [f64]) {
        for (i, model) in self.subsystems.iter().enumerate() {
            out[i] = model.system().output(&flat[self.range(i)]);
        }
    }

    pub fn outputs(&self, states: &[StateVector]) -> Result<Vec<f64>> {
        self.subsystems
            .iter()
            .zip(states)
            .map(|(m, x)| m.eval_output(x))
            .collect()
    }
}
