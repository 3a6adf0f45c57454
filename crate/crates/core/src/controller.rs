//! Speed-gradient feedback laws.
//!
//! Alignment drives the outputs of a network to a common value by descending
//! the cyclic goal `Q = Σ (yᵢ − yᵢ₊₁)²`:
//!
//! ```text
//! uᵢ = −γ · 2(∇hᵢ·gᵢ) · (2yᵢ − yᵢ₋₁ − yᵢ₊₁)
//! ```
//!
//! For conservative subsystems (`∇hᵢ·fᵢ ≡ 0`) this gives
//! `Q̇ = −γ Σ (2∇hᵢ·gᵢ)² (2yᵢ − yᵢ₋₁ − yᵢ₊₁)² ≤ 0`.
//!
//! Tracking drives an output to a target `y*` with
//! `u = −γ (∇h·g)(h − y*)`, the same construction applied to `Q = ½(h − y*)²`.
//! Inside a network each subsystem tracks the target independently.
//!
//! Subsystem indices are zero-based.

use serde::{Deserialize, Serialize};

use crate::dynamics::{NetworkSystem, Scratch, StateVector, SubsystemModel};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ControllerKind {
    Alignment,
    Tracking,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerSpec {
    kind: ControllerKind,
    gain: f64,
    target: Option<f64>,
    saturation: Option<f64>,
}

impl ControllerSpec {
    pub fn new(
        kind: ControllerKind,
        gain: f64,
        target: Option<f64>,
        saturation: Option<f64>,
    ) -> Result<Self> {
        if !(gain > 0.0 && gain.is_finite()) {
            return Err(Error::InvalidParameter(format!("gain must be positive, got {gain}")));
        }
        if let Some(s) = saturation {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "saturation must be positive, got {s}"
                )));
            }
        }
        match (kind, target) {
            (ControllerKind::Tracking, None) => {
                return Err(Error::InvalidConfig("tracking controller requires a target".into()))
            }
            (ControllerKind::Tracking, Some(t)) if !t.is_finite() => {
                return Err(Error::InvalidParameter(format!("target must be finite, got {t}")))
            }
            _ => {}
        }
        Ok(Self {
            kind,
            gain,
            target,
            saturation,
        })
    }

    pub fn alignment(gain: f64) -> Result<Self> {
        Self::new(ControllerKind::Alignment, gain, None, None)
    }

    pub fn tracking(gain: f64, target: f64) -> Result<Self> {
        Self::new(ControllerKind::Tracking, gain, Some(target), None)
    }

    pub fn with_saturation(self, u_max: f64) -> Result<Self> {
        Self::new(self.kind, self.gain, self.target, Some(u_max))
    }

    pub fn kind(&self) -> ControllerKind {
        self.kind
    }

    pub fn gain(&self) -> f64 {
        self.gain
    }

    pub fn target(&self) -> Option<f64> {
        self.target
    }

    pub fn saturation(&self) -> Option<f64> {
        self.saturation
    }

    fn clip(&self, u: f64) -> (f64, bool) {
        match self.saturation {
            Some(m) if u.abs() > m => (u.clamp(-m, m), true),
            _ => (u, false),
        }
    }
}

/// One scalar input per subsystem.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlVector(pub Vec<f64>);

impl ControlVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

fn require_network(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidConfig(format!("alignment requires N >= 2, got N = {n}")));
    }
    Ok(())
}

/// `2yᵢ − yᵢ₋₁ − yᵢ₊₁` with cyclic indices.
pub fn cyclic_error(outputs: &[f64], i: usize) -> Result<f64> {
    let n = outputs.len();
    require_network(n)?;
    if i >= n {
        return Err(Error::InvalidInput(format!("index {i} out of range for N = {n}")));
    }
    Ok(cyclic_error_raw(outputs, i))
}

fn cyclic_error_raw(y: &[f64], i: usize) -> f64 {
    let n = y.len();
    2.0 * y[i] - y[(i + n - 1) % n] - y[(i + 1) % n]
}

/// Cyclic sum of squared consecutive differences.
pub fn goal_value(outputs: &[f64]) -> Result<f64> {
    require_network(outputs.len())?;
    Ok(goal_value_raw(outputs))
}

pub(crate) fn goal_value_raw(y: &[f64]) -> f64 {
    let n = y.len();
    (0..n)
        .map(|i| {
            let d = y[i] - y[(i + 1) % n];
            d * d
        })
        .sum()
}

fn require_kind(spec: &ControllerSpec, kind: ControllerKind) -> Result<()> {
    if spec.kind != kind {
        return Err(Error::InvalidConfig(format!(
            "expected a {kind:?} controller, got {:?}",
            spec.kind
        )));
    }
    Ok(())
}

fn lie_factors(net: &NetworkSystem, states: &[StateVector]) -> Result<Vec<f64>> {
    net.subsystems()
        .iter()
        .zip(states)
        .map(|(m, x)| m.lie_input_output(x))
        .collect()
}

fn prepare(
    net: &NetworkSystem,
    states: &[StateVector],
    spec: &ControllerSpec,
) -> Result<(Vec<f64>, Vec<f64>)> {
    require_kind(spec, ControllerKind::Alignment)?;
    require_network(net.len())?;
    net.stack(states)?;
    Ok((net.outputs(states)?, lie_factors(net, states)?))
}

/// The alignment law, clipped to the saturation bound when one is set.
pub fn alignment_control(
    net: &NetworkSystem,
    states: &[StateVector],
    spec: &ControllerSpec,
) -> Result<ControlVector> {
    let (y, psi) = prepare(net, states, spec)?;
    let u = (0..y.len())
        .map(|i| spec.clip(-spec.gain * 2.0 * psi[i] * cyclic_error_raw(&y, i)).0)
        .collect();
    Ok(ControlVector(u))
}

/// The single-output tracking law.
pub fn tracking_control(
    model: &SubsystemModel,
    x: &StateVector,
    spec: &ControllerSpec,
) -> Result<f64> {
    require_kind(spec, ControllerKind::Tracking)?;
    let target = spec
        .target
        .ok_or_else(|| Error::InvalidConfig("tracking controller requires a target".into()))?;
    let y = model.eval_output(x)?;
    let psi = model.lie_input_output(x)?;
    Ok(spec.clip(-spec.gain * psi * (y - target)).0)
}

/// Closed-loop `Q̇` for conservative subsystems under the unclipped law.
pub fn goal_rate(net: &NetworkSystem, states: &[StateVector], spec: &ControllerSpec) -> Result<f64> {
    let (y, psi) = prepare(net, states, spec)?;
    Ok(alignment_rate_raw(spec.gain, &y, &psi))
}

fn alignment_rate_raw(gain: f64, y: &[f64], psi: &[f64]) -> f64 {
    let s: f64 = (0..y.len())
        .map(|i| {
            let a = 2.0 * psi[i];
            let e = cyclic_error_raw(y, i);
            a * a * e * e
        })
        .sum();
    -gain * s
}

/// Goal value recorded along a trajectory: the cyclic goal for alignment
/// and open-loop networks, `½ Σ (yᵢ − y*)²` for tracking, zero for a single
/// open-loop subsystem.
pub(crate) fn recorded_goal(spec: Option<&ControllerSpec>, y: &[f64]) -> f64 {
    match spec {
        Some(s) if s.kind == ControllerKind::Tracking => {
            let target = s.target.unwrap_or(0.0);
            y.iter().map(|v| 0.5 * (v - target) * (v - target)).sum()
        }
        _ if y.len() >= 2 => goal_value_raw(y),
        _ => 0.0,
    }
}

/// Analytic `Q̇` matching [`recorded_goal`], evaluated with the unclipped law.
pub(crate) fn recorded_goal_rate(spec: Option<&ControllerSpec>, y: &[f64], psi: &[f64]) -> f64 {
    match spec {
        None => 0.0,
        Some(s) => match s.kind {
            ControllerKind::Alignment => alignment_rate_raw(s.gain, y, psi),
            ControllerKind::Tracking => {
                let target = s.target.unwrap_or(0.0);
                let sum: f64 = y
                    .iter()
                    .zip(psi)
                    .map(|(v, p)| p * p * (v - target) * (v - target))
                    .sum();
                -s.gain * sum
            }
        },
    }
}

/// Buffers for evaluating a static state feedback on stacked states.
#[derive(Debug)]
pub(crate) struct Feedback<'a> {
    net: &'a NetworkSystem,
    spec: Option<&'a ControllerSpec>,
    pub outputs: Vec<f64>,
    pub lie: Vec<f64>,
    pub controls: Vec<f64>,
    scratch: Scratch,
}

impl<'a> Feedback<'a> {
    pub fn new(net: &'a NetworkSystem, spec: Option<&'a ControllerSpec>) -> Result<Self> {
        if let Some(ControllerKind::Alignment) = spec.map(|s| s.kind) {
            require_network(net.len())?;
        }
        let n = net.len();
        Ok(Self {
            net,
            spec,
            outputs: vec![0.0; n],
            lie: vec![0.0; n],
            controls: vec![0.0; n],
            scratch: Scratch::default(),
        })
    }

    pub fn spec(&self) -> Option<&'a ControllerSpec> {
        self.spec
    }

    /// Fills outputs, Lie factors and controls; returns whether any control was clipped.
    pub fn evaluate(&mut self, flat: &[f64]) -> bool {
        let net = self.net;
        net.outputs_raw(flat, &mut self.outputs);
        for (i, m) in net.subsystems().iter().enumerate() {
            self.lie[i] = m.lie_input_output_raw(&flat[net.range(i)], &mut self.scratch);
        }
        let Some(spec) = self.spec else {
            self.controls.fill(0.0);
            return false;
        };
        let mut clipped = false;
        for i in 0..self.outputs.len() {
            let raw = match spec.kind {
                ControllerKind::Alignment => {
                    -spec.gain * 2.0 * self.lie[i] * cyclic_error_raw(&self.outputs, i)
                }
                ControllerKind::Tracking => {
                    -spec.gain * self.lie[i] * (self.outputs[i] - spec.target.unwrap_or(0.0))
                }
            };
            let (u, c) = spec.clip(raw);
            self.controls[i] = u;
            clipped |= c;
        }
        clipped
    }

    /// Closed-loop vector field `fᵢ(xᵢ) + gᵢ(xᵢ)uᵢ` into `out`; returns the clipping flag.
    pub fn vector_field(&mut self, flat: &[f64], out: &mut [f64]) -> bool {
        let clipped = self.evaluate(flat);
        let net = self.net;
        for (i, m) in net.subsystems().iter().enumerate() {
            let r = net.range(i);
            let n = r.len();
            self.scratch.resize(n);
            let sys = m.system();
            sys.drift(&flat[r.clone()], &mut out[r.clone()]);
            let u = self.controls[i];
            if u != 0.0 {
                sys.input_map(&flat[r.clone()], &mut self.scratch.b[..n]);
                for (o, g) in out[r].iter_mut().zip(&self.scratch.b[..n]) {
                    *o += g * u;
                }
            }
        }
        clipped
    }
}
