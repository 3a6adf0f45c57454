//! JSON experiment configuration.
//!
//! Unknown keys anywhere in the document are rejected. Omitted fields take
//! the defaults below; a parsed config always carries concrete values so it
//! serializes back to an equivalent document.

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::controller::{ControllerKind, ControllerSpec};
use crate::diagnostics::Theorem1Thresholds;
use crate::dynamics::{
    make_damped_oscillator, make_integrator, make_oscillator, make_pendulum, NetworkSystem,
    StateVector, SubsystemModel,
};
use crate::error::{Error, Result};
use crate::integrate::{IntegratorSpec, Method};

pub const DEFAULT_STEP: f64 = 1e-3;
pub const DEFAULT_HORIZON: f64 = 200.0;
pub const DEFAULT_RECORD_EVERY: usize = 10;
pub const DEFAULT_GAMMA: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub subsystems: Vec<SubsystemConfig>,
    pub controller: ControllerConfig,
    #[serde(default)]
    pub integrator: IntegratorConfig,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub outputs: OutputConfig,
    #[serde(default)]
    pub audit: Theorem1Thresholds,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelKind {
    #[serde(rename = "oscillator")]
    Oscillator,
    #[serde(rename = "pendulum")]
    Pendulum,
    /// A model looked up by name in a [`ModelRegistry`].
    #[serde(rename = "custom-ref")]
    CustomRef,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubsystemConfig {
    pub model: ModelKind,
    #[serde(default)]
    pub parameters: BTreeMap<String, f64>,
    /// Registry name, required for `custom-ref`.
    #[serde(default, rename = "ref")]
    pub reference: Option<String>,
    pub initial_state: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConfigControllerKind {
    Alignment,
    Tracking,
    /// Zero control; used for invariance checks.
    OpenLoop,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerConfig {
    pub kind: ConfigControllerKind,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default)]
    pub target: Option<f64>,
    #[serde(default)]
    pub saturation: Option<f64>,
    /// Half-width of the seeded uniform perturbation added to every initial coordinate.
    #[serde(default)]
    pub perturb_delta: Option<f64>,
}

fn default_gamma() -> f64 {
    DEFAULT_GAMMA
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorConfig {
    pub method: Method,
    pub step: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub horizon: f64,
    pub record_every: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            method: Method::Rk4,
            step: DEFAULT_STEP,
            rel_tol: IntegratorSpec::DEFAULT_REL_TOL,
            abs_tol: IntegratorSpec::DEFAULT_ABS_TOL,
            horizon: DEFAULT_HORIZON,
            record_every: DEFAULT_RECORD_EVERY,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default)]
    pub csv_path: Option<PathBuf>,
    #[serde(default)]
    pub report_path: Option<PathBuf>,
}

/// Parses and validates a config document.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| {
        use serde_json::error::Category;
        match e.classify() {
            Category::Data => Error::InvalidConfig(format!(
                "{e}"
            )),
            _ => Error::Parse {
                line: e.line(),
                column: e.column(),
                message: e.to_string(),
            },
        }
    })?;
    cfg.validate()?;
    Ok(cfg)
}

type ModelFactory = Box<dyn Fn(&BTreeMap<String, f64>) -> Result<SubsystemModel> + Send + Sync>;

/// Named models reachable through `"model": "custom-ref"`.
pub struct ModelRegistry {
    entries: BTreeMap<String, ModelFactory>,
}

impl std::fmt::Debug for ModelRegistry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_set().entries(self.entries.keys()).finish()
    }
}

impl Default for ModelRegistry {
    /// Ships `integrator` and `damped-oscillator` (parameter `c`, default 0.1).
    fn default() -> Self {
        let mut r = Self::empty();
        r.register("integrator", |p| {
            allow_params(p, &[], "integrator")?;
            Ok(make_integrator())
        });
        r.register("damped-oscillator", |p| {
            allow_params(p, &["c"], "damped-oscillator")?;
            Ok(make_damped_oscillator(p.get("c").copied().unwrap_or(0.1)))
        });
        r
    }
}

impl ModelRegistry {
    pub fn empty() -> Self {
        Self {
            entries: BTreeMap::new(),
        }
    }

    pub fn register(
        &mut self,
        name: impl Into<String>,
        factory: impl Fn(&BTreeMap<String, f64>) -> Result<SubsystemModel> + Send + Sync + 'static,
    ) {
        self.entries.insert(name.into(), Box::new(factory));
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    fn build(&self, name: &str, params: &BTreeMap<String, f64>) -> Result<SubsystemModel> {
        let factory = self.entries.get(name).ok_or_else(|| {
            Error::InvalidConfig(format!("unknown custom model reference `{name}`"))
        })?;
        factory(params)
    }
}

fn allow_params(params: &BTreeMap<String, f64>, allowed: &[&str], model: &str) -> Result<()> {
    for key in params.keys() {
        if !allowed.contains(&key.as_str()) {
            return Err(Error::InvalidConfig(format!(
                "unknown parameter `{key}` for model {model} (expected one of {allowed:?})"
            )));
        }
    }
    Ok(())
}

impl SubsystemConfig {
    pub fn build(&self, registry: &ModelRegistry) -> Result<SubsystemModel> {
        let p = &self.parameters;
        let get = |k: &str| p.get(k).copied().unwrap_or(1.0);
        match self.model {
            ModelKind::Oscillator => {
                allow_params(p, &["omega"], "oscillator")?;
                make_oscillator(get("omega"))
            }
            ModelKind::Pendulum => {
                allow_params(p, &["mass", "length", "gravity"], "pendulum")?;
                make_pendulum(get("mass"), get("length"), get("gravity"))
            }
            ModelKind::CustomRef => {
                let name = self.reference.as_deref().ok_or_else(|| {
                    Error::InvalidConfig("custom-ref subsystem requires a `ref` name".into())
                })?;
                registry.build(name, p)
            }
        }
    }
}

impl ControllerConfig {
    /// `None` for open loop.
    pub fn spec(&self) -> Result<Option<ControllerSpec>> {
        let kind = match self.kind {
            ConfigControllerKind::OpenLoop => return Ok(None),
            ConfigControllerKind::Alignment => ControllerKind::Alignment,
            ConfigControllerKind::Tracking => ControllerKind::Tracking,
        };
        ControllerSpec::new(kind, self.gamma, self.target, self.saturation).map(Some)
    }
}

impl IntegratorConfig {
    pub fn spec(&self) -> Result<IntegratorSpec> {
        if self.record_every == 0 {
            return Err(Error::InvalidConfig("integrator.record_every must be at least 1".into()));
        }
        IntegratorSpec::new(self.method, self.step, self.horizon, self.rel_tol, self.abs_tol)
    }
}

impl ExperimentConfig {
    /// Checks everything that does not need a model registry.
    pub fn validate(&self) -> Result<()> {
        let n = self.subsystems.len();
        match self.controller.kind {
            ConfigControllerKind::Alignment if n < 2 => {
                return Err(Error::InvalidConfig(format!("Alignment requires N ≥ 2, got N = {n}")))
            }
            ConfigControllerKind::Tracking | ConfigControllerKind::OpenLoop if n < 1 => {
                return Err(Error::InvalidConfig("at least one subsystem is required".into()))
            }
            _ => {}
        }
        if self.controller.target.is_some() && self.controller.kind != ConfigControllerKind::Tracking {
            return Err(Error::InvalidConfig(
                "controller.target is only valid for tracking".into(),
            ));
        }
        if let Some(d) = self.controller.perturb_delta {
            if !(d >= 0.0 && d.is_finite()) {
                return Err(Error::InvalidConfig(format!(
                    "controller.perturb_delta must be non-negative, got {d}"
                )));
            }
        }
        self.controller.spec()?;
        self.integrator.spec()?;
        for (i, s) in self.subsystems.iter().enumerate() {
            StateVector::new(s.initial_state.clone()).map_err(|e| {
                Error::InvalidConfig(format!("subsystems[{i}].initial_state: {e}"))
            })?;
            let expected = match s.model {
                ModelKind::Oscillator | ModelKind::Pendulum => Some(2),
                ModelKind::CustomRef => None,
            };
            if let Some(d) = expected {
                if s.initial_state.len() != d {
                    return Err(Error::InvalidConfig(format!(
                        "subsystems[{i}].initial_state has length {}, model expects {d}",
                        s.initial_state.len()
                    )));
                }
                s.build(&ModelRegistry::empty())
                    .map_err(|e| Error::InvalidConfig(format!("subsystems[{i}]: {e}")))?;
            }
        }
        Ok(())
    }

    pub fn network(&self, registry: &ModelRegistry) -> Result<NetworkSystem> {
        let models = self
            .subsystems
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let m = s.build(registry).map_err(|e| Error::InvalidConfig(format!("subsystems[{i}]: {e}")))?;
                if m.state_dim() != s.initial_state.len() {
                    return Err(Error::InvalidConfig(format!(
                        "subsystems[{i}].initial_state has length {}, model expects {}",
                        s.initial_state.len(),
                        m.state_dim()
                    )));
                }
                Ok(m)
            })
            .collect::<Result<Vec<_>>>()?;
        if models.len() == 1 {
            Ok(NetworkSystem::single(models.into_iter().next().unwrap()))
        } else {
            NetworkSystem::new(models)
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}
