//! Built-in scenarios. Each exercises a distinct conclusion of the alignment
//! or tracking results.

use std::collections::BTreeMap;

use super::config::{
    ConfigControllerKind, ControllerConfig, ExperimentConfig, IntegratorConfig, ModelKind,
    OutputConfig, SubsystemConfig,
};
use crate::diagnostics::Theorem1Thresholds;

pub struct Scenario {
    pub name: &'static str,
    pub description: &'static str,
    pub config: ExperimentConfig,
}

fn oscillator(omega: f64, x0: [f64; 2]) -> SubsystemConfig {
    SubsystemConfig {
        model: ModelKind::Oscillator,
        parameters: BTreeMap::from([("omega".to_string(), omega)]),
        reference: None,
        initial_state: x0.to_vec(),
    }
}

fn pendulum(x0: [f64; 2]) -> SubsystemConfig {
    SubsystemConfig {
        model: ModelKind::Pendulum,
        parameters: BTreeMap::from([
            ("mass".to_string(), 1.0),
            ("length".to_string(), 1.0),
            ("gravity".to_string(), 1.0),
        ]),
        reference: None,
        initial_state: x0.to_vec(),
    }
}

fn alignment(gamma: f64) -> ControllerConfig {
    ControllerConfig {
        kind: ConfigControllerKind::Alignment,
        gamma,
        target: None,
        saturation: None,
        perturb_delta: None,
    }
}

fn config(name: &str, subsystems: Vec<SubsystemConfig>, controller: ControllerConfig, horizon: f64) -> ExperimentConfig {
    ExperimentConfig {
        name: name.to_string(),
        subsystems,
        controller,
        integrator: IntegratorConfig {
            horizon,
            ..IntegratorConfig::default()
        },
        seed: 0,
        outputs: OutputConfig::default(),
        audit: Theorem1Thresholds::default(),
    }
}

pub fn catalog() -> Vec<Scenario> {
    vec![
        Scenario {
            name: "two-oscillator-leveling",
            description: "two unit oscillators with energies 1 and 0.25 driven to a common energy",
            config: config(
                "two-oscillator-leveling",
                vec![oscillator(1.0, [1.0, 1.0]), oscillator(1.0, [0.5, 0.5])],
                alignment(0.5),
                200.0,
            ),
        },
        Scenario {
            name: "three-pendulum-leveling",
            description: "three unit pendulums with distinct energies leveled by the alignment law",
            config: config(
                "three-pendulum-leveling",
                vec![pendulum([1.0, 0.0]), pendulum([0.5, 0.0]), pendulum([0.0, 0.8])],
                alignment(0.5),
                200.0,
            ),
        },
        Scenario {
            name: "mixed-pendulum-oscillator",
            description: "two pendulums and two oscillators (omega 1 and 2) in one ring",
            config: config(
                "mixed-pendulum-oscillator",
                vec![
                    pendulum([1.0, 0.0]),
                    oscillator(1.0, [0.5, 0.0]),
                    pendulum([0.0, 1.0]),
                    oscillator(2.0, [0.3, 0.3]),
                ],
                alignment(0.5),
                200.0,
            ),
        },
        Scenario {
            name: "aligned-start",
            description: "two oscillators starting with equal energies; the control stays at zero",
            config: config(
                "aligned-start",
                vec![oscillator(1.0, [1.0, 0.0]), oscillator(1.0, [0.0, 1.0])],
                alignment(0.5),
                200.0,
            ),
        },
        Scenario {
            name: "pendulum-energy-tracking",
            description: "single pendulum pumped from near rest to energy 1",
            config: config(
                "pendulum-energy-tracking",
                vec![pendulum([0.1, 0.0])],
                ControllerConfig {
                    kind: ConfigControllerKind::Tracking,
                    gamma: 1.0,
                    target: Some(1.0),
                    saturation: None,
                    perturb_delta: None,
                },
                300.0,
            ),
        },
        Scenario {
            name: "degenerate-rest",
            description: "four pendulums, the last exactly at rest where its Lie factor vanishes",
            config: {
                let mut c = config(
                    "degenerate-rest",
                    vec![
                        pendulum([1.0, 0.0]),
                        pendulum([1.5, 0.0]),
                        pendulum([0.5, 0.0]),
                        pendulum([0.0, 0.0]),
                    ],
                    alignment(1.0),
                    200.0,
                );
                // The stuck branch decays like 1/t; its control has not reached 1e-4 by T.
                c.audit.u_final_tol = 1e-3;
                c
            },
        },
    ]
}

pub fn scenario(name: &str) -> Option<ExperimentConfig> {
    catalog().into_iter().find(|s| s.name == name).map(|s| s.config)
}
