//! Speed-gradient control of invariant quantities in networks of affine
//! nonlinear subsystems: model zoo, feedback laws, closed-loop integration,
//! sampled and trajectory-level audits, and an experiment harness.

pub mod controller;
pub mod dynamics;
pub mod error;
pub mod harness;
pub mod diagnostics;
pub mod integrate;
pub mod numdiff;
pub mod rng;

pub use controller::{
    alignment_control, cyclic_error, goal_rate, goal_value, tracking_control, ControlVector,
    ControllerKind, ControllerSpec,
};
pub use dynamics::{
    make_custom, make_damped_oscillator, make_integrator, make_oscillator, make_pendulum,
    AffineSystem, NetworkSystem, StateVector, SubsystemModel,
};
pub use error::{Error, Result};
pub use integrate::{
    simulate, step_rk4, step_rk45, AdaptiveStep, IntegratorSpec, Method, SimulationFailure,
    Trajectory,
};
pub use diagnostics::{
    audit_theorem1, check_conservative, check_goal_rate, check_gradient, check_lyapunov_decrease,
    probe_rank_condition, AuditReport, LyapunovCandidate, RankProbe, Sampler, Theorem1Audit,
    Theorem1Branch, Theorem1Thresholds,
};
pub use harness::{
    parse_config, run_experiment, run_sweep, ExperimentConfig, RunMetrics, RunOutcome, SweepRow,
};
