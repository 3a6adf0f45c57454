//! End-to-end acceptance suite. Every criterion runs even when an earlier one
//! fails; the test fails at the end if any did.

use std::process::Command;
use std::time::Instant;

use sgleveling::diagnostics::Theorem1Branch;
use sgleveling::harness::{catalog, scenario};
use sgleveling::{
    check_gradient, make_oscillator, make_pendulum, run_experiment, simulate, ExperimentConfig,
    IntegratorSpec, NetworkSystem, RunOutcome, Sampler, StateVector, SubsystemModel,
};

struct Verdict {
    passed: bool,
    detail: String,
}

fn verdict(passed: bool, detail: String) -> Verdict {
    Verdict { passed, detail }
}

fn run(name: &str) -> RunOutcome {
    run_experiment(&scenario(name).unwrap()).unwrap()
}

fn zoo() -> Vec<SubsystemModel> {
    vec![
        make_oscillator(1.0).unwrap(),
        make_oscillator(2.0).unwrap(),
        make_oscillator(0.5).unwrap(),
        make_pendulum(1.0, 1.0, 1.0).unwrap(),
        make_pendulum(0.5, 2.0, 9.81).unwrap(),
    ]
}

fn conservation() -> Verdict {
    let started = Instant::now();
    let integ = IntegratorSpec::rk4(1e-3, 100.0).unwrap();
    let mut worst = 0.0f64;
    for (model, x0) in [
        (make_oscillator(1.0).unwrap(), [1.0, 1.0]),
        (make_pendulum(1.0, 1.0, 1.0).unwrap(), [1.0, 0.0]),
    ] {
        let net = NetworkSystem::single(model);
        let x0 = StateVector::new(x0.to_vec()).unwrap();
        let traj = simulate(&net, &[x0], None, &integ, 1).unwrap();
        let h0 = traj.outputs[0][0];
        for y in &traj.outputs {
            worst = worst.max((y[0] - h0).abs());
        }
    }
    let secs = started.elapsed().as_secs_f64();
    verdict(
        worst <= 1e-6 && secs < 5.0,
        format!("max |h(t) - h(0)| = {worst:.3e}, {secs:.2} s"),
    )
}

fn closed_loop_runs() -> (Vec<(&'static str, RunOutcome)>, f64) {
    let started = Instant::now();
    let runs = catalog()
        .into_iter()
        .map(|s| (s.name, run_experiment(&s.config).unwrap()))
        .collect();
    (runs, started.elapsed().as_secs_f64())
}

fn monotonicity(runs: &[(&str, RunOutcome)], secs: f64) -> Verdict {
    let mut worst = 0.0f64;
    let mut ok = secs < 30.0;
    for (_, r) in runs {
        let rise = r.metrics.max_q_rise;
        worst = worst.max(rise);
        ok &= rise <= 1e-9;
        ok &= r.audits.theorem1.as_ref().is_some_and(|a| a.monotone.passed);
    }
    verdict(ok, format!("worst Q rise {worst:.3e} over {} scenarios, {secs:.2} s", runs.len()))
}

fn control_decay(runs: &[(&str, RunOutcome)]) -> Verdict {
    let r = &runs.iter().find(|(n, _)| *n == "two-oscillator-leveling").unwrap().1;
    let u = r.metrics.u_tail_max;
    verdict(u <= 1e-4, format!("two-oscillator-leveling tail max |u| = {u:.3e}"))
}

fn with_step(mut cfg: ExperimentConfig, step: f64) -> ExperimentConfig {
    cfg.integrator.step = step;
    cfg.integrator.record_every *= 2;
    cfg
}

fn goal_achievement(runs: &[(&str, RunOutcome)]) -> Verdict {
    let mut ok = true;
    let mut parts = Vec::new();
    for name in ["two-oscillator-leveling", "three-pendulum-leveling"] {
        let m = &runs.iter().find(|(n, _)| *n == name).unwrap().1.metrics;
        let halved = run_experiment(&with_step(scenario(name).unwrap(), 5e-4)).unwrap().metrics;
        let drift = ((halved.aligned_value - m.aligned_value) / m.aligned_value).abs();
        ok &= m.final_output_spread < 1e-3 && halved.final_output_spread < 1e-3 && drift <= 0.1;
        parts.push(format!(
            "{name}: spread {:.2e}, value {:.6} (halved step {:.6})",
            m.final_output_spread, m.aligned_value, halved.aligned_value
        ));
    }
    verdict(ok, parts.join("; "))
}

fn goal_rate_formula(runs: &[(&str, RunOutcome)]) -> Verdict {
    let mut ok = true;
    let mut worst = 0.0f64;
    let mut compared = 0;
    for (name, r) in runs {
        match &r.audits.goal_rate {
            Some(a) => {
                ok &= a.passed;
                worst = worst.max(a.worst);
                compared += a.samples;
            }
            None => {
                ok = false;
                eprintln!("{name}: no goal-rate audit");
            }
        }
    }
    verdict(ok, format!("worst relative error {worst:.3e} over {compared} samples"))
}

fn tracking() -> Verdict {
    let r = run("pendulum-energy-tracking");
    let y = r.trajectory.outputs.last().unwrap()[0];
    let t = *r.trajectory.times.last().unwrap();
    let err = (y - 1.0).abs();
    verdict(err < 1e-3 && t == 300.0, format!("|h - y*| = {err:.3e} at t = {t}"))
}

fn alternative_branch() -> Verdict {
    let plain = run("degenerate-rest");
    let mut cfg = scenario("degenerate-rest").unwrap();
    cfg.controller.perturb_delta = Some(1e-3);
    let perturbed = run_experiment(&cfg).unwrap();
    let b0 = plain.metrics.theorem1_branch;
    let b1 = perturbed.metrics.theorem1_branch;
    verdict(
        b0.is_some_and(|b| b != Theorem1Branch::Neither) && b1 == Some(Theorem1Branch::Goal),
        format!("unperturbed {b0:?}, perturbed {b1:?}"),
    )
}

fn gradient_audit() -> Verdict {
    let sampler = Sampler::new(-3.0, 3.0, 100, 0);
    let mut ok = true;
    let mut worst = 0.0f64;
    for m in zoo() {
        let r = check_gradient(&m, &sampler, 1e-6);
        ok &= r.passed && r.samples == 100;
        worst = worst.max(r.worst);
    }
    verdict(ok, format!("worst relative error {worst:.3e} over {} models", zoo().len()))
}

fn determinism() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.json");
    std::fs::write(&config, scenario("mixed-pendulum-oscillator").unwrap().to_json()).unwrap();
    let csv = |name: &str| {
        let path = dir.path().join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_sgleveling"))
            .arg("simulate")
            .arg("--config")
            .arg(&config)
            .arg("--csv")
            .arg(&path)
            .output()
            .unwrap()
            .status;
        (status.code(), std::fs::read(&path).unwrap_or_default())
    };
    let (s1, a) = csv("a.csv");
    let (s2, b) = csv("b.csv");
    verdict(
        s1 == Some(0) && s2 == Some(0) && !a.is_empty() && a == b,
        format!("exit codes {s1:?}/{s2:?}, {} bytes, identical = {}", a.len(), a == b),
    )
}

fn rk4_order() -> Verdict {
    let x0 = [1.0, 0.5];
    let error = |step: f64| {
        let net = NetworkSystem::single(make_oscillator(1.0).unwrap());
        let traj = simulate(
            &net,
            &[StateVector::new(x0.to_vec()).unwrap()],
            None,
            &IntegratorSpec::rk4(step, 10.0).unwrap(),
            1,
        )
        .unwrap();
        let x = traj.final_states().unwrap()[0].as_slice().to_vec();
        let (s, c) = 10.0f64.sin_cos();
        let exact = [x0[0] * c + x0[1] * s, -x0[0] * s + x0[1] * c];
        ((x[0] - exact[0]).powi(2) + (x[1] - exact[1]).powi(2)).sqrt()
    };
    let (e1, e2) = (error(1e-2), error(5e-3));
    let ratio = e1 / e2;
    verdict(
        (ratio - 16.0).abs() <= 3.2,
        format!("errors {e1:.3e} -> {e2:.3e}, ratio {ratio:.3}"),
    )
}

#[test]
fn acceptance() {
    let (runs, secs) = closed_loop_runs();
    let results = [
        ("open-loop conservation", conservation()),
        ("goal monotonicity", monotonicity(&runs, secs)),
        ("control decay", control_decay(&runs)),
        ("goal achievement", goal_achievement(&runs)),
        ("goal rate formula", goal_rate_formula(&runs)),
        ("energy tracking", tracking()),
        ("alternative branch", alternative_branch()),
        ("gradient audit", gradient_audit()),
        ("cli determinism", determinism()),
        ("rk4 order", rk4_order()),
    ];
    let mut failed = Vec::new();
    println!();
    for (i, (name, v)) in results.iter().enumerate() {
        let tag = if v.passed { "PASS" } else { "FAIL" };
        println!("[{tag}] {:>2}. {name}: {}", i + 1, v.detail);
        if !v.passed {
            failed.push(*name);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
