use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};

use sgleveling::harness::{self, catalog, emit_sweep_csv, ModelRegistry};
use sgleveling::{parse_config, run_experiment, run_sweep, ExperimentConfig};

/// Energy-leveling simulations for networks of conservative affine systems.
#[derive(Parser)]
#[command(name = "sgleveling", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment, audit it and print its metrics.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `outputs.csv_path`.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Overrides `outputs.report_path`.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Run the model diagnostics (conservativity, gradient, Lyapunov) only.
    Check {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run one experiment per value of a numeric config field.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Dotted path, e.g. `controller.gamma` or `subsystems.0.initial_state.1`.
        #[arg(long)]
        param: String,
        /// Comma-separated; may be empty.
        #[arg(long, allow_hyphen_values = true)]
        values: String,
        /// Combined CSV; printed to stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the built-in scenarios, or print one as a config document.
    Catalog { name: Option<String> },
}

fn load(path: &Path) -> anyhow::Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_config(&text).with_context(|| format!("in {}", path.display()))
}

fn parse_values(list: &str) -> anyhow::Result<Vec<f64>> {
    list.split(',')
        .map(str::trim)
        .filter(|v| !v.is_empty())
        .map(|v| v.parse::<f64>().with_context(|| format!("sweep value `{v}`")))
        .collect()
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    match cli.command {
        Command::Simulate { config, csv, report } => {
            let mut cfg = load(&config)?;
            if csv.is_some() {
                cfg.outputs.csv_path = csv;
            }
            if report.is_some() {
                cfg.outputs.report_path = report;
            }
            let out = run_experiment(&cfg)?;
            println!("{}", serde_json::to_string_pretty(&out.metrics)?);
            if let Some(a) = &out.audits.theorem1 {
                for r in a.reports() {
                    println!("{r}");
                }
            }
            if let Some(r) = &out.audits.goal_rate {
                println!("{r}");
            }
            let passed = out.passed();
            println!("{}", if passed { "PASS" } else { "FAIL" });
            Ok(passed)
        }
        Command::Check { config } => {
            let cfg = load(&config)?;
            let mut passed = true;
            for (who, r) in harness::run_checks(&cfg, &ModelRegistry::default())? {
                println!("{who}: {r}");
                passed &= r.passed;
            }
            Ok(passed)
        }
        Command::Sweep { config, param, values, out } => {
            let cfg = load(&config)?;
            let values = parse_values(&values)?;
            let rows = run_sweep(&cfg, &param, &values)?;
            match out {
                Some(p) => emit_sweep_csv(&rows, &p)?,
                None => harness::output::write_sweep_csv(&rows, std::io::stdout().lock())?,
            }
            Ok(rows.iter().all(|r| r.passed))
        }
        Command::Catalog { name: None } => {
            for s in catalog() {
                println!("{:<28} {}", s.name, s.description);
            }
            Ok(true)
        }
        Command::Catalog { name: Some(name) } => match harness::scenario(&name) {
            Some(cfg) => {
                println!("{}", cfg.to_json());
                Ok(true)
            }
            None => bail!("no scenario named `{name}`"),
        },
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
