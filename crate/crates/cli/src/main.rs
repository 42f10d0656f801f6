//! `junction`: command-line front end. Exit status 0 on success, 1 when an assertion or a
//! computation fails, 2 on usage errors.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{CommandFactory, Parser, Subcommand};

use junction_core::dynamics::{integrate_perturbed, ControlSchedule, IntegratorConfig};
use junction_core::experiments::{self, ExperimentConfig, Manifest, Scenario, Summary};
use junction_core::geometry::{project_to_network, NetworkPoint, PlanePoint};
use junction_core::limits::constant_control_limit;
use junction_core::value::{
    convergence_study, solve_value_eps, solve_value_network, ConvergenceOptions, CostField, EdgeGridSpec, GridSpec,
    Region, Sweep, ValueProblem,
};
use junction_core::Error;

const THREADS_VAR: &str = "JUNCTION_THREADS";

#[derive(Parser)]
#[command(name = "junction", version, about = "Penalized control toward the cross-shaped network")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Integrate the penalized ODE and print `t,x1,x2,k1,k2`.
    Simulate {
        #[arg(long, allow_hyphen_values = true)]
        x: PlanePoint,
        /// `a1,a2` or `t0:a1,a2;t1:a1,a2;...`
        #[arg(long, allow_hyphen_values = true, conflicts_with = "theta", required_unless_present = "theta")]
        control: Option<String>,
        /// Constant unit control `e_θ`.
        #[arg(long, allow_hyphen_values = true)]
        theta: Option<f64>,
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        horizon: f64,
        /// Control bound; defaults to the largest control magnitude.
        #[arg(long)]
        f_inf: Option<f64>,
        #[arg(long, default_value_t = 1e-8)]
        rel_tol: f64,
        #[arg(long, default_value_t = 1e-10)]
        abs_tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the network point `φ_d(x)` as `branch radius`.
    Project {
        #[arg(long, allow_hyphen_values = true)]
        x: PlanePoint,
    },
    /// Closed-form limit path under `e_θ` from a network point, as JSON.
    Limit {
        /// `O`, a branch for its unit point, or `branch:radius`.
        #[arg(long)]
        start: NetworkPoint,
        #[arg(long, allow_hyphen_values = true)]
        theta: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve for `V^ε` on a planar grid and print `x1,x2,u`.
    Value2d {
        #[arg(long)]
        eps: f64,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        /// `constant:v`, `capped-norm:c`, `norm:b`
        #[arg(long, default_value = "capped-norm:2")]
        cost: CostField,
        #[arg(long, default_value_t = 0.02)]
        grid_h: f64,
        /// `x1_min,x1_max,x2_min,x2_max`
        #[arg(long, default_value = "-2,2,-2,2", allow_hyphen_values = true)]
        region: String,
        #[arg(long, default_value_t = 0.4)]
        margin: f64,
        #[arg(long)]
        jacobi: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve for `V_Γ` on the network and print `branch,r,u`.
    Valuenet {
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        #[arg(long, default_value = "capped-norm:2")]
        cost: CostField,
        #[arg(long, default_value_t = 0.005)]
        grid_h: f64,
        #[arg(long, default_value_t = 3.0)]
        radius: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// `V^ε` against `V̄∘φ_d` over an ε ladder; prints the report as JSON.
    Converge {
        /// Strictly decreasing, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "0.2,0.1,0.05")]
        eps: Vec<f64>,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        #[arg(long, default_value = "capped-norm:2")]
        cost: CostField,
        #[arg(long, default_value_t = 0.02)]
        grid_h: f64,
        #[arg(long, default_value = "-2,2,-2,2", allow_hyphen_values = true)]
        region: String,
        #[arg(long, default_value_t = 100)]
        probes: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a named scenario and write its artifacts and manifest.
    Scenario {
        name: Scenario,
        /// TOML configuration; its `scenario` key must match `name`.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory (overrides the configuration).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        parallel: bool,
        /// ε list for the scenario, comma separated.
        #[arg(long, value_delimiter = ',')]
        eps: Option<Vec<f64>>,
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long)]
        horizon: Option<f64>,
        #[arg(long)]
        grid_h: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        region: Option<String>,
    },
    /// Aggregate manifests into one table.
    Summarize {
        #[arg(required = true)]
        manifests: Vec<PathBuf>,
        /// Also write the summary as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Reduced runs of every scenario plus the projection checks.
    Selftest {
        #[arg(long)]
        parallel: bool,
    },
}

enum Failure {
    Usage(String),
    Run(String),
    Assertions,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidInput(_) | Error::Config(_) | Error::UnknownScenario(_) => Failure::Usage(e.to_string()),
            other => Failure::Run(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Run(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            if !e.use_stderr() {
                return ExitCode::SUCCESS;
            }
            if !e.render().to_string().contains("Usage:") {
                eprintln!("{}", Cli::command().render_usage());
            }
            return ExitCode::from(2);
        }
    };
    let result = configure_threads().and_then(|()| run(cli.cmd));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Assertions) => ExitCode::from(1),
        Err(Failure::Run(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            eprintln!("{}", Cli::command().render_usage());
            ExitCode::from(2)
        }
    }
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(v) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::Usage(format!("{THREADS_VAR} must be a positive integer, got `{v}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::Run(e.to_string()))
}

fn usage(m: impl Into<String>) -> Failure {
    Failure::Usage(m.into())
}

fn positive(name: &str, v: f64) -> Result<(), Failure> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(usage(format!("--{name} must be positive, got {v}")))
    }
}

/// Writes to `out`, or to standard output.
fn emit(out: Option<&Path>, data: &[u8]) -> Result<(), Failure> {
    match out {
        Some(p) => std::fs::write(p, data)?,
        None => std::io::stdout().lock().write_all(data)?,
    }
    Ok(())
}

fn json_bytes(v: &serde_json::Value) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(v).expect("json value serializes");
    s.push('\n');
    s.into_bytes()
}

fn run(cmd: Cmd) -> Result<(), Failure> {
    match cmd {
        Cmd::Simulate {
            x,
            control,
            theta,
            eps,
            horizon,
            f_inf,
            rel_tol,
            abs_tol,
            out,
        } => {
            positive("eps", eps)?;
            positive("horizon", horizon)?;
            let alpha = match (control, theta) {
                (Some(c), _) => ControlSchedule::parse(&c, f_inf)?,
                (None, Some(t)) => ControlSchedule::direction(t),
                (None, None) => return Err(usage("give --control or --theta")),
            };
            let cfg = IntegratorConfig::with_horizon(horizon).tolerances(rel_tol, abs_tol);
            cfg.validate()?;
            let tr = integrate_perturbed(x, &alpha, eps, &cfg)?;
            let mut buf = Vec::new();
            tr.write_csv(&mut buf)?;
            emit(out.as_deref(), &buf)
        }
        Cmd::Project { x } => {
            println!("{}", project_to_network(x));
            Ok(())
        }
        Cmd::Limit { start, theta, out } => {
            if !theta.is_finite() {
                return Err(usage("--theta must be finite"));
            }
            let l = constant_control_limit(start, theta)?;
            emit(out.as_deref(), &json_bytes(&l.to_json()))
        }
        Cmd::Value2d {
            eps,
            lambda,
            cost,
            grid_h,
            region,
            margin,
            jacobi,
            out,
        } => {
            positive("eps", eps)?;
            let spec = GridSpec {
                region: Region::parse(&region)?,
                h: grid_h,
                margin,
                sweep: if jacobi { Sweep::Jacobi } else { Sweep::GaussSeidel },
                ..GridSpec::default()
            };
            spec.validate()?;
            let prob = ValueProblem::new(lambda, cost)?;
            let v = solve_value_eps(&prob, eps, &spec)?;
            let mut buf = Vec::new();
            v.write_csv(&mut buf)?;
            emit(out.as_deref(), &buf)
        }
        Cmd::Valuenet {
            lambda,
            cost,
            grid_h,
            radius,
            out,
        } => {
            let prob = ValueProblem::new(lambda, cost)?;
            let spec = EdgeGridSpec {
                radius,
                h: grid_h,
                ..EdgeGridSpec::default()
            };
            let v = solve_value_network(&prob, &spec)?;
            let mut buf = Vec::new();
            v.write_csv(&mut buf)?;
            emit(out.as_deref(), &buf)
        }
        Cmd::Converge {
            eps,
            lambda,
            cost,
            grid_h,
            region,
            probes,
            out,
        } => {
            let spec = GridSpec {
                region: Region::parse(&region)?,
                h: grid_h,
                ..GridSpec::default()
            };
            spec.validate()?;
            let prob = ValueProblem::new(lambda, cost)?;
            let opts = ConvergenceOptions {
                probes,
                ..ConvergenceOptions::default()
            };
            let r = convergence_study(&prob, &eps, &spec, &opts)?;
            emit(out.as_deref(), &json_bytes(&r.to_json()))?;
            if r.passed() {
                Ok(())
            } else {
                eprintln!("convergence checks failed: monotone={} margins_ok={}", r.monotone, r.margins_ok);
                Err(Failure::Assertions)
            }
        }
        Cmd::Scenario {
            name,
            config,
            out,
            parallel,
            eps,
            lambda,
            gamma,
            horizon,
            grid_h,
            region,
        } => {
            let mut cfg = match config {
                Some(p) => ExperimentConfig::load(&p)?,
                None => ExperimentConfig::new(name),
            };
            if cfg.scenario != name {
                return Err(usage(format!("config is for `{}`, not `{name}`", cfg.scenario)));
            }
            if let Some(o) = out {
                cfg.output_dir = o;
            }
            cfg.parallel |= parallel;
            apply_overrides(&mut cfg, eps, lambda, gamma, horizon, grid_h, region)?;
            cfg.validate()?;
            let m = experiments::run_scenario(&cfg)?;
            report(&experiments::summarize(std::slice::from_ref(&m)))?;
            println!("manifest: {}", experiments::run_dir(&cfg).join("manifest.json").display());
            verdict(m.passed)
        }
        Cmd::Summarize { manifests, out } => {
            let ms = manifests
                .iter()
                .map(|p| Manifest::read(p))
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| Failure::Run(e.to_string()))?;
            let s = experiments::summarize(&ms);
            if let Some(o) = out {
                std::fs::write(o, json_bytes(&s.to_json()))?;
            }
            report(&s)?;
            verdict(s.passed)
        }
        Cmd::Selftest { parallel } => {
            let ms = experiments::selftest(parallel)?;
            let s = experiments::summarize(&ms);
            report(&s)?;
            verdict(s.passed)
        }
    }
}

fn report(s: &Summary) -> Result<(), Failure> {
    emit(None, s.to_table().as_bytes())
}

fn verdict(passed: bool) -> Result<(), Failure> {
    if passed {
        Ok(())
    } else {
        Err(Failure::Assertions)
    }
}

/// Maps the generic flags onto the section used by the scenario.
fn apply_overrides(
    cfg: &mut ExperimentConfig,
    eps: Option<Vec<f64>>,
    lambda: Option<f64>,
    gamma: Option<f64>,
    horizon: Option<f64>,
    grid_h: Option<f64>,
    region: Option<String>,
) -> Result<(), Failure> {
    let s = cfg.scenario;
    let unused = |flag: &str| usage(format!("--{flag} does not apply to scenario `{s}`"));
    let single = |v: Vec<f64>| match v[..] {
        [e] => Ok(e),
        _ => Err(usage(format!("scenario `{s}` takes a single --eps value"))),
    };
    if let Some(e) = eps {
        match s {
            Scenario::JunctionBehavior => cfg.junction.eps = single(e)?,
            Scenario::ScalingLaw => cfg.scaling.eps = single(e)?,
            Scenario::Zeno => cfg.zeno.eps = e,
            Scenario::Tracking => cfg.tracking.eps = e,
            Scenario::ValueConvergence => cfg.value.eps = e,
            Scenario::AprioriSuite => cfg.apriori.eps = e,
            Scenario::Counterexample => return Err(unused("eps")),
        }
    }
    if let Some(l) = lambda {
        match s {
            Scenario::Counterexample => cfg.counterexample.lambda = l,
            Scenario::ValueConvergence => cfg.value.lambda = l,
            _ => return Err(unused("lambda")),
        }
    }
    if let Some(g) = gamma {
        match s {
            Scenario::Tracking => cfg.tracking.gamma = g,
            Scenario::AprioriSuite => cfg.apriori.gamma = g,
            _ => return Err(unused("gamma")),
        }
    }
    if let Some(t) = horizon {
        match s {
            Scenario::JunctionBehavior => cfg.junction.horizon = t,
            Scenario::ScalingLaw => cfg.scaling.horizon = t,
            Scenario::Tracking => cfg.tracking.horizon = t,
            Scenario::AprioriSuite => cfg.apriori.horizon = t,
            _ => return Err(unused("horizon")),
        }
    }
    if let Some(h) = grid_h {
        match s {
            Scenario::ValueConvergence => cfg.value.grid.h = h,
            _ => return Err(unused("grid-h")),
        }
    }
    if let Some(r) = region {
        match s {
            Scenario::ValueConvergence => cfg.value.grid.region = Region::parse(&r)?,
            _ => return Err(unused("region")),
        }
    }
    Ok(())
}
