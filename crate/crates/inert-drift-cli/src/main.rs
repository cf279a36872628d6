//! Seeded, config-driven runs of every experiment in the laboratory.
//!
//! Each subcommand reads an optional JSON config (flags override file
//! values), runs its experiment, writes CSV artifacts plus a deterministic
//! `summary.json` under `<out>/<experiment>-seed<seed>/`, and exits with
//! 0 on pass, 2 on a config error, 3 on a numerical failure (blow-up,
//! non-convergence, step failure), and 4 when a verification check fails.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use inert_drift::error::Error as LabError;
use inert_drift::interval::{
    simulate_interval, velocity_chain, write_chain_csv, IntervalParams,
};
use inert_drift::lab::*;
use inert_drift::multidim::{extended_solve_nd, verify_nd, GraphDomain, MultiPath};
use inert_drift::observables::{
    decompose_excursions, escape_survival, excursion_density, write_excursions_csv,
    SurvivalVariant,
};
use inert_drift::path::{generate_brownian_path, DriftSpec, RngConfig, SampledPath};
use inert_drift::replicas::map_replicas;
use inert_drift::skorohod::{classic_map, extended_solve, refine_until, verify_solution};
use inert_drift::stats::Report;
use inert_drift::three_particle::{gap_chain, simulate_three, ThreeParams};

const SCHEMA_VERSION: u32 = 1;

#[derive(Parser)]
#[command(name = "inert-drift", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// JSON config file; flags override file values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed. Mandatory for Monte Carlo subcommands.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for artifacts.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker threads for replica-parallel runs (0 = library default).
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Override one parameter, e.g. --set n_paths=5000 (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Deterministic solver runs and exactness checks (classic map,
    /// constant drift, epsilon uniqueness, occupation estimator).
    SkorohodSolve(Common),
    /// Tabulate the escape-survival law under both sign variants.
    VerifyEscape(Common),
    /// Excursion counts against the intensity-density quadrature.
    VerifyExcursionDensity(Common),
    /// Empirical level-crossing rates against mu e^{mu l}/sinh(mu l).
    VerifyCrossingRate(Common),
    /// Simulate the interval system; emit trajectory and contact chain.
    SimulateInterval(Common),
    /// Stationary velocity density plus generator/adjoint identities.
    VerifyStationary(Common),
    /// Ornstein-Uhlenbeck limit of the rescaled velocity chain.
    ConvergeOu(Common),
    /// Simulate the three-particle system; emit trajectory and gap chain.
    SimulateThree(Common),
    /// Pathwise and distributional diffusive-scaling checks.
    VerifyScaling(Common),
    /// The exp(-l^2) law of the total local time (sign adjudication).
    VerifyLinf(Common),
    /// Gap distribution against the Bessel(2) transition density.
    ConvergeBessel(Common),
    /// Solve the d-dimensional problem on a graph domain; emit the path.
    SolveNd(Common),
    /// The d-dimensional verification suite.
    VerifyNd(Common),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::SkorohodSolve(_) => "skorohod-solve",
            Command::VerifyEscape(_) => "verify-escape",
            Command::VerifyExcursionDensity(_) => "verify-excursion-density",
            Command::VerifyCrossingRate(_) => "verify-crossing-rate",
            Command::SimulateInterval(_) => "simulate-interval",
            Command::VerifyStationary(_) => "verify-stationary",
            Command::ConvergeOu(_) => "converge-ou",
            Command::SimulateThree(_) => "simulate-three",
            Command::VerifyScaling(_) => "verify-scaling",
            Command::VerifyLinf(_) => "verify-linf",
            Command::ConvergeBessel(_) => "converge-bessel",
            Command::SolveNd(_) => "solve-nd",
            Command::VerifyNd(_) => "verify-nd",
        }
    }

    fn common(&self) -> &Common {
        match self {
            Command::SkorohodSolve(c)
            | Command::VerifyEscape(c)
            | Command::VerifyExcursionDensity(c)
            | Command::VerifyCrossingRate(c)
            | Command::SimulateInterval(c)
            | Command::VerifyStationary(c)
            | Command::ConvergeOu(c)
            | Command::SimulateThree(c)
            | Command::VerifyScaling(c)
            | Command::VerifyLinf(c)
            | Command::ConvergeBessel(c)
            | Command::SolveNd(c)
            | Command::VerifyNd(c) => c,
        }
    }
}

/// On-disk config envelope; unknown fields are rejected.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    #[serde(default = "default_schema")]
    schema_version: u32,
    #[serde(default)]
    experiment: Option<String>,
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default)]
    output_dir: Option<PathBuf>,
    #[serde(default)]
    threads: Option<usize>,
    #[serde(default)]
    params: serde_json::Value,
}

fn default_schema() -> u32 {
    SCHEMA_VERSION
}

impl Default for ConfigFile {
    fn default() -> Self {
        ConfigFile {
            schema_version: SCHEMA_VERSION,
            experiment: None,
            seed: None,
            output_dir: None,
            threads: None,
            params: serde_json::Value::Null,
        }
    }
}

#[derive(Debug)]
enum RunError {
    Config(String),
    Numerical(String),
    Io(std::io::Error),
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::Io(e)
    }
}

impl From<LabError> for RunError {
    fn from(e: LabError) -> Self {
        match e {
            LabError::InvalidArgument(_) | LabError::GridMismatch(_) => {
                RunError::Config(e.to_string())
            }
            other => RunError::Numerical(other.to_string()),
        }
    }
}

fn config_err(msg: impl Into<String>) -> RunError {
    RunError::Config(msg.into())
}

/// Resolved run environment: seed, params JSON, output directory.
struct Resolved {
    seed: u64,
    params: serde_json::Value,
    dir: PathBuf,
    threads: usize,
    echo: serde_json::Value,
}

fn resolve(cmd: &Command, seed_required: bool) -> Result<Resolved, RunError> {
    let common = cmd.common();
    let file: ConfigFile = match &common.config {
        Some(path) => {
            let raw = fs::read_to_string(path)
                .map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
            serde_json::from_str(&raw)
                .map_err(|e| config_err(format!("bad config {}: {e}", path.display())))?
        }
        None => ConfigFile::default(),
    };
    if file.schema_version != SCHEMA_VERSION {
        return Err(config_err(format!(
            "unsupported schema_version {} (expected {SCHEMA_VERSION})",
            file.schema_version
        )));
    }
    if let Some(exp) = &file.experiment {
        if exp != cmd.name() {
            return Err(config_err(format!(
                "config is for experiment '{}', subcommand is '{}'",
                exp,
                cmd.name()
            )));
        }
    }
    let seed = common.seed.or(file.seed);
    let seed = match (seed, seed_required) {
        (Some(s), _) => s,
        (None, false) => 0,
        (None, true) => {
            return Err(config_err(
                "Monte Carlo subcommands require --seed (or a seed in the config)",
            ))
        }
    };
    let mut params = match file.params {
        serde_json::Value::Null => serde_json::Value::Object(Default::default()),
        v @ serde_json::Value::Object(_) => v,
        _ => return Err(config_err("params must be a JSON object")),
    };
    for kv in &common.sets {
        let (key, value) = kv
            .split_once('=')
            .ok_or_else(|| config_err(format!("--set needs KEY=VALUE, got '{kv}'")))?;
        let parsed: serde_json::Value = serde_json::from_str(value)
            .unwrap_or_else(|_| serde_json::Value::String(value.to_string()));
        params
            .as_object_mut()
            .unwrap()
            .insert(key.to_string(), parsed);
    }
    let out_root = if common.out == Path::new("out") {
        file.output_dir.unwrap_or_else(|| common.out.clone())
    } else {
        common.out.clone()
    };
    let dir = out_root.join(format!("{}-seed{}", cmd.name(), seed));
    fs::create_dir_all(&dir)?;
    let threads = if common.threads != 0 {
        common.threads
    } else {
        file.threads.unwrap_or(0)
    };
    Ok(Resolved {
        seed,
        echo: params.clone(),
        params,
        dir,
        threads,
    })
}

fn parse_params<T: for<'de> Deserialize<'de>>(v: serde_json::Value) -> Result<T, RunError> {
    serde_json::from_value(v).map_err(|e| config_err(format!("bad params: {e}")))
}

/// Deterministic summary written next to the CSV artifacts.
#[derive(Serialize)]
struct Summary {
    schema_version: u32,
    experiment: &'static str,
    seed: u64,
    params: serde_json::Value,
    results: serde_json::Map<String, serde_json::Value>,
    checks: Report,
    pass: bool,
}

fn write_summary(
    dir: &Path,
    experiment: &'static str,
    seed: u64,
    params: serde_json::Value,
    results: serde_json::Map<String, serde_json::Value>,
    checks: Report,
) -> Result<bool, RunError> {
    let pass = checks.passed();
    let summary = Summary {
        schema_version: SCHEMA_VERSION,
        experiment,
        seed,
        params,
        results,
        checks,
        pass,
    };
    let mut bytes = serde_json::to_vec_pretty(&summary)
        .map_err(|e| RunError::Config(format!("summary serialization: {e}")))?;
    bytes.push(b'\n');
    fs::write(dir.join("summary.json"), bytes)?;
    Ok(pass)
}

fn write_file(dir: &Path, name: &str, f: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> Result<(), RunError> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    fs::write(dir.join(name), buf)?;
    Ok(())
}

fn num(v: f64) -> serde_json::Value {
    serde_json::json!(v)
}

// ---------------------------------------------------------------------------
// skorohod-solve
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct SkorohodSolveParams {
    /// One of: solve, classic-exactness, constant-drift, epsilon-uniqueness,
    /// occupation.
    check: String,
    /// Driver for `solve`: ramp (f = -t), sine (f = -sin t), brownian.
    driver: String,
    dt: f64,
    horizon: f64,
    mu: String,
    mu_param: f64,
    epsilon: f64,
    /// When set, refine to this tolerance instead of solving at `epsilon`.
    refine_tol: Option<f64>,
    l_cap: f64,
    verify_tol: f64,
    classic: ClassicMapParams,
    constant_drift: ConstantDriftParams,
    epsilon_uniqueness: EpsilonUniquenessParams,
    occupation: OccupationParams,
}

impl Default for SkorohodSolveParams {
    fn default() -> Self {
        SkorohodSolveParams {
            check: "solve".into(),
            driver: "brownian".into(),
            dt: 1e-3,
            horizon: 2.0,
            mu: "linear".into(),
            mu_param: 1.0,
            epsilon: 1e-3,
            refine_tol: None,
            l_cap: 1e3,
            verify_tol: 1e-9,
            classic: ClassicMapParams::default(),
            constant_drift: ConstantDriftParams::default(),
            epsilon_uniqueness: EpsilonUniquenessParams::default(),
            occupation: OccupationParams::default(),
        }
    }
}

fn run_skorohod_solve(r: Resolved) -> Result<bool, RunError> {
    let p: SkorohodSolveParams = parse_params(r.params.clone())?;
    let mut results = serde_json::Map::new();
    let report = match p.check.as_str() {
        "solve" => {
            let driver = match p.driver.as_str() {
                "ramp" => {
                    let n = (p.horizon / p.dt).round() as usize + 1;
                    SampledPath::from_fn(0.0, p.dt, n, |t| -t)?
                }
                "sine" => {
                    let n = (p.horizon / p.dt).round() as usize + 1;
                    SampledPath::from_fn(0.0, p.dt, n, |t| -t.sin())?
                }
                "brownian" => {
                    generate_brownian_path(RngConfig::new(r.seed), p.dt, p.horizon, 1)?
                        .pop()
                        .unwrap()
                }
                other => return Err(config_err(format!("unknown driver '{other}'"))),
            };
            let mu = DriftSpec::from_name(&p.mu, p.mu_param)?;
            let sol = match p.refine_tol {
                Some(tol) => refine_until(&driver, &mu, tol, p.l_cap)?,
                None if p.mu == "zero" => classic_map(&driver)?,
                None => extended_solve(&driver, &mu, p.epsilon, p.l_cap)?,
            };
            write_file(&r.dir, "solution.csv", |w| sol.write_csv(w))?;
            write_file(&r.dir, "driver.csv", |w| driver.write_csv(w))?;
            results.insert("terminal_local_time".into(), num(sol.l.last()));
            results.insert("terminal_drift_integral".into(), num(sol.i.last()));
            verify_solution(&driver, &mu, &sol, p.verify_tol)?
        }
        "classic-exactness" => run_classic_exactness(&p.classic, r.seed)?,
        "constant-drift" => run_constant_drift(&p.constant_drift, r.seed)?,
        "epsilon-uniqueness" => run_epsilon_uniqueness(&p.epsilon_uniqueness, r.seed)?,
        "occupation" => run_occupation(&p.occupation, r.seed)?,
        other => return Err(config_err(format!("unknown check '{other}'"))),
    };
    write_summary(&r.dir, "skorohod-solve", r.seed, r.echo, results, report)
}

// ---------------------------------------------------------------------------
// verify-escape
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct EscapeParams {
    mu: String,
    mu_param: f64,
    tau_max: f64,
    n_points: usize,
}

impl Default for EscapeParams {
    fn default() -> Self {
        EscapeParams {
            mu: "linear".into(),
            mu_param: 1.0,
            tau_max: 3.0,
            n_points: 61,
        }
    }
}

fn run_verify_escape(r: Resolved) -> Result<bool, RunError> {
    let p: EscapeParams = parse_params(r.params.clone())?;
    let mu = DriftSpec::from_name(&p.mu, p.mu_param)?;
    let mut report = Report::new();
    let mut prev_c = 1.0_f64;
    let mut prev_l = 1.0_f64;
    let mut worst_mono = 0.0_f64;
    write_file(&r.dir, "survival.csv", |w| {
        writeln!(w, "tau,consistent,negative_part")?;
        for k in 0..p.n_points {
            let tau = p.tau_max * k as f64 / (p.n_points - 1).max(1) as f64;
            let c = escape_survival(&mu, tau, SurvivalVariant::Consistent);
            let l = escape_survival(&mu, tau, SurvivalVariant::NegativePart);
            worst_mono = worst_mono.max(c - prev_c).max(l - prev_l);
            prev_c = c;
            prev_l = l;
            writeln!(w, "{tau},{c},{l}")?;
        }
        Ok(())
    })?;
    report.push(
        "survival-at-zero",
        escape_survival(&mu, 0.0, SurvivalVariant::Consistent) == 1.0,
        1.0,
        1.0,
        "P(tau_infty > 0) = 1",
    );
    report.check_le(
        "survival-nonincreasing",
        worst_mono,
        1e-12,
        "both variants nonincreasing in tau",
    );
    let results = serde_json::Map::new();
    write_summary(&r.dir, "verify-escape", r.seed, r.echo, results, report)
}

// ---------------------------------------------------------------------------
// verify-excursion-density
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct ExcursionDensityParams {
    mu_value: f64,
    duration_floor: f64,
    n_replicas: usize,
    dt: f64,
    horizon: f64,
    rel_tol: f64,
}

impl Default for ExcursionDensityParams {
    fn default() -> Self {
        ExcursionDensityParams {
            mu_value: 0.0,
            duration_floor: 0.1,
            n_replicas: 100,
            dt: 1e-3,
            horizon: 40.0,
            rel_tol: 0.05,
        }
    }
}

fn run_verify_excursion_density(r: Resolved) -> Result<bool, RunError> {
    let p: ExcursionDensityParams = parse_params(r.params.clone())?;
    let mu = DriftSpec::constant(p.mu_value);
    // expected intensity of excursions with duration > floor, per unit tau
    let expect = inert_drift::numeric::adaptive_simpson(
        |lam| excursion_density(&mu, 0.0, lam, SurvivalVariant::Consistent).unwrap(),
        p.duration_floor,
        4000.0,
        1e-10,
    ) + (-p.mu_value * p.mu_value * 4000.0_f64 / 2.0).exp() * 2.0
        / (2.0 * std::f64::consts::PI * 4000.0_f64).sqrt();
    let base = RngConfig::new(r.seed);
    // dump the first replica's excursion records alongside the statistics
    {
        let b = generate_brownian_path(base.replica(0), p.dt, p.horizon, 1)?;
        let sol = extended_solve(&b[0], &mu, 1e-3, 1e6)?;
        let recs = decompose_excursions(&sol, 0.0);
        write_file(&r.dir, "excursions.csv", |w| write_excursions_csv(&recs, w))?;
    }
    let runs: Vec<Result<(f64, f64), LabError>> = map_replicas(p.n_replicas, |i| {
        let b = generate_brownian_path(base.replica(i), p.dt, p.horizon, 1)?;
        let sol = extended_solve(&b[0], &mu, 1e-3, 1e6)?;
        let recs = decompose_excursions(&sol, 0.0);
        let count = recs
            .iter()
            .filter(|rec| !rec.censored && rec.duration > p.duration_floor)
            .count();
        Ok((count as f64, sol.l.last()))
    });
    let mut count = 0.0;
    let mut tau = 0.0;
    for run in runs {
        let (c, t) = run?;
        count += c;
        tau += t;
    }
    let rate = count / tau;
    let se = count.sqrt() / tau;
    let mut report = Report::new();
    report.check_le(
        "excursion-count-vs-quadrature",
        (rate - expect).abs(),
        3.0 * se + p.rel_tol * expect,
        format!("count {count} over local time {tau:.1}: rate {rate:.4} vs {expect:.4}"),
    );
    // per-tau density curve for the record
    write_file(&r.dir, "density.csv", |w| {
        writeln!(w, "lambda,density")?;
        for k in 1..=200 {
            let lam = k as f64 * 0.02;
            writeln!(
                w,
                "{lam},{}",
                excursion_density(&mu, 0.0, lam, SurvivalVariant::Consistent).unwrap()
            )?;
        }
        Ok(())
    })?;
    let mut results = serde_json::Map::new();
    results.insert("measured_rate".into(), num(rate));
    results.insert("expected_rate".into(), num(expect));
    write_summary(&r.dir, "verify-excursion-density", r.seed, r.echo, results, report)
}

// ---------------------------------------------------------------------------
// simulate-interval / simulate-three (artifact emission + invariants)
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct SimulateIntervalParams {
    l: f64,
    k: f64,
    x0: f64,
    v0: f64,
    dt: f64,
    horizon: f64,
}

impl Default for SimulateIntervalParams {
    fn default() -> Self {
        SimulateIntervalParams {
            l: 1.0,
            k: 1.0,
            x0: 0.5,
            v0: 0.0,
            dt: 1e-4,
            horizon: 10.0,
        }
    }
}

fn run_simulate_interval(r: Resolved) -> Result<bool, RunError> {
    let p: SimulateIntervalParams = parse_params(r.params.clone())?;
    let params = IntervalParams {
        l: p.l,
        k: p.k,
        x0: p.x0,
        v0: p.v0,
    };
    let traj = simulate_interval(params, p.dt, p.horizon, RngConfig::new(r.seed))?;
    write_file(&r.dir, "trajectory.csv", |w| traj.write_csv(w))?;
    let chain = velocity_chain(&traj);
    write_file(&r.dir, "chain.csv", |w| write_chain_csv(&chain, w))?;
    let mut report = Report::new();
    let mut worst_sandwich = 0.0_f64;
    let mut worst_rec = 0.0_f64;
    for k in 0..traj.len() {
        worst_sandwich = worst_sandwich
            .max(traj.y0[k] - traj.x[k])
            .max(traj.x[k] - traj.y0[k] - p.l);
        worst_rec = worst_rec
            .max((traj.x[k] - traj.driver[k] - (traj.l0[k] - traj.ll[k]) - p.x0).abs());
    }
    report.check_le("interval-sandwich", worst_sandwich, 1e-9, "Y0 <= X <= Y0 + l");
    report.check_le("interval-reconstruction", worst_rec, 1e-9, "X = x0 + B + L0 - Ll");
    let mut results = serde_json::Map::new();
    results.insert("events".into(), num(chain.len() as f64));
    results.insert("terminal_velocity".into(), num(*traj.v.last().unwrap()));
    write_summary(&r.dir, "simulate-interval", r.seed, r.echo, results, report)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct SimulateThreeParams {
    x: f64,
    y: f64,
    v: f64,
    k: f64,
    dt: f64,
    horizon: f64,
}

impl Default for SimulateThreeParams {
    fn default() -> Self {
        SimulateThreeParams {
            x: 1.0,
            y: 0.5,
            v: 0.0,
            k: 1.0,
            dt: 1e-4,
            horizon: 5.0,
        }
    }
}

fn run_simulate_three(r: Resolved) -> Result<bool, RunError> {
    let p: SimulateThreeParams = parse_params(r.params.clone())?;
    let params = ThreeParams {
        x: p.x,
        y: p.y,
        v: p.v,
        k: p.k,
    };
    let traj = simulate_three(params, p.dt, p.horizon, RngConfig::new(r.seed))?;
    write_file(&r.dir, "trajectory.csv", |w| traj.write_csv(w))?;
    let chain = gap_chain(&traj);
    write_file(&r.dir, "gaps.csv", |w| {
        writeln!(w, "gap,T")?;
        for &(gap, t) in &chain {
            writeln!(w, "{gap},{t}")?;
        }
        Ok(())
    })?;
    let mut report = Report::new();
    let mut worst_order = 0.0_f64;
    let mut worst_rec = 0.0_f64;
    for k in 0..traj.len() {
        worst_order = worst_order
            .max(traj.x1[k] - traj.y[k])
            .max(traj.y[k] - traj.x2[k]);
        worst_rec = worst_rec
            .max((traj.x1[k] - (traj.b1[k] - traj.l1[k])).abs())
            .max((traj.x2[k] - (p.x + traj.b2[k] + traj.l2[k])).abs())
            .max((traj.v[k] - (p.v + p.k * (traj.l1[k] - traj.l2[k]))).abs());
    }
    report.check_le("three-ordering", worst_order, 1e-9, "X1 <= Y <= X2");
    report.check_le("three-reconstruction", worst_rec, 1e-9, "conditions 1(a)-1(c)");
    let mut results = serde_json::Map::new();
    results.insert("velocity_zeros".into(), num(chain.len() as f64));
    results.insert(
        "collided".into(),
        serde_json::json!(traj.collision.is_some()),
    );
    results.insert("terminal_gap".into(), num(traj.gap(traj.len() - 1)));
    write_summary(&r.dir, "simulate-three", r.seed, r.echo, results, report)
}

// ---------------------------------------------------------------------------
// solve-nd
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct SolveNdParams {
    domain: String,
    /// Plane slope or bowl curvature, depending on the domain.
    shape_param: f64,
    alpha: f64,
    dim: usize,
    dt: f64,
    horizon: f64,
    epsilon: f64,
    cap: f64,
    verify_tol: f64,
}

impl Default for SolveNdParams {
    fn default() -> Self {
        SolveNdParams {
            domain: "half-space".into(),
            shape_param: 0.25,
            alpha: 0.2,
            dim: 2,
            dt: 1e-3,
            horizon: 1.0,
            epsilon: 0.05,
            cap: 1e3,
            verify_tol: 1e-9,
        }
    }
}

fn nd_domain(p: &SolveNdParams) -> Result<GraphDomain, RunError> {
    Ok(match p.domain.as_str() {
        "half-space" => GraphDomain::half_space(p.dim, p.alpha),
        "tilted-plane" => {
            GraphDomain::tilted_plane(vec![p.shape_param; p.dim - 1], p.alpha)?
        }
        "parabolic" => GraphDomain::parabolic(p.dim, p.shape_param, p.alpha)?,
        other => return Err(config_err(format!("unknown domain '{other}'"))),
    })
}

fn run_solve_nd(r: Resolved) -> Result<bool, RunError> {
    let p: SolveNdParams = parse_params(r.params.clone())?;
    let domain = nd_domain(&p)?;
    let b = generate_brownian_path(RngConfig::new(r.seed), p.dt, p.horizon, p.dim)?;
    let w = MultiPath::from_coords(&b)?;
    let sol = extended_solve_nd(&w, &domain, p.epsilon, p.cap)?;
    write_file(&r.dir, "nd.csv", |wtr| sol.write_csv(wtr))?;
    let report = verify_nd(&sol, &domain, p.verify_tol)?;
    let mut results = serde_json::Map::new();
    results.insert("total_variation".into(), num(sol.total_variation.last()));
    write_summary(&r.dir, "solve-nd", r.seed, r.echo, results, report)
}

// ---------------------------------------------------------------------------
// thin wrappers over the lab runners
// ---------------------------------------------------------------------------

fn run_to_exit(cmd: &Command) -> Result<bool, RunError> {
    let seed_required = !matches!(cmd, Command::VerifyEscape(_));
    let r = resolve(cmd, seed_required)?;
    let threads = r.threads;
    let body = move || -> Result<bool, RunError> {
        match cmd {
            Command::SkorohodSolve(_) => run_skorohod_solve(r),
            Command::VerifyEscape(_) => run_verify_escape(r),
            Command::VerifyExcursionDensity(_) => run_verify_excursion_density(r),
            Command::VerifyCrossingRate(_) => {
                let p: CrossingRateParams = parse_params(r.params.clone())?;
                let report = run_crossing_rate(&p, r.seed)?;
                write_summary(
                    &r.dir,
                    "verify-crossing-rate",
                    r.seed,
                    r.echo,
                    serde_json::Map::new(),
                    report,
                )
            }
            Command::SimulateInterval(_) => run_simulate_interval(r),
            Command::VerifyStationary(_) => {
                let p: StationaryParams = parse_params(r.params.clone())?;
                let out = run_stationary(&p, r.seed)?;
                let mut report = out.report.clone();
                report.merge(run_generator_adjoint(&GeneratorParams::default(), r.seed)?);
                let mut results = serde_json::Map::new();
                results.insert("events".into(), num(out.n_events as f64));
                results.insert("ks".into(), num(out.ks));
                results.insert("occupancy_j0".into(), num(out.occupancy_j0));
                write_summary(&r.dir, "verify-stationary", r.seed, r.echo, results, report)
            }
            Command::ConvergeOu(_) => {
                let p: OuLimitParams = parse_params(r.params.clone())?;
                let out = run_ou_limit(&p, r.seed)?;
                let mut results = serde_json::Map::new();
                results.insert("events".into(), num(out.n_events as f64));
                results.insert("stationary_variance".into(), num(out.stationary_variance));
                results.insert("autocorrelation".into(), num(out.autocorr));
                write_summary(&r.dir, "converge-ou", r.seed, r.echo, results, out.report)
            }
            Command::SimulateThree(_) => run_simulate_three(r),
            Command::VerifyScaling(_) => {
                let p: ScalingParams = parse_params(r.params.clone())?;
                let report = run_scaling(&p, r.seed)?;
                write_summary(
                    &r.dir,
                    "verify-scaling",
                    r.seed,
                    r.echo,
                    serde_json::Map::new(),
                    report,
                )
            }
            Command::VerifyLinf(_) => {
                let p: LinfParams = parse_params(r.params.clone())?;
                let out = run_linf(&p, r.seed)?;
                write_file(&r.dir, "ecdf.csv", |w| out.ecdf.write_csv(w))?;
                let mut results = serde_json::Map::new();
                results.insert("ks_consistent".into(), num(out.ks_consistent));
                results.insert("ks_negative_part".into(), num(out.ks_negative_part));
                results.insert("censored_fraction".into(), num(out.censored_fraction));
                write_summary(&r.dir, "verify-linf", r.seed, r.echo, results, out.report)
            }
            Command::ConvergeBessel(_) => {
                let p: BesselParams = parse_params(r.params.clone())?;
                let out = run_bessel(&p, r.seed)?;
                write_file(&r.dir, "ecdf.csv", |w| out.ecdf.write_csv(w))?;
                let mut results = serde_json::Map::new();
                results.insert("ks".into(), num(out.ks));
                results.insert("collisions_coarse".into(), num(out.collisions_coarse as f64));
                results.insert("collisions_fine".into(), num(out.collisions_fine as f64));
                write_summary(&r.dir, "converge-bessel", r.seed, r.echo, results, out.report)
            }
            Command::SolveNd(_) => run_solve_nd(r),
            Command::VerifyNd(_) => {
                let p: NdSuiteParams = parse_params(r.params.clone())?;
                let report = run_nd_suite(&p, r.seed)?;
                write_summary(
                    &r.dir,
                    "verify-nd",
                    r.seed,
                    r.echo,
                    serde_json::Map::new(),
                    report,
                )
            }
        }
    };
    if threads > 0 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| RunError::Config(format!("thread pool: {e}")))?;
        pool.install(body)
    } else {
        body()
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run_to_exit(&cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("one or more verification checks failed (see summary.json)");
            ExitCode::from(4)
        }
        Err(RunError::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(2)
        }
        Err(RunError::Numerical(msg)) => {
            eprintln!("numerical failure: {msg}");
            ExitCode::from(3)
        }
        Err(RunError::Io(e)) => {
            eprintln!("io error: {e}");
            ExitCode::from(2)
        }
    }
}
