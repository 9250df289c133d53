//! Command-line front end.
//!
//! Exit codes: 0 success, 1 a check failed, 2 usage or config error, 3 runtime
//! or budget error. Errors are also printed to stderr as one JSON object.

mod checks;

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

pub use checks::{run_check, CheckOutput, CHECK_NAMES};

use crate::battery::{self, BatteryOptions};
use crate::config::{Experiment, ExperimentConfig};
use crate::error::{Error, Result};
use crate::mc::{conditional_endpoint_sample, estimate_survival, estimate_v};
use crate::oracle::dp_rows;
use crate::output::{content_hash, read_config_echo, read_table, to_json_text, upsert_report, Cell, Manifest, Table};
use crate::analysis::conditional_limit_check;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "conewalk", version, about = "Killed random walks in cones: estimators, oracles and checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Experiment config (TOML) or a run manifest (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, env = "CONEWALK_OUT")]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Replaces the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Survival curve P(τ > n) on the config grid.
    Survival,
    /// Killed expectations E[u(X(n)); τ > n] and the plateau V̂.
    EstimateV,
    /// Survivor endpoints X(n)/√n and their comparison with the limit density.
    CondLimit,
    /// Exact lattice enumeration, compared with survival.csv when present.
    Oracle,
    /// One named check; appends its verdict to report.json.
    Check { name: String },
    /// The full acceptance battery.
    Battery {
        /// Multiplies every path count.
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
    },
}

/// Exit code for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidConfig(_)
        | Error::UnknownCheck(_)
        | Error::InvalidCone(_)
        | Error::InvalidModel(_)
        | Error::DimensionMismatch { .. }
        | Error::NonLatticeModel
        | Error::InvalidArgument(_) => EXIT_USAGE,
        _ => EXIT_RUNTIME,
    }
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::InvalidCone(_) => "InvalidCone",
        Error::InvalidModel(_) => "InvalidModel",
        Error::DimensionMismatch { .. } => "DimensionMismatch",
        Error::SolverFailure(_) => "SolverFailure",
        Error::StepTooLarge { .. } => "StepTooLarge",
        Error::EmptySample => "EmptySample",
        Error::Unsupported(_) => "Unsupported",
        Error::BudgetExceeded { .. } => "BudgetExceeded",
        Error::NonLatticeModel => "NonLatticeModel",
        Error::SurvivalTooRare { .. } => "SurvivalTooRare",
        Error::InsufficientPoints { .. } => "InsufficientPoints",
        Error::TooFewSamples { .. } => "TooFewSamples",
        Error::InvalidArgument(_) => "InvalidArgument",
        Error::InvalidConfig(_) => "InvalidConfig",
        Error::UnknownCheck(_) => "UnknownCheck",
        Error::Io(_) => "Io",
    }
}

/// Parses `args` (including the program name), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{}", json!({ "error": error_kind(&e), "message": e.to_string() }));
            exit_code(&e)
        }
    }
}

fn dispatch(cli: Cli) -> Result<i32> {
    let started = Instant::now();
    if let Command::Battery { scale } = cli.command {
        let opts = BatteryOptions {
            seed: cli.seed.unwrap_or(battery::DEFAULT_SEED),
            threads: cli.threads.unwrap_or(0),
            scale,
        };
        let out = cli.out.unwrap_or_else(|| PathBuf::from("out"));
        return run_battery(&opts, &out);
    }
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Error::InvalidConfig("--config is required".into()))?;
    let (mut config, _) = ExperimentConfig::load(path)?;
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(threads) = cli.threads {
        config.threads = threads;
    }
    let out = cli
        .out
        .or_else(|| config.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    let exp = config.validate()?;
    let run = Run::new(&exp, &out);
    let code = match cli.command {
        Command::Survival => run_survival(&run),
        Command::EstimateV => run_estimate_v(&run),
        Command::CondLimit => run_cond_limit(&run),
        Command::Oracle => run_oracle(&run),
        Command::Check { name } => run_named_check(&run, &name),
        Command::Battery { .. } => unreachable!("handled above"),
    }?;
    eprintln!("wall time: {:.3} s", started.elapsed().as_secs_f64());
    Ok(code)
}

/// Writes artifacts for one command and records them in its manifest.
struct Run<'a> {
    exp: &'a Experiment,
    dir: &'a Path,
    echo: String,
    outputs: std::cell::RefCell<Vec<(String, String)>>,
}

impl<'a> Run<'a> {
    fn new(exp: &'a Experiment, dir: &'a Path) -> Self {
        Self {
            exp,
            dir,
            echo: exp.config.echo(),
            outputs: Default::default(),
        }
    }

    fn write(&self, name: &str, text: &str) -> Result<()> {
        std::fs::create_dir_all(self.dir)?;
        std::fs::write(self.dir.join(name), text)?;
        self.outputs
            .borrow_mut()
            .push((name.to_string(), content_hash(text.as_bytes())));
        Ok(())
    }

    fn table(&self, name: &str, table: &Table) -> Result<()> {
        self.write(name, &table.render(&self.echo))
    }

    fn manifest(&self, command: &str, results: Value) -> Result<()> {
        let manifest = Manifest {
            command: command.to_string(),
            config: serde_json::from_str(&self.echo).expect("echo is JSON"),
            seed: self.exp.config.seed,
            config_hash: content_hash(self.echo.as_bytes()),
            outputs: self.outputs.borrow().clone(),
            results,
        };
        let text = to_json_text(&manifest)?;
        std::fs::write(self.dir.join(format!("manifest-{command}.json")), text)?;
        Ok(())
    }
}

fn run_survival(run: &Run) -> Result<i32> {
    let exp = run.exp;
    let c = &exp.config;
    let curve = estimate_survival(&exp.model, &exp.cone, &c.x0, &exp.grid, c.paths, c.seed, c.threads)?;
    let mut t = Table::new(["n", "p_hat", "se", "N"]);
    for i in 0..curve.n.len() {
        t.push(vec![curve.n[i].into(), curve.p_hat[i].into(), curve.se[i].into(), curve.paths.into()]);
    }
    run.table("survival.csv", &t)?;
    run.manifest("survival", Value::Null)?;
    Ok(EXIT_OK)
}

fn run_estimate_v(run: &Run) -> Result<i32> {
    let exp = run.exp;
    let c = &exp.config;
    let v = estimate_v(&exp.model, &exp.cone, &c.x0, &exp.grid, c.paths, c.seed, c.threads)?;
    let mut t = Table::new(["n", "v_hat", "se"]);
    for i in 0..v.n.len() {
        t.push(vec![v.n[i].into(), v.v_hat[i].into(), v.se[i].into()]);
    }
    run.table("v_estimate.csv", &t)?;
    run.manifest(
        "estimate-v",
        json!({ "value": v.value, "stable": v.stable, "plateau": v.plateau }),
    )?;
    Ok(EXIT_OK)
}

fn run_cond_limit(run: &Run) -> Result<i32> {
    let exp = run.exp;
    let c = &exp.config;
    let n = c.checks.n;
    let sample = conditional_endpoint_sample(
        &exp.model, &exp.cone, &c.x0, n, c.checks.survivors, c.seed, c.threads,
    )?;
    let dim = exp.cone.dim();
    let mut t = Table::new(std::iter::once("path_id".to_string()).chain((1..=dim).map(|i| format!("z{i}"))));
    for (id, z) in sample.path_ids.iter().zip(&sample.scaled) {
        let mut row: Vec<Cell> = vec![(*id).into()];
        row.extend(z.iter().map(|&v| Cell::from(v)));
        t.push(row);
    }
    run.table("endpoints.csv", &t)?;
    let cell = exp.model.lattice_spacing().map(|s| s / (n as f64).sqrt());
    let check = conditional_limit_check(&sample.scaled, &exp.cone, c.checks.bins, cell)?;
    let mut d = Table::new(["bin", "upper_edge", "reference_prob", "empirical_prob", "reference_density"]);
    for i in 0..check.reference_probs.len() {
        d.push(vec![
            i.into(),
            check.edges.get(i).copied().unwrap_or(f64::INFINITY).into(),
            check.reference_probs[i].into(),
            check.empirical_probs[i].into(),
            check.reference_density[i].into(),
        ]);
    }
    run.table("density.csv", &d)?;
    run.manifest(
        "cond-limit",
        json!({ "attempts": sample.attempts, "tv": check.total_variation,
                "chi_square": check.chi_square, "normalizer": check.normalizer }),
    )?;
    Ok(EXIT_OK)
}

fn run_oracle(run: &Run) -> Result<i32> {
    let exp = run.exp;
    let c = &exp.config;
    if !exp.model.is_lattice() {
        return Err(Error::NonLatticeModel);
    }
    if c.x0.iter().any(|v| v.fract() != 0.0) {
        return Err(Error::InvalidConfig("oracle needs an integer x0".into()));
    }
    let x0: Vec<i64> = c.x0.iter().map(|&v| v as i64).collect();
    let rows = dp_rows(&exp.model, &exp.cone, &x0, c.oracle.n_max, c.oracle.memory_cap_bytes as u128)?;
    let mut t = Table::new(["n", "survival", "killed_u_expectation"]);
    for r in &rows {
        t.push(vec![r.n.into(), r.survival.into(), r.killed_u_expectation.into()]);
    }
    let oracle_text = t.render(&run.echo);
    run.write("oracle.csv", &oracle_text)?;
    let max_drift = rows
        .iter()
        .map(|r| (r.survival + r.exited - 1.0).abs())
        .fold(0.0, f64::max);
    let mut summary = json!({
        "model": c.model, "cone": c.cone, "x0": c.x0, "n_max": c.oracle.n_max,
        "checksums": { "oracle.csv": content_hash(oracle_text.as_bytes()),
                       "survival_sum": rows.iter().map(|r| r.survival).sum::<f64>(),
                       "killed_u_sum": rows.iter().map(|r| r.killed_u_expectation).sum::<f64>() },
        "max_mass_drift": max_drift,
    });
    if let Some(cmp) = compare_with_mc(run, &rows)? {
        summary["comparison"] = cmp;
    }
    run.write("oracle_summary.json", &to_json_text(&summary)?)?;
    run.manifest("oracle", Value::Null)?;
    Ok(EXIT_OK)
}

/// Reads `survival.csv` from the run directory when it comes from the same cone,
/// model and start, and writes `comparison.csv` with 3σ flags.
fn compare_with_mc(run: &Run, rows: &[crate::oracle::OracleRow]) -> Result<Option<Value>> {
    let Ok(text) = std::fs::read_to_string(run.dir.join("survival.csv")) else {
        return Ok(None);
    };
    let c = &run.exp.config;
    let Some(echo) = read_config_echo(&text) else {
        return Ok(None);
    };
    let ours = serde_json::to_value(c).expect("config serialises");
    if ["cone", "model", "x0"].iter().any(|k| echo.get(*k) != ours.get(*k)) {
        return Ok(None);
    }
    let Some((_, data)) = read_table(&text) else {
        return Ok(None);
    };
    let mut t = Table::new(["n", "exact", "p_hat", "se", "within_3sigma"]);
    let (mut total, mut within) = (0usize, 0usize);
    for row in data {
        let parsed = (row[0].parse::<usize>(), row[1].parse::<f64>(), row[2].parse::<f64>());
        let (Ok(n), Ok(p_hat), Ok(se)) = parsed else {
            return Err(Error::InvalidConfig("survival.csv is malformed".into()));
        };
        let Some(exact) = rows.get(n) else { continue };
        let ok = (p_hat - exact.survival).abs() <= 3.0 * se || p_hat == exact.survival;
        total += 1;
        within += ok as usize;
        t.push(vec![n.into(), exact.survival.into(), p_hat.into(), se.into(), ok.into()]);
    }
    run.table("comparison.csv", &t)?;
    Ok(Some(json!({ "rows": total, "within_3sigma": within,
                    "fraction": if total > 0 { within as f64 / total as f64 } else { 1.0 } })))
}

fn run_named_check(run: &Run, name: &str) -> Result<i32> {
    if !CHECK_NAMES.contains(&name) {
        return Err(Error::UnknownCheck(name.to_string()));
    }
    let out = run_check(run.exp, name)?;
    run.table(&format!("check_{name}.csv"), &out.table)?;
    std::fs::create_dir_all(run.dir)?;
    upsert_report(run.dir, std::slice::from_ref(&out.verdict))?;
    run.manifest(&format!("check-{name}"), json!({ "pass": out.verdict.pass }))?;
    println!(
        "{}: {}",
        name,
        if out.verdict.pass { "pass" } else { "FAIL" }
    );
    Ok(if out.verdict.pass { EXIT_OK } else { EXIT_CHECK_FAILED })
}

fn run_battery(opts: &BatteryOptions, out: &Path) -> Result<i32> {
    std::fs::create_dir_all(out)?;
    let outcomes = battery::run_all(opts, |o| println!("{}", o.line()));
    let verdicts: Vec<_> = outcomes.iter().map(|o| o.verdict(opts)).collect();
    upsert_report(out, &verdicts)?;
    Ok(if outcomes.iter().all(|o| o.pass) { EXIT_OK } else { EXIT_CHECK_FAILED })
}
