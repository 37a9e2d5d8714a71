//! `fisherlab` batch command line.
//!
//! ```text
//! fisherlab solve     --lambda 2=-4 --states 2
//! fisherlab verify    --config quartic.conf --checks pde,reciprocity
//! fisherlab scan      --lambda 4=-1 --k 4 --values -1,-1.58,-2.51,-3.98,-6.31,-10 --out runs/k4
//! fisherlab translate --lambda 1=8 --lambda 2=-4
//! ```
//!
//! Exit status: 0 when every check passes, 1 when a check fails, 2 for a
//! configuration error, 3 for a numerical failure.

mod commands;
mod config;
mod output;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Map, Value};

use commands::{CommandOutput, Failure};
use config::{parse_checks, parse_grid, parse_lambda, Format, RunConfig};
use output::{to_json, with_extension, write_file};

const SCHEMA: u32 = 1;

#[derive(Parser)]
#[command(name = "fisherlab", version, about = "Eigenvalues, Fisher information and Legendre identities for polynomial potentials")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve for the lowest states and dump the wavefunctions.
    Solve(Common),
    /// Run the identity checks on one potential.
    Verify(Common),
    /// Sweep one single-term multiplier and fit the power laws.
    Scan(Common),
    /// Re-expand about the potential minimum and check the shifted identities.
    Translate(Common),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Solve(_) => "solve",
            Command::Verify(_) => "verify",
            Command::Scan(_) => "scan",
            Command::Translate(_) => "translate",
        }
    }

    fn common(&self) -> &Common {
        match self {
            Command::Solve(c) | Command::Verify(c) | Command::Scan(c) | Command::Translate(c) => c,
        }
    }
}

#[derive(Args)]
struct Common {
    /// `key = value` configuration file; flags given alongside override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Multiplier `k=value` of the term `x^k`; repeatable.
    #[arg(long = "lambda", value_name = "K=VALUE", allow_hyphen_values = true, value_parser = parse_lambda)]
    lambdas: Vec<(u32, f64)>,
    #[arg(long)]
    states: Option<usize>,
    /// Fixed grid `min,max,n`.
    #[arg(long, value_name = "MIN,MAX,N", allow_hyphen_values = true, value_parser = parse_grid)]
    grid: Option<(f64, f64, usize)>,
    /// Widen the domain until the tails are negligible.
    #[arg(long)]
    auto_domain: bool,
    /// Target relative change of α between refinements.
    #[arg(long)]
    tol: Option<f64>,
    /// Maximum grid halvings; 0 solves once on the starting grid.
    #[arg(long)]
    refinements: Option<u32>,
    /// Relative finite-difference step for first derivatives in λ.
    #[arg(long)]
    fd_step: Option<f64>,
    /// Relative finite-difference step for second derivatives in λ.
    #[arg(long)]
    hessian_step: Option<f64>,
    /// Comma-separated subset of checks to run.
    #[arg(long)]
    checks: Option<String>,
    /// Power swept by `scan`.
    #[arg(long = "k")]
    scan_k: Option<u32>,
    /// Comma-separated multiplier values swept by `scan`.
    #[arg(long = "values", value_delimiter = ',', allow_hyphen_values = true, num_args = 0..=1)]
    scan_values: Option<Vec<f64>>,
    /// Comma-separated state indices fitted by `scan`.
    #[arg(long, value_delimiter = ',')]
    scan_states: Option<Vec<usize>>,
    /// Worker threads for scans.
    #[arg(long)]
    jobs: Option<usize>,
    /// Write `PREFIX.json` and `PREFIX.csv`.
    #[arg(long, value_name = "PREFIX")]
    out: Option<PathBuf>,
    /// What to print on standard output.
    #[arg(long, value_parser = |s: &str| s.parse::<Format>())]
    format: Option<Format>,
    /// Include wall-clock timing in the report.
    #[arg(long)]
    timing: bool,
}

fn build_config(c: &Common) -> Result<RunConfig, String> {
    let mut cfg = match &c.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
            RunConfig::parse(&text).map_err(|e| format!("{}: {e}", path.display()))?
        }
        None => RunConfig::default(),
    };
    cfg.lambdas.extend(c.lambdas.iter().copied());
    if let Some(v) = c.states {
        cfg.states = v;
    }
    if c.grid.is_some() {
        cfg.grid = c.grid;
    }
    if c.auto_domain {
        cfg.auto_domain = Some(true);
    }
    if let Some(v) = c.tol {
        cfg.tol = v;
    }
    if c.refinements.is_some() {
        cfg.refinements = c.refinements;
    }
    if let Some(v) = c.fd_step {
        cfg.fd_step = v;
    }
    if let Some(v) = c.hessian_step {
        cfg.hessian_step = v;
    }
    if let Some(v) = &c.checks {
        cfg.checks = parse_checks(v)?;
    }
    if c.scan_k.is_some() {
        cfg.scan_k = c.scan_k;
    }
    if let Some(v) = &c.scan_values {
        cfg.scan_values = v.clone();
    }
    if let Some(v) = &c.scan_states {
        cfg.scan_states = v.clone();
    }
    if c.jobs.is_some() {
        cfg.jobs = c.jobs;
    }
    if c.out.is_some() {
        cfg.out = c.out.clone();
    }
    if let Some(f) = c.format {
        cfg.format = f;
    }
    Ok(cfg)
}

/// The echo covers everything that can change the numbers, so reruns with a
/// different output path or thread count produce identical reports.
fn echo(cfg: &RunConfig) -> Vec<String> {
    let numeric = RunConfig { out: None, jobs: None, format: Format::Json, ..cfg.clone() };
    numeric.to_text().lines().map(str::to_owned).collect()
}

fn document(command: &str, cfg: &RunConfig, out: &CommandOutput, elapsed: Option<f64>) -> Value {
    let mut doc = Map::new();
    doc.insert("tool".into(), json!("fisherlab"));
    doc.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
    doc.insert("schema".into(), json!(SCHEMA));
    doc.insert("command".into(), json!(command));
    doc.insert("config".into(), json!(echo(cfg)));
    doc.insert("potential".into(), json!(cfg.lambdas));
    for (k, v) in &out.body {
        doc.insert(k.clone(), v.clone());
    }
    if let Some(r) = &out.checks {
        doc.insert("checks".into(), json!(r.entries));
        doc.insert("metadata".into(), json!(r.metadata));
    }
    if let Some(msg) = &out.partial_failure {
        doc.insert("error".into(), json!(msg));
    }
    doc.insert("pass".into(), json!(out.partial_failure.is_none() && out.pass()));
    if let Some(t) = elapsed {
        doc.insert("timing".into(), json!({ "wall_seconds": t }));
    }
    Value::Object(doc)
}

fn run(cli: &Cli) -> Result<ExitCode, Failure> {
    let common = cli.cmd.common();
    let cfg = build_config(common)?;
    if let Some(n) = cfg.jobs {
        if n == 0 {
            return Err(Failure::Config("jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Config(format!("cannot start {n} worker threads: {e}")))?;
    }
    let start = Instant::now();
    let out = match &cli.cmd {
        Command::Solve(_) => commands::cmd_solve(&cfg),
        Command::Verify(_) => commands::cmd_verify(&cfg),
        Command::Scan(_) => commands::cmd_scan(&cfg),
        Command::Translate(_) => commands::cmd_translate(&cfg),
    }?;
    let elapsed = common.timing.then(|| start.elapsed().as_secs_f64());
    let json_text = to_json(document(cli.cmd.name(), &cfg, &out, elapsed));
    let csv_text = out.table.render();
    if let Some(prefix) = &cfg.out {
        for (ext, text) in [("json", &json_text), ("csv", &csv_text)] {
            let path = with_extension(prefix, ext);
            write_file(&path, text).map_err(|e| Failure::Config(format!("cannot write {}: {e}", path.display())))?;
        }
    }
    let shown = match cfg.format {
        Format::Json => &json_text,
        Format::Csv => &csv_text,
    };
    let _ = std::io::stdout().lock().write_all(shown.as_bytes());
    if let Some(msg) = &out.partial_failure {
        eprintln!("error: {msg}");
        return Ok(ExitCode::from(3));
    }
    if !out.pass() {
        if let Some(r) = &out.checks {
            for e in r.failures() {
                eprintln!("check failed: {} = {:e} (tolerance {:e})", e.name, e.value, e.tolerance);
            }
        }
        return Ok(ExitCode::from(1));
    }
    Ok(ExitCode::SUCCESS)
}

fn usage(cmd: &Command) -> &'static str {
    match cmd {
        Command::Scan(_) => "fisherlab scan --k K --values V1,V2,... [options]",
        Command::Solve(_) => "fisherlab solve --lambda K=VALUE [--lambda K=VALUE ...] [options]",
        Command::Verify(_) => "fisherlab verify --lambda K=VALUE [--lambda K=VALUE ...] [options]",
        Command::Translate(_) => "fisherlab translate --lambda K=VALUE [--lambda K=VALUE ...] [options]",
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(code) => code,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            eprintln!("usage: {}; see --help", usage(&cli.cmd));
            ExitCode::from(2)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("numerical failure: {msg}");
            ExitCode::from(3)
        }
    }
}
