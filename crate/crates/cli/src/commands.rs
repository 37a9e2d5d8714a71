use std::collections::BTreeMap;

use fisherlab::ansatz::{alpha_fit, constants_consistency, fisher_convexity, fisher_fit, validate_scan, ScanPoint, SingleTermScan};
use fisherlab::observables::{cramer_rao_product, fisher_all, moment, moments_for, MomentSet};
use fisherlab::report::{ReportMetadata, Tolerances};
use fisherlab::translate::{
    recentered_spectrum_check, shifted_fim_expression, shifted_identity_check, shifted_moment_direct, shifted_moments,
    shifted_multipliers, shifted_virial_check,
};
use fisherlab::{solve, solve_with_history, verify, Error, PolynomialPotential, SolveOptions, VerificationReport};
use rayon::prelude::*;
use serde_json::{json, Map, Value};

use crate::config::RunConfig;
use crate::output::{fmt_float, Table};

/// Why a command could not produce a complete result.
#[derive(Debug)]
pub enum Failure {
    Config(String),
    Numerical(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::EmptyPotential
            | Error::NotConfining { .. }
            | Error::InvalidPower(_)
            | Error::NonFinite(_)
            | Error::InvalidGrid(_)
            | Error::InvalidArgument(_)
            | Error::InsufficientScan(_)
            | Error::NonpositiveScale(_) => Failure::Config(e.to_string()),
            _ => Failure::Numerical(e.to_string()),
        }
    }
}

impl From<String> for Failure {
    fn from(s: String) -> Self {
        Failure::Config(s)
    }
}

pub struct CommandOutput {
    /// Command-specific report fields, in output order.
    pub body: Map<String, Value>,
    pub table: Table,
    pub checks: Option<VerificationReport>,
    /// Set when a scan stopped early; the table holds the rows up to it.
    pub partial_failure: Option<String>,
}

impl CommandOutput {
    pub fn pass(&self) -> bool {
        self.checks.as_ref().is_none_or(VerificationReport::all_pass)
    }
}

fn metadata(cfg: &RunConfig, p: &PolynomialPotential, grid: Option<fisherlab::GridSpec>) -> ReportMetadata {
    ReportMetadata {
        potential: p.multipliers(),
        grid,
        fd_relative_step: cfg.fd_step,
        fd_hessian_step: cfg.hessian_step,
        notes: Vec::new(),
    }
}

fn moments_json(m: &MomentSet) -> Value {
    Value::Object(m.iter().map(|(k, v)| (k.to_string(), json!(v))).collect())
}

fn check_table(r: &VerificationReport) -> Table {
    let mut t = Table::new(["name", "value", "tolerance", "pass"]);
    for e in &r.entries {
        t.rows.push(vec![e.name.clone(), fmt_float(e.value), fmt_float(e.tolerance), e.pass.to_string()]);
    }
    t
}

pub fn cmd_solve(cfg: &RunConfig) -> Result<CommandOutput, Failure> {
    let p = cfg.potential()?;
    let opts = cfg.solve_options()?;
    let out = solve_with_history(&p, &opts)?;
    let grid = out.states[0].grid;
    let mut states = Vec::new();
    for s in &out.states {
        let m = moments_for(s, &p);
        let f = fisher_all(s, &p, &m)?;
        states.push(json!({
            "index": s.index,
            "alpha": s.alpha,
            "energy": s.energy(),
            "nodes": s.node_count(),
            "fisher": f,
            "cramer_rao": cramer_rao_product(s),
            "moments": moments_json(&m),
        }));
    }
    let mut header = vec!["x".to_string()];
    header.extend((0..out.states.len()).map(|i| format!("psi_{i}")));
    let mut table = Table::new(header);
    for (i, x) in grid.points().enumerate() {
        let mut row = vec![fmt_float(x)];
        row.extend(out.states.iter().map(|s| fmt_float(s.psi[i])));
        table.rows.push(row);
    }
    let mut body = Map::new();
    body.insert("alpha".into(), json!(out.states.iter().map(|s| s.alpha).collect::<Vec<_>>()));
    body.insert("grid".into(), json!(grid));
    body.insert("states".into(), Value::Array(states));
    body.insert("refinement".into(), json!(out.history));
    Ok(CommandOutput { body, table, checks: None, partial_failure: None })
}

pub fn cmd_verify(cfg: &RunConfig) -> Result<CommandOutput, Failure> {
    let p = cfg.potential()?;
    let opts = cfg.solve_options()?;
    let fd = cfg.fd_config()?;
    let out = verify(&p, &opts, &fd, &cfg.checks, &Tolerances::default())?;
    let mut body = Map::new();
    body.insert("alpha".into(), json!(out.states.iter().map(|s| s.alpha).collect::<Vec<_>>()));
    body.insert("states".into(), json!(out.states));
    body.insert("tolerances".into(), json!(Tolerances::default()));
    let table = check_table(&out.report);
    Ok(CommandOutput { body, table, checks: Some(out.report), partial_failure: None })
}

pub fn cmd_scan(cfg: &RunConfig) -> Result<CommandOutput, Failure> {
    let k = cfg.scan_k.ok_or_else(|| Failure::Config("scan needs a power: --k K or 'scan_k = K'".into()))?;
    if cfg.scan_values.is_empty() {
        return Err(Failure::Config("scan needs multiplier values: --values v1,v2,... or 'scan_values = ...'".into()));
    }
    if cfg.scan_states.is_empty() {
        return Err(Failure::Config("scan needs at least one state index".into()));
    }
    validate_scan(k, &cfg.scan_values)?;
    let top = *cfg.scan_states.iter().max().expect("nonempty");
    let opts = SolveOptions { n_states: top + 1, ..cfg.solve_options()? };
    let results: Vec<Result<Vec<ScanPoint>, Error>> = cfg
        .scan_values
        .par_iter()
        .map(|&lambda| {
            let p = PolynomialPotential::new([(k, lambda)])?;
            let states = solve(&p, &opts)?;
            Ok(cfg
                .scan_states
                .iter()
                .map(|&n| {
                    let s = &states[n];
                    ScanPoint { lambda, alpha: s.alpha, fisher: fisher_all(s, &p, &moments_for(s, &p)).map_or(f64::NAN, |f| f.direct), moment: moment(s, k) }
                })
                .collect())
        })
        .collect();

    let mut table = Table::new(["state", "lambda_k", "alpha_n", "I_direct", "moment_k"]);
    let mut scans: Vec<SingleTermScan> =
        cfg.scan_states.iter().map(|&n| SingleTermScan { k, state: n, points: Vec::new() }).collect();
    let mut failure = None;
    for (lambda, r) in cfg.scan_values.iter().zip(results) {
        match r {
            Ok(points) => {
                for (scan, pt) in scans.iter_mut().zip(points) {
                    table.rows.push(vec![
                        scan.state.to_string(),
                        fmt_float(pt.lambda),
                        fmt_float(pt.alpha),
                        fmt_float(pt.fisher),
                        fmt_float(pt.moment),
                    ]);
                    scan.points.push(pt);
                }
            }
            Err(e) => {
                table.rows.push(vec!["failed".into(), fmt_float(*lambda), e.to_string(), String::new(), String::new()]);
                failure = Some(format!("scan stopped at lambda = {lambda}: {e}"));
                break;
            }
        }
    }
    let p = PolynomialPotential::new([(k, cfg.scan_values[0])])?;
    let mut report = VerificationReport::new(metadata(cfg, &p, None));
    let mut fits = Vec::new();
    if failure.is_none() {
        for scan in &scans {
            let n = scan.state;
            let a = alpha_fit(scan);
            let f = fisher_fit(scan);
            let constants = constants_consistency(f.coefficient, a.coefficient, k)?;
            let convexity = fisher_convexity(scan);
            report.push(format!("state{n}.alpha_exponent"), a.exponent_error(), 1e-4);
            report.push(format!("state{n}.fisher_exponent"), f.exponent_error(), 1e-3);
            report.push_at_least(format!("state{n}.alpha_r_squared"), a.r_squared, 0.999999);
            report.push_at_least(format!("state{n}.fisher_convexity"), convexity, -1e-8);
            report.push(format!("state{n}.constants_product"), constants.product_residual, 1e-3);
            fits.push(json!({
                "state": n,
                "alpha_fit": a,
                "fisher_fit": f,
                "constants": constants,
            }));
        }
    }
    let mut body = Map::new();
    body.insert("k".into(), json!(k));
    body.insert("values".into(), json!(cfg.scan_values));
    body.insert("fits".into(), Value::Array(fits));
    Ok(CommandOutput { body, table, checks: Some(report), partial_failure: failure })
}

pub fn cmd_translate(cfg: &RunConfig) -> Result<CommandOutput, Failure> {
    let p = cfg.potential()?;
    let opts = cfg.solve_options()?;
    let shift = shifted_multipliers(&p)?;
    let states = solve(&p, &opts)?;
    let mut report = VerificationReport::new(metadata(cfg, &p, Some(states[0].grid)));
    report.metadata.notes.push("shifted moments use the complete binomial sum j = 0..k".into());
    let scale = shift.multipliers.values().fold(1.0f64, |m, v| m.max(v.abs()));
    report.push("lambda1_star", shift.lambda(1).abs(), 1e-8 * scale);
    let quadratic_only = shift.multipliers.iter().all(|(&k, &l)| k <= 2 || l.abs() <= 1e-12 * scale);
    let k_max = p.degree().max(2) + 2;
    let mut per_state = Vec::new();
    for s in &states {
        let n = s.index;
        let id = shifted_identity_check(s, &p, &shift)?;
        let vir = shifted_virial_check(s, &p, &shift)?;
        let mom = MomentSet::from_values(&(1..=k_max).map(|k| moment(s, k)).collect::<Vec<_>>());
        let shifted = shifted_moments(&mom, shift.xi, k_max)?;
        let consistency = (1..=k_max)
            .map(|k| (shifted.get(k).unwrap_or(f64::NAN) - shifted_moment_direct(s, shift.xi, k)).abs())
            .fold(0.0, f64::max);
        report.push(format!("state{n}.shifted_identity"), id.residual, 1e-5);
        report.push(format!("state{n}.shifted_virial"), vir.residual, 1e-4);
        report.push(format!("state{n}.shift_invariance"), id.invariance_residual, 1e-8);
        report.push(format!("state{n}.moment_consistency"), consistency, 1e-8);
        let mut entry = json!({
            "index": n,
            "alpha": s.alpha,
            "alpha_bar": id.alpha_bar,
            "fisher": id.fisher,
            "cramer_rao": cramer_rao_product(s),
            "shifted_moments": moments_json(&shifted),
            "shifted_identity": id,
            "shifted_virial": vir,
        });
        if n == 0 && quadratic_only {
            let cbar: BTreeMap<u32, f64> = [(2, 1.0)].into_iter().collect();
            let frame = shifted_fim_expression(&shifted, &cbar)?;
            let r = (frame - id.fisher).abs() / id.fisher.abs().max(1.0);
            report.push("state0.frame_fisher", r, 1e-5);
            entry["frame_fisher"] = json!(frame);
        }
        per_state.push(entry);
    }
    let spectrum = recentered_spectrum_check(&p, &shift, &opts)?;
    report.push("recentered_spectrum", spectrum.max_residual, 1e-6);
    let mut body = Map::new();
    body.insert("xi".into(), json!(shift.xi));
    body.insert("u_min".into(), json!(shift.u_min));
    body.insert("tie".into(), json!(shift.tie));
    body.insert("shifted_multipliers".into(), json!(shift.multipliers));
    body.insert("states".into(), Value::Array(per_state));
    body.insert("recentered_spectrum".into(), json!(spectrum));
    let table = check_table(&report);
    Ok(CommandOutput { body, table, checks: Some(report), partial_failure: None })
}
