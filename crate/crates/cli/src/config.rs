//! Run configuration: a flat `key = value` text format plus flag overrides.
//!
//! ```text
//! # harmonic oscillator, two states
//! lambda 2 = -4
//! states = 2
//! grid = -8,8,2049
//! refinements = 0
//! checks = pde,reciprocity
//! ```
//!
//! `lambda k = value` may repeat. Unknown keys are rejected.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use fisherlab::{CheckKind, FdConfig, GridSpec, PolynomialPotential, SolveOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            other => Err(format!("unknown format '{other}' (expected json or csv)")),
        }
    }
}

impl Format {
    fn name(self) -> &'static str {
        match self {
            Format::Json => "json",
            Format::Csv => "csv",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub lambdas: BTreeMap<u32, f64>,
    pub states: usize,
    pub grid: Option<(f64, f64, usize)>,
    pub auto_domain: Option<bool>,
    pub tol: f64,
    pub refinements: Option<u32>,
    pub fd_step: f64,
    pub hessian_step: f64,
    pub checks: Vec<CheckKind>,
    pub scan_k: Option<u32>,
    pub scan_values: Vec<f64>,
    pub scan_states: Vec<usize>,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub jobs: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            lambdas: BTreeMap::new(),
            states: 1,
            grid: None,
            auto_domain: None,
            tol: 1e-8,
            refinements: None,
            fd_step: 1e-4,
            hessian_step: 1e-3,
            checks: CheckKind::ALL.to_vec(),
            scan_k: None,
            scan_values: Vec::new(),
            scan_states: vec![0],
            out: None,
            format: Format::Json,
            jobs: None,
        }
    }
}

fn parse_num<T: FromStr>(key: &str, v: &str) -> Result<T, String> {
    v.trim().parse().map_err(|_| format!("{key}: cannot parse '{}'", v.trim()))
}

fn parse_list<T: FromStr>(key: &str, v: &str) -> Result<Vec<T>, String> {
    v.split(',').filter(|s| !s.trim().is_empty()).map(|s| parse_num(key, s)).collect()
}

/// `k=value` as used by `--lambda` and the `lambda` config key.
pub fn parse_lambda(s: &str) -> Result<(u32, f64), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("lambda: expected k=value, got '{s}'"))?;
    Ok((parse_num("lambda power", k)?, parse_num("lambda value", v)?))
}

pub fn parse_grid(s: &str) -> Result<(f64, f64, usize), String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return Err(format!("grid: expected min,max,n, got '{s}'"));
    }
    Ok((parse_num("grid", parts[0])?, parse_num("grid", parts[1])?, parse_num("grid", parts[2])?))
}

pub fn parse_checks(s: &str) -> Result<Vec<CheckKind>, String> {
    let mut out: Vec<CheckKind> = Vec::new();
    for name in s.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let c: CheckKind = name.parse().map_err(|e: fisherlab::Error| e.to_string())?;
        if !out.contains(&c) {
            out.push(c);
        }
    }
    if out.is_empty() {
        return Err("checks: empty list".into());
    }
    out.sort();
    Ok(out)
}

fn parse_bool(key: &str, v: &str) -> Result<bool, String> {
    match v.trim() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        other => Err(format!("{key}: expected true or false, got '{other}'")),
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut cfg = RunConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            cfg.apply_line(line).map_err(|e| format!("line {}: {e}", lineno + 1))?;
        }
        Ok(cfg)
    }

    fn apply_line(&mut self, line: &str) -> Result<(), String> {
        if let Some(rest) = line.strip_prefix("lambda") {
            if rest.starts_with(char::is_whitespace) {
                let (k, v) = parse_lambda(&rest.replace(' ', ""))?;
                self.lambdas.insert(k, v);
                return Ok(());
            }
        }
        let (key, value) = line.split_once('=').ok_or_else(|| format!("expected key = value, got '{line}'"))?;
        let (key, value) = (key.trim(), value.trim());
        match key {
            "states" => self.states = parse_num(key, value)?,
            "grid" => self.grid = Some(parse_grid(value)?),
            "auto_domain" => self.auto_domain = Some(parse_bool(key, value)?),
            "tol" => self.tol = parse_num(key, value)?,
            "refinements" => self.refinements = Some(parse_num(key, value)?),
            "fd_step" => self.fd_step = parse_num(key, value)?,
            "hessian_step" => self.hessian_step = parse_num(key, value)?,
            "checks" => self.checks = parse_checks(value)?,
            "scan_k" => self.scan_k = Some(parse_num(key, value)?),
            "scan_values" => self.scan_values = parse_list(key, value)?,
            "scan_states" => self.scan_states = parse_list(key, value)?,
            "out" => self.out = Some(PathBuf::from(value)),
            "format" => self.format = value.parse()?,
            "jobs" => self.jobs = Some(parse_num(key, value)?),
            other => return Err(format!("unknown key '{other}'")),
        }
        Ok(())
    }

    /// Canonical text form; parses back to an equal config.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.lambdas {
            let _ = writeln!(s, "lambda {k} = {v:?}");
        }
        let _ = writeln!(s, "states = {}", self.states);
        if let Some((a, b, n)) = self.grid {
            let _ = writeln!(s, "grid = {a:?},{b:?},{n}");
        }
        if let Some(a) = self.auto_domain {
            let _ = writeln!(s, "auto_domain = {a}");
        }
        let _ = writeln!(s, "tol = {:?}", self.tol);
        if let Some(r) = self.refinements {
            let _ = writeln!(s, "refinements = {r}");
        }
        let _ = writeln!(s, "fd_step = {:?}", self.fd_step);
        let _ = writeln!(s, "hessian_step = {:?}", self.hessian_step);
        let checks: Vec<&str> = self.checks.iter().map(|c| c.name()).collect();
        let _ = writeln!(s, "checks = {}", checks.join(","));
        if let Some(k) = self.scan_k {
            let _ = writeln!(s, "scan_k = {k}");
        }
        if !self.scan_values.is_empty() {
            let v: Vec<String> = self.scan_values.iter().map(|x| format!("{x:?}")).collect();
            let _ = writeln!(s, "scan_values = {}", v.join(","));
        }
        let st: Vec<String> = self.scan_states.iter().map(|x| x.to_string()).collect();
        let _ = writeln!(s, "scan_states = {}", st.join(","));
        if let Some(o) = &self.out {
            let _ = writeln!(s, "out = {}", o.display());
        }
        let _ = writeln!(s, "format = {}", self.format.name());
        if let Some(j) = self.jobs {
            let _ = writeln!(s, "jobs = {j}");
        }
        s
    }

    pub fn potential(&self) -> Result<PolynomialPotential, String> {
        if self.lambdas.is_empty() {
            return Err("no multipliers given; pass --lambda k=value or a 'lambda k = value' config line".into());
        }
        PolynomialPotential::new(self.lambdas.clone()).map_err(|e| format!("invalid potential: {e}"))
    }

    pub fn solve_options(&self) -> Result<SolveOptions, String> {
        let grid = match self.grid {
            Some((a, b, n)) => Some(GridSpec::new(a, b, n).map_err(|e| e.to_string())?),
            None => None,
        };
        let auto_domain = self.auto_domain.unwrap_or(grid.is_none());
        if !auto_domain && grid.is_none() {
            return Err("auto_domain = false requires a grid".into());
        }
        if self.states == 0 {
            return Err("states must be at least 1".into());
        }
        if !(self.tol > 0.0) {
            return Err("tol must be positive".into());
        }
        let mut opts = SolveOptions {
            n_states: self.states,
            target_tolerance: self.tol,
            auto_domain,
            grid,
            ..SolveOptions::default()
        };
        if let Some(g) = grid {
            opts.initial_points = g.n_points;
        }
        if let Some(r) = self.refinements {
            opts.max_refinements = r;
        }
        Ok(opts)
    }

    pub fn fd_config(&self) -> Result<FdConfig, String> {
        if !(self.fd_step > 0.0) || !(self.hessian_step > 0.0) {
            return Err("finite-difference steps must be positive".into());
        }
        Ok(FdConfig {
            relative_step: self.fd_step,
            hessian_step: self.hessian_step,
            solve: self.solve_options()?,
            ..FdConfig::default()
        })
    }
}
