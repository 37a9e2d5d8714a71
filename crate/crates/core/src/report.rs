//! Residual bookkeeping for a full verification run on one potential.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::eigensolver::{solve_with_history, SolveOptions};
use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::legendre::{euler_from_probe, pde_from_probe, reciprocity_from_probe, pairing_from_probe, AlphaHessian, FdConfig, LegendreProbe};
use crate::observables::{cramer_rao_product, fisher_all, moments_for, virial_check, FisherTriple};
use crate::potential::PolynomialPotential;
use crate::translate::{shifted_identity_check, shifted_multipliers, shifted_virial_check};

/// One named residual.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckEntry {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportMetadata {
    pub potential: BTreeMap<u32, f64>,
    pub grid: Option<GridSpec>,
    pub fd_relative_step: f64,
    pub fd_hessian_step: f64,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub entries: Vec<CheckEntry>,
    pub metadata: ReportMetadata,
}

impl VerificationReport {
    pub fn new(metadata: ReportMetadata) -> Self {
        Self { entries: Vec::new(), metadata }
    }

    /// Records `value <= tolerance`.
    pub fn push(&mut self, name: impl Into<String>, value: f64, tolerance: f64) {
        let pass = value <= tolerance;
        self.entries.push(CheckEntry { name: name.into(), value, tolerance, pass });
    }

    /// Records `value >= bound`.
    pub fn push_at_least(&mut self, name: impl Into<String>, value: f64, bound: f64) {
        let pass = value >= bound;
        self.entries.push(CheckEntry { name: name.into(), value, tolerance: bound, pass });
    }

    pub fn all_pass(&self) -> bool {
        self.entries.iter().all(|e| e.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckEntry> {
        self.entries.iter().filter(|e| !e.pass)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    Fisher,
    Virial,
    Reciprocity,
    Euler,
    Pde,
    Pairing,
    Concavity,
    CramerRao,
    Translation,
}

impl CheckKind {
    pub const ALL: [CheckKind; 9] = [
        CheckKind::Fisher,
        CheckKind::Virial,
        CheckKind::Reciprocity,
        CheckKind::Euler,
        CheckKind::Pde,
        CheckKind::Pairing,
        CheckKind::Concavity,
        CheckKind::CramerRao,
        CheckKind::Translation,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CheckKind::Fisher => "fisher",
            CheckKind::Virial => "virial",
            CheckKind::Reciprocity => "reciprocity",
            CheckKind::Euler => "euler",
            CheckKind::Pde => "pde",
            CheckKind::Pairing => "pairing",
            CheckKind::Concavity => "concavity",
            CheckKind::CramerRao => "cramer_rao",
            CheckKind::Translation => "translation",
        }
    }

    fn needs_fd(self) -> bool {
        matches!(self, CheckKind::Reciprocity | CheckKind::Euler | CheckKind::Pde | CheckKind::Pairing | CheckKind::Concavity)
    }
}

impl fmt::Display for CheckKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CheckKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CheckKind::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown check '{s}'")))
    }
}

/// Tolerances applied by [`verify`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerances {
    pub fisher_ground: f64,
    pub fisher_excited: f64,
    pub virial: f64,
    pub reciprocity: f64,
    pub euler: f64,
    pub pde: f64,
    pub pairing: f64,
    pub concavity: f64,
    pub cramer_rao: f64,
    pub shifted: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            fisher_ground: 1e-4,
            fisher_excited: 1e-3,
            virial: 1e-4,
            reciprocity: 1e-4,
            euler: 1e-3,
            pde: 1e-3,
            pairing: 5e-3,
            concavity: 1e-6,
            cramer_rao: 1e-9,
            shifted: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StateSummary {
    pub index: usize,
    pub alpha: f64,
    pub nodes: usize,
    pub fisher: FisherTriple,
    pub cramer_rao: f64,
}

/// Everything a verification run produced.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyOutcome {
    pub states: Vec<StateSummary>,
    pub report: VerificationReport,
}

/// Runs the selected checks for the lowest `opts.n_states` states of `p`.
pub fn verify(
    p: &PolynomialPotential,
    opts: &SolveOptions,
    fd: &FdConfig,
    checks: &[CheckKind],
    tol: &Tolerances,
) -> Result<VerifyOutcome> {
    let outcome = solve_with_history(p, opts)?;
    let grid = outcome.states.first().map(|s| s.grid);
    let mut report = VerificationReport::new(ReportMetadata {
        potential: p.multipliers(),
        grid,
        fd_relative_step: fd.relative_step,
        fd_hessian_step: fd.hessian_step,
        notes: vec![
            "Fisher-information Hessian in moment space from the inverse of the FD moment Jacobian".into(),
            "FD derivatives re-solve on the unperturbed grid; states matched by index".into(),
        ],
    });
    let has = |c: CheckKind| checks.contains(&c);
    let shift = if has(CheckKind::Translation) { Some(shifted_multipliers(p)?) } else { None };
    let mut states = Vec::with_capacity(outcome.states.len());
    for s in &outcome.states {
        let n = s.index;
        let m = moments_for(s, p);
        let fisher = fisher_all(s, p, &m)?;
        let cr = cramer_rao_product(s);
        if has(CheckKind::Fisher) {
            let t = if n == 0 { tol.fisher_ground } else { tol.fisher_excited };
            report.push(format!("state{n}.fisher_spread"), fisher.max_spread, t);
        }
        if has(CheckKind::Virial) {
            report.push(format!("state{n}.virial"), virial_check(s, p).residual, tol.virial);
        }
        if has(CheckKind::CramerRao) {
            report.push_at_least(format!("state{n}.cramer_rao"), cr, 1.0 - tol.cramer_rao);
        }
        if checks.iter().any(|c| c.needs_fd()) {
            let fd_n = FdConfig { solve: SolveOptions { n_states: n + 1, ..opts.clone() }, ..fd.clone() };
            let probe = LegendreProbe::new(p, n, &fd_n)?;
            let powers = p.powers();
            if has(CheckKind::Reciprocity) {
                for (k, r) in reciprocity_from_probe(&probe, &powers, fd.relative_step)? {
                    report.push(format!("state{n}.reciprocity.k{k}"), r.residual, tol.reciprocity);
                }
            }
            if has(CheckKind::Euler) {
                for &k in &powers {
                    report.push(format!("state{n}.euler.k{k}"), euler_from_probe(&probe, k)?.residual, tol.euler);
                }
            }
            if has(CheckKind::Pde) {
                report.push(format!("state{n}.pde"), pde_from_probe(&probe)?.residual, tol.pde);
            }
            if has(CheckKind::Pairing) {
                report.push(format!("state{n}.pairing"), pairing_from_probe(&probe, &powers)?.residual, tol.pairing);
            }
            if has(CheckKind::Concavity) {
                let h = AlphaHessian::from_probe(&probe, &powers)?;
                report.push(format!("state{n}.hessian_max_eigenvalue"), h.max_eigenvalue(), tol.concavity);
            }
        }
        if let Some(shift) = &shift {
            let id = shifted_identity_check(s, p, shift)?;
            report.push(format!("state{n}.shifted_identity"), id.residual, tol.shifted);
            report.push(format!("state{n}.shift_invariance"), id.invariance_residual, tol.shifted);
            report.push(format!("state{n}.shifted_virial"), shifted_virial_check(s, p, shift)?.residual, tol.shifted);
        }
        states.push(StateSummary { index: n, alpha: s.alpha, nodes: s.node_count(), fisher, cramer_rao: cr });
    }
    Ok(VerifyOutcome { states, report })
}
