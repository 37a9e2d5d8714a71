//! Browser bindings for the fisherlab solver.
//!
//! Each exported function takes plain numbers and returns a JSON string that
//! the page in `www/` draws on a canvas. The `*_report` functions hold the
//! logic and are ordinary Rust, so they can be tested natively.

use fisherlab::ansatz::{alpha_fit, constants_consistency, decade_values, fisher_fit, scan_single_term, ConstantsTriple, PowerLawFit, ScanPoint};
use fisherlab::legendre::LegendreProbe;
use fisherlab::observables::{cramer_rao_product, fisher_all, moment, moments_for, FisherTriple};
use fisherlab::{solve, FdConfig, PolynomialPotential, SolveOptions};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Samples sent to the page per curve.
const PLOT_POINTS: usize = 400;

/// Solver options for interactive use, at relative tolerance 1e-6.
fn demo_options(n_states: usize) -> SolveOptions {
    SolveOptions { n_states, target_tolerance: 1e-6, ..SolveOptions::default() }
}

fn potential(powers: &[u32], values: &[f64]) -> Result<PolynomialPotential, String> {
    if powers.len() != values.len() {
        return Err(format!("{} powers but {} values", powers.len(), values.len()));
    }
    PolynomialPotential::new(powers.iter().copied().zip(values.iter().copied())).map_err(|e| e.to_string())
}

#[derive(Debug, Clone, Serialize)]
pub struct StateView {
    pub index: usize,
    pub alpha: f64,
    pub energy: f64,
    pub nodes: usize,
    pub fisher: FisherTriple,
    pub cramer_rao: f64,
    pub psi: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumView {
    pub x: Vec<f64>,
    pub u: Vec<f64>,
    pub states: Vec<StateView>,
}

/// Lowest `n_states` levels with their wavefunctions thinned to the plot
/// resolution and clipped to where the potential stays below the top level
/// plus a margin.
pub fn spectrum_report(powers: &[u32], values: &[f64], n_states: usize) -> Result<SpectrumView, String> {
    if n_states == 0 || n_states > 8 {
        return Err(format!("number of states must be 1..=8, got {n_states}"));
    }
    let p = potential(powers, values)?;
    let states = solve(&p, &demo_options(n_states)).map_err(|e| e.to_string())?;
    let grid = states[0].grid;
    let top = states[n_states - 1].energy();
    let margin = 1.0 + (top - grid.points().map(|x| p.eval(x)).fold(f64::INFINITY, f64::min));
    let inside: Vec<usize> = (0..grid.n_points).filter(|&i| p.eval(grid.x(i)) <= top + margin).collect();
    let (lo, hi) = (inside[0], inside[inside.len() - 1]);
    let stride = ((hi - lo) / PLOT_POINTS).max(1);
    let idx: Vec<usize> = (lo..=hi).step_by(stride).collect();

    let mut views = Vec::with_capacity(states.len());
    for s in &states {
        let fisher = fisher_all(s, &p, &moments_for(s, &p)).map_err(|e| e.to_string())?;
        views.push(StateView {
            index: s.index,
            alpha: s.alpha,
            energy: s.energy(),
            nodes: s.node_count(),
            fisher,
            cramer_rao: cramer_rao_product(s),
            psi: idx.iter().map(|&i| s.psi[i]).collect(),
        });
    }
    Ok(SpectrumView {
        x: idx.iter().map(|&i| grid.x(i)).collect(),
        u: idx.iter().map(|&i| p.eval(grid.x(i))).collect(),
        states: views,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct PowerLawView {
    pub points: Vec<ScanPoint>,
    pub alpha_fit: PowerLawFit,
    pub fisher_fit: PowerLawFit,
    pub constants: ConstantsTriple,
}

/// Single-term scan `{k: λ}` over one decade starting at `start`.
pub fn power_law_report(k: u32, start: f64, count: usize, state: usize) -> Result<PowerLawView, String> {
    if state > 4 {
        return Err(format!("state index must be at most 4, got {state}"));
    }
    let values = decade_values(start, count);
    let scan = scan_single_term(k, &values, state, &demo_options(state + 1)).map_err(|e| e.to_string())?;
    let a = alpha_fit(&scan);
    let f = fisher_fit(&scan);
    let constants = constants_consistency(f.coefficient, a.coefficient, k).map_err(|e| e.to_string())?;
    Ok(PowerLawView { points: scan.points, alpha_fit: a, fisher_fit: f, constants })
}

#[derive(Debug, Clone, Serialize)]
pub struct CurvePoint {
    pub lambda: f64,
    pub alpha: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LegendreView {
    pub k: u32,
    pub lambda: f64,
    pub alpha: f64,
    /// `<x^k>` of the base state.
    pub moment: f64,
    /// Tangent slope `-<x^k>` predicted by the reciprocity relation.
    pub slope_predicted: f64,
    /// Central difference of `α` in `λ_k`.
    pub slope_numeric: f64,
    pub curve: Vec<CurvePoint>,
}

/// `α_n` as a function of one multiplier `λ_k` with every other multiplier
/// held fixed, sampled over `λ_k ± span·max(|λ_k|, 1)`. Samples that would
/// make the potential non-confining are left out.
pub fn legendre_report(
    powers: &[u32],
    values: &[f64],
    k: u32,
    state: usize,
    span: f64,
    samples: usize,
) -> Result<LegendreView, String> {
    if !(span > 0.0) || samples < 3 {
        return Err("span must be positive and samples at least 3".into());
    }
    let p = potential(powers, values)?;
    let cfg = FdConfig { solve: demo_options(state + 1), ..FdConfig::default() };
    let probe = LegendreProbe::new(&p, state, &cfg).map_err(|e| e.to_string())?;
    let slope_numeric = probe.gradient(&[k], cfg.relative_step).map_err(|e| e.to_string())?[&k];
    let lambda = p.lambda(k);
    let half = span * lambda.abs().max(1.0);
    let mut curve = Vec::with_capacity(samples);
    for j in 0..samples {
        let delta = -half + 2.0 * half * j as f64 / (samples - 1) as f64;
        let Ok(q) = probe.perturbed(&[(k, delta)]) else { continue };
        if let Ok(s) = probe.solve_at(&q) {
            curve.push(CurvePoint { lambda: lambda + delta, alpha: s.alpha });
        }
    }
    let m = moment(&probe.base, k);
    Ok(LegendreView {
        k,
        lambda,
        alpha: probe.base.alpha,
        moment: m,
        slope_predicted: -m,
        slope_numeric,
        curve,
    })
}

fn to_js<T: Serialize>(r: Result<T, String>) -> Result<String, JsError> {
    let v = r.map_err(|e| JsError::new(&e))?;
    serde_json::to_string(&v).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen]
pub fn spectrum(powers: Vec<u32>, values: Vec<f64>, n_states: usize) -> Result<String, JsError> {
    to_js(spectrum_report(&powers, &values, n_states))
}

#[wasm_bindgen]
pub fn power_law(k: u32, start: f64, count: usize, state: usize) -> Result<String, JsError> {
    to_js(power_law_report(k, start, count, state))
}

#[wasm_bindgen]
pub fn legendre_curve(powers: Vec<u32>, values: Vec<f64>, k: u32, state: usize, span: f64, samples: usize) -> Result<String, JsError> {
    to_js(legendre_report(&powers, &values, k, state, span, samples))
}
