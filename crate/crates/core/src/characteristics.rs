//! Characteristics of the eigenvalue PDE `α = Σ (1 + k/2) λ_k ∂α/∂λ_k`.
//!
//! Along `dΛ_k / ((2+k)/2 Λ_k) = d𝒜/𝒜 = dt` the solution is
//! `Λ_k(t) = Λ_k e^{(2+k)t/2}`, `𝒜(t) = 𝒜 e^t`. The ratios
//! `|Λ_k|^{2/(2+k)} / |Λ_r|^{2/(2+r)}` and `|𝒜| / |Λ_r|^{2/(2+r)}` are constant
//! along each curve, so every eigenvalue obeys
//! `α(s^{(2+k)/2} λ_k) = s α(λ)`.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::eigensolver::{solve, SolveOptions};
use crate::error::{Error, Result};
use crate::parallel::par_map;
use crate::potential::PolynomialPotential;

fn exponent(k: u32) -> f64 {
    2.0 / (2.0 + f64::from(k))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvariantVector {
    /// Anchor power `r`.
    pub reference: u32,
    /// True when `Λ_1 = 0` forced a different anchor.
    pub substituted: bool,
    /// `|Λ_k|^{2/(2+k)} / |Λ_r|^{2/(2+r)}` for every other power.
    pub ratios: BTreeMap<u32, f64>,
    /// `|𝒜| / |Λ_r|^{2/(2+r)}`.
    pub b_m: f64,
}

impl InvariantVector {
    /// Largest relative difference between two invariant vectors.
    pub fn max_difference(&self, other: &Self) -> f64 {
        let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE);
        let mut m = rel(self.b_m, other.b_m);
        for (k, v) in &self.ratios {
            m = m.max(other.ratios.get(k).map_or(f64::INFINITY, |w| if *v == 0.0 && *w == 0.0 { 0.0 } else { rel(*v, *w) }));
        }
        m
    }
}

pub fn characteristic_invariants(lambdas: &BTreeMap<u32, f64>, a: f64) -> Result<InvariantVector> {
    let reference = match lambdas.get(&1) {
        Some(&l) if l != 0.0 => 1,
        _ => *lambdas
            .iter()
            .find(|(_, &l)| l != 0.0)
            .ok_or(Error::AllZeroMultipliers)?
            .0,
    };
    let anchor = lambdas[&reference].abs().powf(exponent(reference));
    let ratios = lambdas
        .iter()
        .filter(|(&k, _)| k != reference)
        .map(|(&k, &l)| (k, l.abs().powf(exponent(k)) / anchor))
        .collect();
    Ok(InvariantVector { reference, substituted: reference != 1, ratios, b_m: a.abs() / anchor })
}

/// Moves `(Λ, 𝒜)` a parameter distance `t` along its characteristic.
pub fn flow(lambdas: &BTreeMap<u32, f64>, a: f64, t: f64) -> (BTreeMap<u32, f64>, f64) {
    let out = lambdas
        .iter()
        .map(|(&k, &l)| (k, l * ((2.0 + f64::from(k)) / 2.0 * t).exp()))
        .collect();
    (out, a * t.exp())
}

/// `λ_k -> s^{(2+k)/2} λ_k`.
pub fn scaled_potential(p: &PolynomialPotential, s: f64) -> Result<PolynomialPotential> {
    if !(s > 0.0) {
        return Err(Error::NonpositiveScale(s));
    }
    PolynomialPotential::new(p.terms().map(|(k, l)| (k, l * s.powf((2.0 + f64::from(k)) / 2.0))))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CovarianceCheck {
    pub scale: f64,
    pub alpha: f64,
    pub alpha_scaled: f64,
    /// `|α' - sα| / (s|α| + 1)`.
    pub residual: f64,
}

pub fn scaling_covariance_check(
    p: &PolynomialPotential,
    s: f64,
    n: usize,
    opts: &SolveOptions,
) -> Result<CovarianceCheck> {
    let q = scaled_potential(p, s)?;
    let opts = SolveOptions { n_states: n + 1, ..opts.clone() };
    let pair = par_map(&[p.clone(), q], |x| solve(x, &opts).map(|v| v[n].alpha));
    let mut it = pair.into_iter();
    let alpha = it.next().expect("two solves")?;
    let alpha_scaled = it.next().expect("two solves")?;
    Ok(CovarianceCheck {
        scale: s,
        alpha,
        alpha_scaled,
        residual: (alpha_scaled - s * alpha).abs() / (s * alpha.abs() + 1.0),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrbitPoint {
    pub t: f64,
    pub alpha: f64,
    pub invariants: InvariantVector,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SurfaceCheck {
    pub points: Vec<OrbitPoint>,
    /// Largest deviation of `b_M` from its value at the first point, relative
    /// to `max(|b_M|, 1)` so that a vanishing eigenvalue stays well scaled.
    pub max_deviation: f64,
    /// Largest relative drift of the multiplier ratios along the orbit.
    pub ratio_drift: f64,
}

/// Solves along the flow orbit of `p` and checks that the normalized
/// eigenvalue `b_M` stays put.
pub fn solution_surface_check(
    p: &PolynomialPotential,
    ts: &[f64],
    n: usize,
    opts: &SolveOptions,
) -> Result<SurfaceCheck> {
    if ts.len() < 3 {
        return Err(Error::InsufficientScan(format!("{} orbit points, need at least 3", ts.len())));
    }
    let base = p.multipliers();
    let opts = SolveOptions { n_states: n + 1, ..opts.clone() };
    let points = par_map(ts, |&t| -> Result<OrbitPoint> {
        let (lambdas, _) = flow(&base, 0.0, t);
        let q = PolynomialPotential::new(lambdas.clone())?;
        let alpha = solve(&q, &opts)?[n].alpha;
        Ok(OrbitPoint { t, alpha, invariants: characteristic_invariants(&lambdas, alpha)? })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let first = &points[0].invariants;
    let mut max_deviation = 0.0f64;
    let mut ratio_drift = 0.0f64;
    for pt in &points[1..] {
        let b = pt.invariants.b_m;
        max_deviation = max_deviation.max((b - first.b_m).abs() / first.b_m.abs().max(1.0));
        let only_ratios = InvariantVector { b_m: first.b_m, ..pt.invariants.clone() };
        ratio_drift = ratio_drift.max(first.max_difference(&only_ratios));
    }
    Ok(SurfaceCheck { points, max_deviation, ratio_drift })
}
