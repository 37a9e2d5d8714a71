//! The separable power-law form
//! `α = Σ D_k |λ_k|^{2/(2+k)}`, `I = Σ C_k |<x^k>|^{-2/k}`,
//! fitted against single-term eigensolver scans.
//!
//! For a single power `k` both laws are exact (they follow from scaling
//! covariance and the virial theorem), so the fitted constants must satisfy
//! `D_k C_k^{-k/(2+k)} = ((2+k)/2) (k/2)^{-k/(2+k)}`. The normalized forms are
//! `C̄_k = (2/k) C_k`, `D̄_k = (2/(2+k)) D_k` and `F_k = D̄_k^{(2+k)/2}`, with
//! `D̄_k^{2+k} = C̄_k^k = F_k²`.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::eigensolver::{solve, SolveOptions};
use crate::error::{Error, Result};
use crate::observables::{fisher_direct, moment};
use crate::parallel::par_map;
use crate::potential::PolynomialPotential;
use crate::translate::shifted_multipliers;

/// Multipliers and eigenvalue in units of a length scale `[x]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Dimensionless {
    pub lambdas: BTreeMap<u32, f64>,
    pub alpha: f64,
}

/// `Λ_k = λ_k [x]^{2+k}`, `𝒜 = α [x]²`.
pub fn nondimensionalize(p: &PolynomialPotential, alpha: f64, x_scale: f64) -> Result<Dimensionless> {
    if !(x_scale > 0.0) {
        return Err(Error::NonpositiveScale(x_scale));
    }
    let lambdas = p.terms().map(|(k, l)| (k, l * x_scale.powi(2 + k as i32))).collect();
    Ok(Dimensionless { lambdas, alpha: alpha * x_scale * x_scale })
}

fn alpha_exponent(k: u32) -> f64 {
    2.0 / (2.0 + f64::from(k))
}

pub fn ansatz_alpha(d: &BTreeMap<u32, f64>, lambdas: &BTreeMap<u32, f64>) -> Result<f64> {
    let mut sum = 0.0;
    for (&k, &l) in lambdas {
        let dk = d.get(&k).copied().ok_or(Error::NonpositiveD(k))?;
        if !(dk > 0.0) {
            return Err(Error::NonpositiveD(k));
        }
        if l != 0.0 {
            sum += dk * l.abs().powf(alpha_exponent(k));
        }
    }
    Ok(sum)
}

/// One solve of the single-term potential `{k: λ}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScanPoint {
    pub lambda: f64,
    pub alpha: f64,
    pub fisher: f64,
    pub moment: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SingleTermScan {
    pub k: u32,
    pub state: usize,
    pub points: Vec<ScanPoint>,
}

/// `count` values from `start` spread geometrically over one decade.
pub fn decade_values(start: f64, count: usize) -> Vec<f64> {
    (0..count)
        .map(|j| start * 10f64.powf(j as f64 / (count - 1).max(1) as f64))
        .collect()
}

/// Scan preconditions: even `k`, at least five negative values spanning a
/// decade.
pub fn validate_scan(k: u32, values: &[f64]) -> Result<()> {
    if k == 0 || k % 2 == 1 {
        return Err(Error::InsufficientScan(format!("power {k} must be even and positive")));
    }
    if values.len() < 5 {
        return Err(Error::InsufficientScan(format!("{} values, need at least 5", values.len())));
    }
    if let Some(v) = values.iter().find(|v| !(**v < 0.0)) {
        return Err(Error::InsufficientScan(format!("value {v} is not negative")));
    }
    let lo = values.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
    let hi = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if hi / lo < 10.0 * (1.0 - 1e-12) {
        return Err(Error::InsufficientScan(format!("range {lo}..{hi} spans less than a decade")));
    }
    Ok(())
}

/// Solves `{k: λ}` for every `λ` in `values` and records `α_n`, `I` and `<x^k>`.
pub fn scan_single_term(k: u32, values: &[f64], n: usize, opts: &SolveOptions) -> Result<SingleTermScan> {
    validate_scan(k, values)?;
    let opts = SolveOptions { n_states: n + 1, ..opts.clone() };
    let points = par_map(values, |&lambda| -> Result<ScanPoint> {
        let p = PolynomialPotential::new([(k, lambda)])?;
        let states = solve(&p, &opts)?;
        let s = &states[n];
        Ok(ScanPoint { lambda, alpha: s.alpha, fisher: fisher_direct(s), moment: moment(s, k) })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    Ok(SingleTermScan { k, state: n, points })
}

/// Unweighted least-squares line `y = a + b x`; returns `(b, a, r²)`.
pub fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs.iter().zip(ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let r2 = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    (slope, intercept, r2)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerLawFit {
    pub k: u32,
    pub state: usize,
    pub exponent_fit: f64,
    pub exponent_theory: f64,
    /// `D_k` for an eigenvalue fit, `C_k` for a Fisher fit.
    pub coefficient: f64,
    pub r_squared: f64,
}

impl PowerLawFit {
    pub fn exponent_error(&self) -> f64 {
        (self.exponent_fit - self.exponent_theory).abs()
    }
}

/// `log α` against `log |λ|`.
pub fn alpha_fit(scan: &SingleTermScan) -> PowerLawFit {
    let xs: Vec<f64> = scan.points.iter().map(|p| p.lambda.abs().ln()).collect();
    let ys: Vec<f64> = scan.points.iter().map(|p| p.alpha.abs().ln()).collect();
    let (b, a, r2) = least_squares(&xs, &ys);
    PowerLawFit {
        k: scan.k,
        state: scan.state,
        exponent_fit: b,
        exponent_theory: alpha_exponent(scan.k),
        coefficient: a.exp(),
        r_squared: r2,
    }
}

/// `log I` against `log <x^k>`.
pub fn fisher_fit(scan: &SingleTermScan) -> PowerLawFit {
    let xs: Vec<f64> = scan.points.iter().map(|p| p.moment.abs().ln()).collect();
    let ys: Vec<f64> = scan.points.iter().map(|p| p.fisher.ln()).collect();
    let (b, a, r2) = least_squares(&xs, &ys);
    PowerLawFit {
        k: scan.k,
        state: scan.state,
        exponent_fit: b,
        exponent_theory: -2.0 / f64::from(scan.k),
        coefficient: a.exp(),
        r_squared: r2,
    }
}

pub fn fit_scaling_exponent(k: u32, values: &[f64], n: usize, opts: &SolveOptions) -> Result<PowerLawFit> {
    Ok(alpha_fit(&scan_single_term(k, values, n, opts)?))
}

pub fn fisher_powerlaw_check(k: u32, values: &[f64], n: usize, opts: &SolveOptions) -> Result<PowerLawFit> {
    Ok(fisher_fit(&scan_single_term(k, values, n, opts)?))
}

/// Largest discrete second derivative violation of convexity of `I(<x^k>)`
/// along a scan (negative values are violations; the result is the minimum).
pub fn fisher_convexity(scan: &SingleTermScan) -> f64 {
    let mut pts: Vec<(f64, f64)> = scan.points.iter().map(|p| (p.moment, p.fisher)).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    pts.windows(3)
        .map(|w| {
            let s1 = (w[1].1 - w[0].1) / (w[1].0 - w[0].0);
            let s2 = (w[2].1 - w[1].1) / (w[2].0 - w[1].0);
            2.0 * (s2 - s1) / (w[2].0 - w[0].0)
        })
        .fold(f64::INFINITY, f64::min)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConstantsTriple {
    pub k: u32,
    pub c: f64,
    pub d: f64,
    pub c_bar: f64,
    pub d_bar: f64,
    pub f: f64,
    /// Relative residual of `D C^{-k/(2+k)} = ((2+k)/2)(k/2)^{-k/(2+k)}`.
    pub product_residual: f64,
    /// Relative residual of `C D^{-(k+2)/k} = (k/2)((2+k)/2)^{-(k+2)/k}`.
    pub inverse_product_residual: f64,
    /// Largest relative spread among `D̄^{2+k}`, `C̄^k`, `F²`.
    pub power_residual: f64,
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs())
}

pub fn constants_consistency(c: f64, d: f64, k: u32) -> Result<ConstantsTriple> {
    if !(c > 0.0) {
        return Err(Error::NonpositiveConstant { name: "C", k });
    }
    if !(d > 0.0) {
        return Err(Error::NonpositiveConstant { name: "D", k });
    }
    let kf = f64::from(k);
    let c_bar = 2.0 / kf * c;
    let d_bar = 2.0 / (kf + 2.0) * d;
    let f = d_bar.powf((2.0 + kf) / 2.0);
    let product = rel(
        d * c.powf(-kf / (2.0 + kf)),
        (2.0 + kf) / 2.0 * (kf / 2.0).powf(-kf / (2.0 + kf)),
    );
    let inverse_product = rel(
        c * d.powf(-(kf + 2.0) / kf),
        kf / 2.0 * ((2.0 + kf) / 2.0).powf(-(kf + 2.0) / kf),
    );
    let a = d_bar.powf(2.0 + kf);
    let b = c_bar.powf(kf);
    let f2 = f * f;
    let power = rel(a, b).max(rel(a, f2)).max(rel(b, f2));
    Ok(ConstantsTriple { k, c, d, c_bar, d_bar, f, product_residual: product, inverse_product_residual: inverse_product, power_residual: power })
}

/// `F_k² = |λ_k|^k <x^k>^{2+k}` from one single-term solution.
pub fn f_squared_from_moments(lambda: f64, moment: f64, k: u32) -> f64 {
    lambda.abs().powi(k as i32) * moment.abs().powi(k as i32 + 2)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OffsetCheck {
    pub xi: f64,
    pub u_min: f64,
    pub alpha: f64,
    /// `8U(ξ) + Σ_{k≥2} ((k+2)/2) D̄_k |λ*_k|^{2/(k+2)}`.
    pub ansatz: f64,
    pub residual: f64,
    /// Shifted powers with a nonzero multiplier but no supplied `D̄_k`.
    pub missing: Vec<u32>,
}

/// Compares state `n` of `p` with the frame-fixed ansatz built from the
/// multipliers about the minimum. `d_bar` supplies `D̄_k`; `D̄_2` defaults
/// to one when the shifted potential has no power above two.
pub fn alpha_with_offset_check(
    p: &PolynomialPotential,
    n: usize,
    d_bar: &BTreeMap<u32, f64>,
    opts: &SolveOptions,
) -> Result<OffsetCheck> {
    let shift = shifted_multipliers(p)?;
    let states = solve(p, &SolveOptions { n_states: n + 1, ..opts.clone() })?;
    let alpha = states[n].alpha;
    let scale = shift.multipliers.values().fold(0.0f64, |m, v| m.max(v.abs()));
    let active: Vec<(u32, f64)> = shift
        .multipliers
        .iter()
        .filter(|(&k, &l)| k >= 2 && l.abs() > 1e-12 * scale)
        .map(|(&k, &l)| (k, l))
        .collect();
    let quadratic_only = active.iter().all(|&(k, _)| k == 2);
    let mut ansatz = 8.0 * shift.u_min;
    let mut missing = Vec::new();
    for &(k, l) in &active {
        let db = match d_bar.get(&k) {
            Some(&v) => v,
            None if k == 2 && quadratic_only => 1.0,
            None => {
                missing.push(k);
                continue;
            }
        };
        if !(db > 0.0) {
            return Err(Error::NonpositiveD(k));
        }
        ansatz += (f64::from(k) + 2.0) / 2.0 * db * l.abs().powf(alpha_exponent(k));
    }
    Ok(OffsetCheck {
        xi: shift.xi,
        u_min: shift.u_min,
        alpha,
        ansatz,
        residual: (alpha - ansatz).abs() / alpha.abs().max(1.0),
        missing,
    })
}

/// Separable prediction for a multi-term potential against its solve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeparableDiscrepancy {
    pub alpha: f64,
    pub separable: f64,
    pub relative: f64,
}

pub fn separable_discrepancy(
    p: &PolynomialPotential,
    n: usize,
    d: &BTreeMap<u32, f64>,
    opts: &SolveOptions,
) -> Result<SeparableDiscrepancy> {
    let states = solve(p, &SolveOptions { n_states: n + 1, ..opts.clone() })?;
    let alpha = states[n].alpha;
    let separable = ansatz_alpha(d, &p.multipliers())?;
    Ok(SeparableDiscrepancy { alpha, separable, relative: rel(alpha, separable) })
}
