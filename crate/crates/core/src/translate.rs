//! Re-centering at the absolute minimum `ξ` of `U`.
//!
//! With `u = x - ξ` the potential re-expands as `U(ξ) - (1/8) Σ_{k≥1} λ*_k u^k`
//! where `λ*_k = -8 U^{(k)}(ξ) / k!`, so `λ*_1 = 0`. The eigenvalue shifts to
//! `ᾱ = α - 8U(ξ)` and the moments become `<u^k>' = <(x - ξ)^k>`.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::eigensolver::{solve, Eigenstate, SolveOptions};
use crate::error::{Error, Result};
use crate::observables::{fisher_direct, moment, trapezoid, MomentSet};
use crate::potential::{falling_factorial, PolynomialPotential};

const SCAN_PANELS: usize = 512;
const ROOT_TOL: f64 = 1e-12;
const MAX_NEWTON: usize = 100;

/// Location and value of the absolute minimum of `U`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Minimum {
    pub xi: f64,
    pub u_min: f64,
    /// Another critical point reaches the same minimum value.
    pub tie: bool,
    /// All real critical points found, ascending.
    pub critical_points: Vec<f64>,
}

/// Roots of `U'` lie in `|x| <= 1 + max_j |c_j / c_lead|` (Cauchy).
fn cauchy_bound(p: &PolynomialPotential) -> f64 {
    let m = p.degree();
    let lead = f64::from(m) * p.lambda(m);
    let mut r = 0.0f64;
    for j in 1..m {
        r = r.max((f64::from(j) * p.lambda(j) / lead).abs());
    }
    1.0 + r
}

fn polish(p: &PolynomialPotential, mut lo: f64, mut hi: f64) -> f64 {
    let f = |x: f64| p.derivative(x, 1);
    let flo = f(lo);
    let mut x = 0.5 * (lo + hi);
    for _ in 0..MAX_NEWTON {
        let fx = f(x);
        if fx == 0.0 {
            return x;
        }
        if (fx < 0.0) == (flo < 0.0) {
            lo = x;
        } else {
            hi = x;
        }
        let d = p.derivative(x, 2);
        let newton = x - fx / d;
        let next = if d != 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if (next - x).abs() <= ROOT_TOL * x.abs().max(1.0) {
            return next;
        }
        x = next;
    }
    x
}

/// Real roots of `U'`, ascending.
pub fn critical_points(p: &PolynomialPotential) -> Vec<f64> {
    let r = cauchy_bound(p);
    let h = 2.0 * r / SCAN_PANELS as f64;
    let node = |i: usize| -r + h * i as f64;
    let mut roots: Vec<f64> = Vec::new();
    let mut prev = p.derivative(node(0), 1);
    for i in 1..=SCAN_PANELS {
        let x = node(i);
        let fx = p.derivative(x, 1);
        if fx == 0.0 {
            roots.push(x);
        } else if prev != 0.0 && (prev < 0.0) != (fx < 0.0) {
            roots.push(polish(p, node(i - 1), x));
        }
        prev = fx;
    }
    roots.dedup_by(|a, b| (*a - *b).abs() <= 1e-10 * a.abs().max(1.0));
    roots
}

pub fn find_minimum(p: &PolynomialPotential) -> Result<Minimum> {
    let roots = critical_points(p);
    let mut best: Option<(f64, f64)> = None;
    let mut tie = false;
    for &x in &roots {
        let u = p.eval(x);
        match best {
            None => best = Some((x, u)),
            Some((bx, bu)) => {
                let tol = 1e-12 * bu.abs().max(1.0);
                if u < bu - tol {
                    best = Some((x, u));
                    tie = false;
                } else if (u - bu).abs() <= tol {
                    tie = true;
                    let closer = x.abs() < bx.abs() - 1e-10 * bx.abs().max(1.0);
                    if closer {
                        best = Some((x, u));
                    }
                }
            }
        }
    }
    let (xi, u_min) = best.ok_or(Error::NoInteriorMinimum)?;
    Ok(Minimum { xi, u_min, tie, critical_points: roots })
}

/// Shifted multipliers about the absolute minimum.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShiftData {
    pub xi: f64,
    pub u_min: f64,
    pub tie: bool,
    /// `λ*_k` for `k = 0..=M`, with `λ*_0 = -8U(ξ)`.
    pub multipliers: BTreeMap<u32, f64>,
}

impl ShiftData {
    pub fn lambda(&self, k: u32) -> f64 {
        self.multipliers.get(&k).copied().unwrap_or(0.0)
    }

    /// `ᾱ = α - 8U(ξ)`.
    pub fn alpha_bar(&self, alpha: f64) -> f64 {
        alpha - 8.0 * self.u_min
    }

    /// `Σ_{k≥1} λ*_k u^k` as a potential in `u`.
    pub fn recentered(&self) -> Result<PolynomialPotential> {
        PolynomialPotential::new(self.multipliers.iter().filter(|(&k, _)| k >= 1).map(|(&k, &l)| (k, l)))
    }
}

pub fn shifted_multipliers(p: &PolynomialPotential) -> Result<ShiftData> {
    let m = find_minimum(p)?;
    Ok(shift_about(p, m.xi, m.tie))
}

/// Multipliers re-expanded about an arbitrary point.
pub fn shift_about(p: &PolynomialPotential, xi: f64, tie: bool) -> ShiftData {
    let u_min = p.eval(xi);
    let multipliers = (0..=p.degree())
        .map(|k| (k, -8.0 * p.derivative(xi, k) / falling_factorial(k, k)))
        .collect();
    ShiftData { xi, u_min, tie, multipliers }
}

fn binomial(n: u32, k: u32) -> f64 {
    falling_factorial(n, k) / falling_factorial(k, k)
}

/// `<u^k>' = Σ_{j=0..k} C(k, j) (-ξ)^{k-j} <x^j>` for `k = 1..=k_max`.
pub fn shifted_moments(m: &MomentSet, xi: f64, k_max: u32) -> Result<MomentSet> {
    let mut out = Vec::with_capacity(k_max as usize);
    for k in 1..=k_max {
        let mut sum = 0.0;
        for j in 0..=k {
            let xj = if j == 0 { 1.0 } else { m.require(j)? };
            sum += binomial(k, j) * (-xi).powi((k - j) as i32) * xj;
        }
        out.push(sum);
    }
    Ok(MomentSet::from_values(&out))
}

/// `<(x - ξ)^k>` by quadrature.
pub fn shifted_moment_direct(s: &Eigenstate, xi: f64, k: u32) -> f64 {
    let g = &s.grid;
    trapezoid(
        s.psi.iter().enumerate().map(|(i, p)| (g.x(i) - xi).powi(k as i32) * p * p),
        g.dx(),
    )
}

/// The same samples relabelled by `u = x - ξ`.
pub fn shifted_state(s: &Eigenstate, xi: f64) -> Eigenstate {
    Eigenstate { grid: s.grid.translated(xi), ..s.clone() }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShiftedIdentity {
    pub fisher: f64,
    pub alpha_bar: f64,
    /// `Σ_{k≥1} λ*_k <u^k>'`.
    pub moment_sum: f64,
    pub residual: f64,
    /// Fisher information of the relabelled state.
    pub shifted_fisher: f64,
    pub invariance_residual: f64,
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

/// `I = ᾱ + Σ_{k≥1} λ*_k <u^k>'`.
pub fn shifted_identity_check(s: &Eigenstate, p: &PolynomialPotential, shift: &ShiftData) -> Result<ShiftedIdentity> {
    let mom = MomentSet::from_values(&(1..=p.degree()).map(|k| moment(s, k)).collect::<Vec<_>>());
    let shifted = shifted_moments(&mom, shift.xi, p.degree())?;
    let mut moment_sum = 0.0;
    for (k, u) in shifted.iter() {
        moment_sum += shift.lambda(k) * u;
    }
    let fisher = fisher_direct(s);
    let alpha_bar = shift.alpha_bar(s.alpha);
    let shifted_fisher = fisher_direct(&shifted_state(s, shift.xi));
    Ok(ShiftedIdentity {
        fisher,
        alpha_bar,
        moment_sum,
        residual: rel(fisher, alpha_bar + moment_sum),
        shifted_fisher,
        invariance_residual: rel(fisher, shifted_fisher),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShiftedVirial {
    pub fisher: f64,
    /// `-Σ (k/2) λ*_k <u^k>'`.
    pub virial: f64,
    pub residual: f64,
}

pub fn shifted_virial_check(s: &Eigenstate, p: &PolynomialPotential, shift: &ShiftData) -> Result<ShiftedVirial> {
    let mom = MomentSet::from_values(&(1..=p.degree()).map(|k| moment(s, k)).collect::<Vec<_>>());
    let shifted = shifted_moments(&mom, shift.xi, p.degree())?;
    let virial: f64 = shifted.iter().map(|(k, u)| -0.5 * f64::from(k) * shift.lambda(k) * u).sum();
    let fisher = fisher_direct(s);
    Ok(ShiftedVirial { fisher, virial, residual: rel(fisher, virial) })
}

/// `I = Σ_{k≥2} (k/2) C̄_k |<u^k>'|^{-2/k}` over the supplied constants.
/// Powers whose shifted moment vanishes are skipped.
pub fn shifted_fim_expression(shifted: &MomentSet, cbar: &BTreeMap<u32, f64>) -> Result<f64> {
    let mut sum = 0.0;
    for (&k, &c) in cbar {
        if k < 2 {
            continue;
        }
        if !(c > 0.0) {
            return Err(Error::NonpositiveConstant { name: "C̄", k });
        }
        let u = shifted.require(k)?;
        if u.abs() <= 1e-12 {
            continue;
        }
        sum += 0.5 * f64::from(k) * c * u.abs().powf(-2.0 / f64::from(k));
    }
    Ok(sum)
}

/// `ᾱ` of the original solve against an independent solve of the
/// re-centered potential.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecenteredSpectrum {
    pub alpha_bar: Vec<f64>,
    pub recentered_alpha: Vec<f64>,
    pub max_residual: f64,
}

pub fn recentered_spectrum_check(
    p: &PolynomialPotential,
    shift: &ShiftData,
    opts: &SolveOptions,
) -> Result<RecenteredSpectrum> {
    let original = solve(p, opts)?;
    let centered = solve(&shift.recentered()?, opts)?;
    let alpha_bar: Vec<f64> = original.iter().map(|s| shift.alpha_bar(s.alpha)).collect();
    let recentered_alpha: Vec<f64> = centered.iter().map(|s| s.alpha).collect();
    let max_residual = alpha_bar
        .iter()
        .zip(&recentered_alpha)
        .map(|(a, b)| rel(*a, *b))
        .fold(0.0, f64::max);
    Ok(RecenteredSpectrum { alpha_bar, recentered_alpha, max_residual })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pot(terms: &[(u32, f64)]) -> PolynomialPotential {
        PolynomialPotential::new(terms.iter().copied()).unwrap()
    }

    #[test]
    fn minima() {
        let m = find_minimum(&pot(&[(2, -4.0)])).unwrap();
        assert_eq!((m.xi, m.u_min, m.tie), (0.0, 0.0, false));
        let m = find_minimum(&pot(&[(1, 8.0), (2, -4.0)])).unwrap();
        assert!((m.xi - 1.0).abs() < 1e-12 && (m.u_min + 0.5).abs() < 1e-12);
        let m = find_minimum(&pot(&[(2, 4.0), (4, -8.0)])).unwrap();
        assert!((m.xi + 0.5).abs() < 1e-12, "{m:?}");
        assert!((m.u_min + 1.0 / 16.0).abs() < 1e-12);
        assert!(m.tie);
        assert_eq!(m.critical_points.len(), 3);
    }

    #[test]
    fn tilted_double_well_has_no_tie() {
        // U = -x²/2 + x⁴ - 0.1x, deeper on the right
        let m = find_minimum(&pot(&[(1, 0.8), (2, 4.0), (4, -8.0)])).unwrap();
        assert!(m.xi > 0.0 && !m.tie);
        assert!(m.u_min < -1.0 / 16.0);
    }

    #[test]
    fn multipliers() {
        let s = shifted_multipliers(&pot(&[(1, 8.0), (2, -4.0)])).unwrap();
        assert!(s.lambda(1).abs() < 1e-8);
        assert!((s.lambda(2) + 4.0).abs() < 1e-12);
        assert!((s.lambda(0) - 4.0).abs() < 1e-12);
        assert!((s.alpha_bar(0.0) - 4.0).abs() < 1e-12);
        let q = pot(&[(4, -8.0)]);
        let s = shifted_multipliers(&q).unwrap();
        assert_eq!(s.recentered().unwrap(), q);
        // double well about ξ = -1/2: U'' = -1 + 12ξ² = 2
        let s = shifted_multipliers(&pot(&[(2, 4.0), (4, -8.0)])).unwrap();
        assert!((s.lambda(2) + 8.0).abs() < 1e-10);
        assert!(s.lambda(1).abs() < 1e-8);
    }

    #[test]
    fn recentred_potential_reproduces_u() {
        let p = pot(&[(1, 0.3), (2, 1.0), (3, -0.7), (4, -2.0)]);
        let s = shifted_multipliers(&p).unwrap();
        let q = s.recentered().unwrap();
        for i in 0..=40 {
            let x = -2.0 + 0.1 * f64::from(i);
            let lhs = p.eval(x);
            let rhs = s.u_min + q.eval(x - s.xi);
            assert!((lhs - rhs).abs() < 1e-11 * lhs.abs().max(1.0), "{x}: {lhs} {rhs}");
        }
    }

    #[test]
    fn binomial_moments() {
        let m = MomentSet::from_values(&[1.0, 1.5]);
        let u = shifted_moments(&m, 1.0, 2).unwrap();
        assert_eq!(u.get(1), Some(0.0));
        assert_eq!(u.get(2), Some(0.5));
        let m = MomentSet::from_values(&[0.3, 2.0, -1.0]);
        assert_eq!(shifted_moments(&m, 0.0, 3).unwrap(), m);
        assert_eq!(shifted_moments(&m, 1.0, 4), Err(Error::MissingMoment(4)));
    }

    #[test]
    fn shifted_oscillator_identities() {
        let p = pot(&[(1, 8.0), (2, -4.0)]);
        let s = &solve(&p, &SolveOptions::default()).unwrap()[0];
        let sh = shifted_multipliers(&p).unwrap();
        let id = shifted_identity_check(s, &p, &sh).unwrap();
        assert!((id.alpha_bar - 4.0).abs() < 1e-6);
        assert!((id.moment_sum + 2.0).abs() < 1e-5);
        assert!(id.residual < 1e-5 && id.invariance_residual < 1e-12);
        let v = shifted_virial_check(s, &p, &sh).unwrap();
        assert!(v.residual < 1e-5);
        let direct = shifted_moment_direct(s, sh.xi, 2);
        assert!((direct - 0.5).abs() < 1e-7);
        let mom = MomentSet::from_values(&[moment(s, 1), moment(s, 2)]);
        let u = shifted_moments(&mom, sh.xi, 2).unwrap();
        assert!((u.get(2).unwrap() - direct).abs() < 1e-8);
        let cbar = [(2, 1.0)].into_iter().collect();
        assert!((shifted_fim_expression(&u, &cbar).unwrap() - 2.0).abs() < 1e-6);
    }

    #[test]
    fn double_well_recentred_spectrum() {
        let p = pot(&[(2, 4.0), (4, -8.0)]);
        let sh = shifted_multipliers(&p).unwrap();
        let r = recentered_spectrum_check(&p, &sh, &SolveOptions::with_states(2)).unwrap();
        assert!(r.max_residual < 1e-7, "{r:?}");
        let s = &solve(&p, &SolveOptions::default()).unwrap()[0];
        assert!(shifted_virial_check(s, &p, &sh).unwrap().residual < 1e-4);
        assert!(shifted_identity_check(s, &p, &sh).unwrap().residual < 1e-5);
    }
}
