//! Finite differences of `α(λ)` over multiplier space.
//!
//! Every derivative re-solves the eigenproblem at the perturbed multipliers
//! on the grid of the unperturbed solve, so discretization error is common
//! to all stencil points and cancels. States are matched by index.
//!
//! Checked relations:
//! - reciprocity `∂α/∂λ_k = -<x^k>`;
//! - the Fisher–Euler relation `∂I/∂λ_i = Σ_k λ_k ∂<x^k>/∂λ_i`;
//! - the eigenvalue PDE `α = Σ (1 + k/2) λ_k ∂α/∂λ_k`;
//! - concavity of `α` and the inverse pairing of `∂²I/∂<x^i>∂<x^k>` with
//!   `∂²α/∂λ_k∂λ_j`.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use crate::eigensolver::{solve, solve_on_grid_near, Eigenstate, SolveOptions};
use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::observables::{fisher_direct, moment, moments_for, MomentSet};
use crate::parallel::par_map;
use crate::potential::PolynomialPotential;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FdScheme {
    Central,
}

/// Step controls. The step for `λ_k` is `relative_step * max(|λ_k|, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FdConfig {
    pub relative_step: f64,
    pub hessian_step: f64,
    pub scheme: FdScheme,
    /// Options for the unperturbed solve that fixes the grid.
    pub solve: SolveOptions,
}

impl Default for FdConfig {
    fn default() -> Self {
        Self {
            relative_step: 1e-4,
            hessian_step: 1e-3,
            scheme: FdScheme::Central,
            solve: SolveOptions::default(),
        }
    }
}

/// One point of the dual description `{α, λ_k} <-> {I, <x^k>}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LegendrePair {
    pub alpha: f64,
    pub lambdas: BTreeMap<u32, f64>,
    pub moments: MomentSet,
    pub fisher: f64,
}

/// Unperturbed solve plus the machinery to re-solve nearby potentials on
/// the same grid.
#[derive(Debug, Clone)]
pub struct LegendreProbe {
    pub potential: PolynomialPotential,
    pub state: usize,
    pub grid: GridSpec,
    pub base: Eigenstate,
    pub cfg: FdConfig,
    hints: Vec<f64>,
}

impl LegendreProbe {
    pub fn new(p: &PolynomialPotential, n: usize, cfg: &FdConfig) -> Result<Self> {
        let opts = SolveOptions { n_states: n + 1, ..cfg.solve.clone() };
        let states = solve(p, &opts)?;
        let hints = states.iter().map(Eigenstate::energy).collect();
        let base = states.into_iter().nth(n).expect("solve returns n_states states");
        Ok(Self {
            potential: p.clone(),
            state: n,
            grid: base.grid,
            base,
            cfg: cfg.clone(),
            hints,
        })
    }

    pub fn pair(&self) -> LegendrePair {
        LegendrePair {
            alpha: self.base.alpha,
            lambdas: self.potential.multipliers(),
            moments: moments_for(&self.base, &self.potential),
            fisher: fisher_direct(&self.base),
        }
    }

    pub fn step(&self, k: u32, relative: f64) -> f64 {
        relative * self.potential.lambda(k).abs().max(1.0)
    }

    /// Potential with `λ_k += δ` for each `(k, δ)`.
    pub fn perturbed(&self, deltas: &[(u32, f64)]) -> Result<PolynomialPotential> {
        let mut m = self.potential.multipliers();
        for &(k, d) in deltas {
            *m.entry(k).or_insert(0.0) += d;
        }
        PolynomialPotential::new(m).map_err(|e| match e {
            Error::NotConfining { .. } | Error::EmptyPotential => {
                Error::PerturbationBreaksConfinement(deltas.last().map_or(0, |d| d.0))
            }
            other => other,
        })
    }

    /// State `n` of `q` on the probe grid.
    pub fn solve_at(&self, q: &PolynomialPotential) -> Result<Eigenstate> {
        let states = solve_on_grid_near(q, &self.grid, self.state + 1, Some(&self.hints))?;
        Ok(states.into_iter().nth(self.state).expect("n_states states"))
    }

    fn solve_all(&self, perturbations: &[Vec<(u32, f64)>]) -> Result<Vec<Eigenstate>> {
        let potentials = perturbations
            .iter()
            .map(|d| self.perturbed(d))
            .collect::<Result<Vec<_>>>()?;
        par_map(&potentials, |q| self.solve_at(q)).into_iter().collect()
    }

    /// Central differences of `f(state)` over each `λ_k` in `ks`.
    pub fn central_differences<F>(&self, ks: &[u32], relative: f64, f: F) -> Result<BTreeMap<u32, f64>>
    where
        F: Fn(&Eigenstate) -> f64,
    {
        let mut perts = Vec::with_capacity(2 * ks.len());
        for &k in ks {
            let h = self.step(k, relative);
            perts.push(vec![(k, h)]);
            perts.push(vec![(k, -h)]);
        }
        let states = self.solve_all(&perts)?;
        Ok(ks
            .iter()
            .enumerate()
            .map(|(j, &k)| {
                let h = self.step(k, relative);
                (k, (f(&states[2 * j]) - f(&states[2 * j + 1])) / (2.0 * h))
            })
            .collect())
    }

    /// `∂α/∂λ_k` for each `k` in `ks`.
    pub fn gradient(&self, ks: &[u32], relative: f64) -> Result<BTreeMap<u32, f64>> {
        self.central_differences(ks, relative, |s| s.alpha)
    }

    /// `∂²α/∂λ_k∂λ_l` over `ks`, symmetrized.
    pub fn hessian(&self, ks: &[u32]) -> Result<DMatrix<f64>> {
        let rel = self.cfg.hessian_step;
        let m = ks.len();
        let mut perts = Vec::new();
        for (a, &k) in ks.iter().enumerate() {
            let hk = self.step(k, rel);
            perts.push(vec![(k, hk)]);
            perts.push(vec![(k, -hk)]);
            for &l in &ks[a + 1..] {
                let hl = self.step(l, rel);
                for (sk, sl) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
                    perts.push(vec![(k, sk * hk), (l, sl * hl)]);
                }
            }
        }
        let alphas: Vec<f64> = self.solve_all(&perts)?.iter().map(|s| s.alpha).collect();
        let a0 = self.base.alpha;
        let mut out = DMatrix::zeros(m, m);
        let mut idx = 0;
        for a in 0..m {
            let hk = self.step(ks[a], rel);
            out[(a, a)] = (alphas[idx] - 2.0 * a0 + alphas[idx + 1]) / (hk * hk);
            idx += 2;
            for b in a + 1..m {
                let hl = self.step(ks[b], rel);
                let v = (alphas[idx] - alphas[idx + 1] - alphas[idx + 2] + alphas[idx + 3]) / (4.0 * hk * hl);
                out[(a, b)] = v;
                out[(b, a)] = v;
                idx += 4;
            }
        }
        Ok((&out + out.transpose()) * 0.5)
    }

    /// `J[k][j] = ∂<x^k>/∂λ_j` over `ks`.
    pub fn moment_jacobian(&self, ks: &[u32]) -> Result<DMatrix<f64>> {
        let rel = self.cfg.relative_step;
        let mut perts = Vec::with_capacity(2 * ks.len());
        for &j in ks {
            let h = self.step(j, rel);
            perts.push(vec![(j, h)]);
            perts.push(vec![(j, -h)]);
        }
        let states = self.solve_all(&perts)?;
        let m = ks.len();
        let mut jac = DMatrix::zeros(m, m);
        for (c, &j) in ks.iter().enumerate() {
            let h = self.step(j, rel);
            for (r, &k) in ks.iter().enumerate() {
                jac[(r, c)] = (moment(&states[2 * c], k) - moment(&states[2 * c + 1], k)) / (2.0 * h);
            }
        }
        Ok(jac)
    }
}

/// FD gradient of `α_n` with the base solve it was taken around.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlphaGradient {
    pub alpha: f64,
    pub grid: GridSpec,
    pub entries: BTreeMap<u32, f64>,
}

/// `∂α_n/∂λ_k` for every power present in `p`.
pub fn alpha_gradient_fd(p: &PolynomialPotential, n: usize, cfg: &FdConfig) -> Result<AlphaGradient> {
    alpha_gradient_fd_at(p, n, cfg, &p.powers())
}

/// `∂α_n/∂λ_k` for the given powers, which may include absent ones
/// (perturbed around `λ_k = 0`).
pub fn alpha_gradient_fd_at(
    p: &PolynomialPotential,
    n: usize,
    cfg: &FdConfig,
    ks: &[u32],
) -> Result<AlphaGradient> {
    let probe = LegendreProbe::new(p, n, cfg)?;
    Ok(AlphaGradient {
        alpha: probe.base.alpha,
        grid: probe.grid,
        entries: probe.gradient(ks, cfg.relative_step)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReciprocityEntry {
    pub slope: f64,
    pub moment: f64,
    /// `|∂α/∂λ_k + <x^k>|`.
    pub residual: f64,
}

pub fn reciprocity_from_probe(probe: &LegendreProbe, ks: &[u32], relative: f64) -> Result<BTreeMap<u32, ReciprocityEntry>> {
    let grad = probe.gradient(ks, relative)?;
    Ok(grad
        .into_iter()
        .map(|(k, slope)| {
            let m = moment(&probe.base, k);
            (k, ReciprocityEntry { slope, moment: m, residual: (slope + m).abs() })
        })
        .collect())
}

pub fn reciprocity_residuals(
    p: &PolynomialPotential,
    n: usize,
    cfg: &FdConfig,
) -> Result<BTreeMap<u32, ReciprocityEntry>> {
    let probe = LegendreProbe::new(p, n, cfg)?;
    reciprocity_from_probe(&probe, &p.powers(), cfg.relative_step)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EulerCheck {
    /// `∂I/∂λ_i` with `I` from the amplitude gradient.
    pub fisher_slope: f64,
    /// `Σ_k λ_k ∂<x^k>/∂λ_i`.
    pub moment_sum: f64,
    pub residual: f64,
}

pub fn euler_from_probe(probe: &LegendreProbe, i: u32) -> Result<EulerCheck> {
    let rel = probe.cfg.relative_step;
    let h = probe.step(i, rel);
    let plus = probe.solve_at(&probe.perturbed(&[(i, h)])?)?;
    let minus = probe.solve_at(&probe.perturbed(&[(i, -h)])?)?;
    let fisher_slope = (fisher_direct(&plus) - fisher_direct(&minus)) / (2.0 * h);
    let moment_sum: f64 = probe
        .potential
        .terms()
        .map(|(k, lambda)| lambda * (moment(&plus, k) - moment(&minus, k)) / (2.0 * h))
        .sum();
    Ok(EulerCheck { fisher_slope, moment_sum, residual: (fisher_slope - moment_sum).abs() })
}

pub fn euler_residual(p: &PolynomialPotential, n: usize, cfg: &FdConfig, i: u32) -> Result<EulerCheck> {
    euler_from_probe(&LegendreProbe::new(p, n, cfg)?, i)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PdeCheck {
    pub alpha: f64,
    /// `Σ (1 + k/2) λ_k ∂α/∂λ_k`.
    pub rhs: f64,
    pub residual: f64,
    pub gradient: BTreeMap<u32, f64>,
}

pub fn pde_from_probe(probe: &LegendreProbe) -> Result<PdeCheck> {
    let gradient = probe.gradient(&probe.potential.powers(), probe.cfg.relative_step)?;
    let rhs: f64 = gradient
        .iter()
        .map(|(&k, &g)| (1.0 + 0.5 * f64::from(k)) * probe.potential.lambda(k) * g)
        .sum();
    let alpha = probe.base.alpha;
    Ok(PdeCheck { alpha, rhs, residual: (alpha - rhs).abs() / alpha.abs().max(1.0), gradient })
}

pub fn pde_residual(p: &PolynomialPotential, n: usize, cfg: &FdConfig) -> Result<PdeCheck> {
    pde_from_probe(&LegendreProbe::new(p, n, cfg)?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlphaHessian {
    pub powers: Vec<u32>,
    pub matrix: Vec<Vec<f64>>,
    pub eigenvalues: Vec<f64>,
}

impl AlphaHessian {
    fn from_matrix(powers: Vec<u32>, m: &DMatrix<f64>) -> Self {
        let mut eigenvalues: Vec<f64> = SymmetricEigen::new(m.clone()).eigenvalues.iter().copied().collect();
        eigenvalues.sort_by(f64::total_cmp);
        Self { powers, matrix: to_rows(m), eigenvalues }
    }

    pub fn from_probe(probe: &LegendreProbe, ks: &[u32]) -> Result<Self> {
        Ok(Self::from_matrix(ks.to_vec(), &probe.hessian(ks)?))
    }

    pub fn entry(&self, k: u32, l: u32) -> Option<f64> {
        let a = self.powers.iter().position(|&x| x == k)?;
        let b = self.powers.iter().position(|&x| x == l)?;
        Some(self.matrix[a][b])
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(f64::NAN)
    }
}

fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|r| m.row(r).iter().copied().collect()).collect()
}

/// `∂²α_n/∂λ_k∂λ_l` over `ks`.
pub fn alpha_hessian_fd(p: &PolynomialPotential, n: usize, cfg: &FdConfig, ks: &[u32]) -> Result<AlphaHessian> {
    AlphaHessian::from_probe(&LegendreProbe::new(p, n, cfg)?, ks)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairingCheck {
    pub powers: Vec<u32>,
    /// `∂<x^k>/∂λ_j`.
    pub moment_jacobian: Vec<Vec<f64>>,
    /// `∂²I/∂<x^i>∂<x^k> = ∂λ_k/∂<x^i>`, the inverse of the Jacobian.
    pub fisher_hessian: Vec<Vec<f64>>,
    pub alpha_hessian: Vec<Vec<f64>>,
    /// `Σ_k (∂²I/∂<x^i>∂<x^k>)(∂²α/∂λ_k∂λ_j)`, ideally `-δ_ij`.
    pub product: Vec<Vec<f64>>,
    /// `‖product + identity‖_∞` (largest entry).
    pub residual: f64,
    pub max_off_diagonal: f64,
}

pub fn pairing_from_probe(probe: &LegendreProbe, ks: &[u32]) -> Result<PairingCheck> {
    let jac = probe.moment_jacobian(ks)?;
    let scale = jac.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 || jac.determinant().abs() <= 1e-12 * scale.powi(ks.len() as i32) {
        return Err(Error::SingularJacobian);
    }
    // ∂λ/∂<A> = J⁻¹ because ∂I/∂<x^k> = λ_k
    let inv = jac.clone().try_inverse().ok_or(Error::SingularJacobian)?;
    let d2i = inv.transpose();
    let hess = probe.hessian(ks)?;
    let product = &d2i * &hess;
    let m = ks.len();
    let mut residual = 0.0f64;
    let mut off = 0.0f64;
    for i in 0..m {
        for j in 0..m {
            let target = if i == j { -1.0 } else { 0.0 };
            residual = residual.max((product[(i, j)] - target).abs());
            if i != j {
                off = off.max(product[(i, j)].abs());
            }
        }
    }
    Ok(PairingCheck {
        powers: ks.to_vec(),
        moment_jacobian: to_rows(&jac),
        fisher_hessian: to_rows(&d2i),
        alpha_hessian: to_rows(&hess),
        product: to_rows(&product),
        residual,
        max_off_diagonal: off,
    })
}

pub fn pairing_check(p: &PolynomialPotential, n: usize, cfg: &FdConfig) -> Result<PairingCheck> {
    pairing_from_probe(&LegendreProbe::new(p, n, cfg)?, &p.powers())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pot(terms: &[(u32, f64)]) -> PolynomialPotential {
        PolynomialPotential::new(terms.iter().copied()).unwrap()
    }

    #[test]
    fn harmonic_gradient_closed_form() {
        // α = 2(-λ₂)^{1/2} + λ₁²/(4λ₂)
        let g = alpha_gradient_fd_at(&pot(&[(2, -4.0)]), 0, &FdConfig::default(), &[1, 2]).unwrap();
        assert!((g.entries[&2] + 0.5).abs() < 1e-5, "{:?}", g.entries);
        assert!(g.entries[&1].abs() < 1e-6);
    }

    #[test]
    fn reciprocity_cases() {
        let cfg = FdConfig::default();
        let r = reciprocity_residuals(&pot(&[(2, -4.0)]), 0, &cfg).unwrap();
        assert!(r[&2].residual < 1e-5);
        let r = reciprocity_residuals(&pot(&[(1, 8.0), (2, -4.0)]), 0, &cfg).unwrap();
        assert!(r[&1].residual < 1e-5 && (r[&1].moment - 1.0).abs() < 1e-6);
        let r = reciprocity_residuals(&pot(&[(4, -8.0)]), 0, &cfg).unwrap();
        assert!(r[&4].residual < 1e-4);
        // for even k the slope is -<x^k> < 0
        assert!(r[&4].slope < 0.0);
    }

    #[test]
    fn euler_cases() {
        let cfg = FdConfig::default();
        let e = euler_residual(&pot(&[(2, -4.0)]), 0, &cfg, 2).unwrap();
        // I = (-λ₂)^{1/2}, so dI/dλ₂ = -1/4; λ₂ d<x²>/dλ₂ = -4 · 1/16
        assert!((e.fisher_slope + 0.25).abs() < 1e-5, "{e:?}");
        assert!((e.moment_sum + 0.25).abs() < 1e-5, "{e:?}");
        assert!(e.residual < 1e-4);
        assert!(euler_residual(&pot(&[(4, -8.0)]), 0, &cfg, 4).unwrap().residual < 1e-3);
        assert!(euler_residual(&pot(&[(2, -4.0), (4, -8.0)]), 0, &cfg, 2).unwrap().residual < 1e-3);
    }

    #[test]
    fn pde_cases() {
        let cfg = FdConfig::default();
        assert!(pde_residual(&pot(&[(2, -4.0)]), 0, &cfg).unwrap().residual < 1e-5);
        assert!(pde_residual(&pot(&[(4, -8.0)]), 0, &cfg).unwrap().residual < 1e-4);
        assert!(pde_residual(&pot(&[(2, -4.0), (4, -8.0)]), 0, &cfg).unwrap().residual < 1e-3);
    }

    #[test]
    fn harmonic_hessian() {
        let h = alpha_hessian_fd(&pot(&[(2, -4.0)]), 0, &FdConfig::default(), &[1, 2]).unwrap();
        assert!((h.entry(2, 2).unwrap() + 1.0 / 16.0).abs() < 1e-3, "{h:?}");
        // ∂²α/∂λ₁² = 1/(2λ₂)
        assert!((h.entry(1, 1).unwrap() + 0.125).abs() < 1e-3, "{h:?}");
        assert!(h.max_eigenvalue() <= 1e-6);
    }

    #[test]
    fn second_derivative_pairing() {
        let cfg = FdConfig::default();
        let r = pairing_check(&pot(&[(2, -4.0)]), 0, &cfg).unwrap();
        assert!((r.product[0][0] + 1.0).abs() < 1e-3, "{r:?}");
        assert!((r.fisher_hessian[0][0] - 16.0).abs() < 1e-2);
        let r = pairing_check(&pot(&[(2, -4.0), (4, -8.0)]), 0, &cfg).unwrap();
        assert!(r.residual < 5e-3, "{r:?}");
        assert!(r.max_off_diagonal < 5e-3);
    }

    #[test]
    fn perturbation_that_breaks_confinement() {
        let cfg = FdConfig { relative_step: 2.0, ..FdConfig::default() };
        // λ₂ = -0.5, step 2 makes it positive
        let err = alpha_gradient_fd(&pot(&[(2, -0.5)]), 0, &cfg).unwrap_err();
        assert_eq!(err, Error::PerturbationBreaksConfinement(2));
    }
}
