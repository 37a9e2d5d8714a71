//! Expectation values of an eigenstate: moments `<x^k>`, the three routes to
//! the Fisher information, the virial balance and the Cramér–Rao product.

use serde::Serialize;

use crate::eigensolver::Eigenstate;
use crate::error::{Error, Result};
use crate::potential::PolynomialPotential;

/// Trapezoid rule over the state's grid.
pub(crate) fn trapezoid(values: impl ExactSizeIterator<Item = f64>, dx: f64) -> f64 {
    let n = values.len();
    let mut sum = 0.0;
    for (i, v) in values.enumerate() {
        let w = if i == 0 || i + 1 == n { 0.5 } else { 1.0 };
        sum += w * v;
    }
    sum * dx
}

/// Moments `<x^k>` for `k = 0..=k_max` (`<x^0> = 1`).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentSet {
    values: Vec<f64>,
}

impl MomentSet {
    /// From explicit values for `k = 1..=values.len()`.
    pub fn from_values(values: &[f64]) -> Self {
        let mut v = Vec::with_capacity(values.len() + 1);
        v.push(1.0);
        v.extend_from_slice(values);
        Self { values: v }
    }

    pub fn k_max(&self) -> u32 {
        (self.values.len() - 1) as u32
    }

    pub fn get(&self, k: u32) -> Option<f64> {
        self.values.get(k as usize).copied()
    }

    pub fn require(&self, k: u32) -> Result<f64> {
        self.get(k).ok_or(Error::MissingMoment(k))
    }

    /// `(k, <x^k>)` for `k >= 1`.
    pub fn iter(&self) -> impl Iterator<Item = (u32, f64)> + '_ {
        self.values.iter().enumerate().skip(1).map(|(k, &v)| (k as u32, v))
    }
}

pub fn moment(s: &Eigenstate, k: u32) -> f64 {
    let g = &s.grid;
    trapezoid(
        s.psi.iter().enumerate().map(|(i, p)| g.x(i).powi(k as i32) * p * p),
        g.dx(),
    )
}

pub fn moments(s: &Eigenstate, k_max: u32) -> MomentSet {
    let values: Vec<f64> = (1..=k_max).map(|k| moment(s, k)).collect();
    MomentSet::from_values(&values)
}

/// `ψ'` by five-point central differences inside, three-point next to the
/// ends and second-order one-sided at the ends.
pub fn derivative(psi: &[f64], dx: f64) -> Vec<f64> {
    let n = psi.len();
    let mut d = vec![0.0; n];
    if n < 3 {
        return d;
    }
    d[0] = (-3.0 * psi[0] + 4.0 * psi[1] - psi[2]) / (2.0 * dx);
    for i in 1..n - 1 {
        d[i] = if i >= 2 && i + 2 < n {
            (psi[i - 2] - 8.0 * psi[i - 1] + 8.0 * psi[i + 1] - psi[i + 2]) / (12.0 * dx)
        } else {
            (psi[i + 1] - psi[i - 1]) / (2.0 * dx)
        };
    }
    d[n - 1] = (3.0 * psi[n - 1] - 4.0 * psi[n - 2] + psi[n - 3]) / (2.0 * dx);
    d
}

/// `∫ ψ'² dx`, which equals `<-d²/dx²>` after integration by parts.
pub fn gradient_norm(s: &Eigenstate) -> f64 {
    let d = derivative(&s.psi, s.grid.dx());
    trapezoid(d.iter().map(|v| v * v), s.grid.dx())
}

/// `I = 4 ∫ ψ'² dx`.
pub fn fisher_direct(s: &Eigenstate) -> f64 {
    4.0 * gradient_norm(s)
}

/// `I = α + Σ λ_k <x^k>`.
pub fn fisher_identity(s: &Eigenstate, p: &PolynomialPotential, m: &MomentSet) -> Result<f64> {
    let mut sum = s.alpha;
    for (k, lambda) in p.terms() {
        sum += lambda * m.require(k)?;
    }
    Ok(sum)
}

/// `I = -Σ (k/2) λ_k <x^k>`, i.e. `-X·G` with `X_k = <x^k>`, `G_k = k λ_k / 2`.
pub fn fisher_virial(p: &PolynomialPotential, m: &MomentSet) -> Result<f64> {
    let mut sum = 0.0;
    for (k, lambda) in p.terms() {
        sum -= 0.5 * f64::from(k) * lambda * m.require(k)?;
    }
    Ok(sum)
}

/// The three Fisher-information values and their largest pairwise relative
/// difference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FisherTriple {
    pub direct: f64,
    pub identity: f64,
    pub virial: f64,
    pub max_spread: f64,
}

impl FisherTriple {
    pub fn new(direct: f64, identity: f64, virial: f64) -> Self {
        let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE);
        let max_spread = rel(direct, identity).max(rel(direct, virial)).max(rel(identity, virial));
        Self { direct, identity, virial, max_spread }
    }
}

pub fn fisher_all(s: &Eigenstate, p: &PolynomialPotential, m: &MomentSet) -> Result<FisherTriple> {
    Ok(FisherTriple::new(fisher_direct(s), fisher_identity(s, p, m)?, fisher_virial(p, m)?))
}

/// Moments up to the potential's degree plus two (enough for all checks here).
pub fn moments_for(s: &Eigenstate, p: &PolynomialPotential) -> MomentSet {
    moments(s, p.degree().max(2) + 2)
}

/// `<-d²/dx²>` against `<x U'(x)>`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VirialReport {
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
}

pub fn virial_check(s: &Eigenstate, p: &PolynomialPotential) -> VirialReport {
    let lhs = gradient_norm(s);
    let g = &s.grid;
    let rhs = trapezoid(
        s.psi.iter().enumerate().map(|(i, v)| {
            let x = g.x(i);
            x * p.derivative(x, 1) * v * v
        }),
        g.dx(),
    );
    VirialReport { lhs, rhs, residual: (lhs - rhs).abs() / lhs.abs().max(1.0) }
}

/// `<d²/dx²> = (1/8) Σ k λ_k <x^k>`.
pub fn second_derivative_expectation(p: &PolynomialPotential, m: &MomentSet) -> Result<f64> {
    fisher_virial(p, m).map(|i| -i / 4.0)
}

/// `I σ²` with `σ² = <x²> - <x>²`; at least one for every density.
pub fn cramer_rao_product(s: &Eigenstate) -> f64 {
    let mean = moment(s, 1);
    let var = moment(s, 2) - mean * mean;
    fisher_direct(s) * var
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigensolver::{solve, SolveOptions};

    fn states(terms: &[(u32, f64)], n: usize) -> (PolynomialPotential, Vec<Eigenstate>) {
        let p = PolynomialPotential::new(terms.iter().copied()).unwrap();
        let s = solve(&p, &SolveOptions::with_states(n)).unwrap();
        (p, s)
    }

    #[test]
    fn harmonic_moments_and_fisher() {
        let (p, s) = states(&[(2, -4.0)], 3);
        let g = &s[0];
        // Gaussian with ω = 1: <x²> = 1/2, I = 2
        assert!((moment(g, 2) - 0.5).abs() < 1e-7);
        assert!(moment(g, 1).abs() < 1e-8);
        assert!((fisher_direct(g) - 2.0).abs() < 1e-5);
        // first excited: I = 2ω(2n + 1)
        assert!((fisher_direct(&s[1]) - 6.0).abs() < 1e-4);
        let m = moments_for(g, &p);
        assert!((fisher_identity(g, &p, &m).unwrap() - 2.0).abs() < 1e-5);
        assert!((fisher_virial(&p, &m).unwrap() - 2.0).abs() < 1e-5);
        let t = fisher_all(g, &p, &m).unwrap();
        assert!(t.max_spread < 1e-5);

        let v = virial_check(g, &p);
        assert!((v.lhs - 0.5).abs() < 1e-5 && (v.rhs - 0.5).abs() < 1e-5);
        assert!(virial_check(&s[2], &p).residual < 1e-4);
        assert!((cramer_rao_product(g) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn stiff_harmonic_fisher() {
        let (_, s) = states(&[(2, -64.0)], 1);
        assert!((fisher_direct(&s[0]) - 8.0).abs() < 1e-5);
    }

    #[test]
    fn shifted_oscillator_routes() {
        let (p, s) = states(&[(1, 8.0), (2, -4.0)], 1);
        let g = &s[0];
        let m = moments_for(g, &p);
        assert!((m.get(1).unwrap() - 1.0).abs() < 1e-7);
        assert!((m.get(2).unwrap() - 1.5).abs() < 1e-7);
        let t = fisher_all(g, &p, &m).unwrap();
        for v in [t.direct, t.identity, t.virial] {
            assert!((v - 2.0).abs() < 1e-5, "{t:?}");
        }
        assert!((cramer_rao_product(g) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn quartic_routes_agree() {
        let (p, s) = states(&[(4, -8.0)], 1);
        let g = &s[0];
        let m = moments_for(g, &p);
        let t = fisher_all(g, &p, &m).unwrap();
        assert!(t.max_spread < 1e-5, "{t:?}");
        assert!(virial_check(g, &p).residual < 1e-5);
        assert!(cramer_rao_product(g) >= 1.0 - 1e-9);
        let d2 = second_derivative_expectation(&p, &m).unwrap();
        assert!((d2 + virial_check(g, &p).lhs).abs() < 1e-4);
    }

    #[test]
    fn missing_moment_is_an_error() {
        let (p, s) = states(&[(4, -8.0)], 1);
        let m = moments(&s[0], 2);
        assert_eq!(fisher_virial(&p, &m), Err(Error::MissingMoment(4)));
        assert_eq!(fisher_identity(&s[0], &p, &m), Err(Error::MissingMoment(4)));
    }

    #[test]
    fn derivative_orders() {
        // sin on [0, 1]; interior error shrinks ~16x per halving, the ends ~4x
        let err = |n: usize, interior: bool| {
            let dx = 1.0 / (n - 1) as f64;
            let f: Vec<f64> = (0..n).map(|i| (i as f64 * dx).sin()).collect();
            let skip = if interior { 2 } else { 0 };
            derivative(&f, dx)
                .iter()
                .enumerate()
                .skip(skip)
                .take(n - 2 * skip)
                .map(|(i, d)| (d - (i as f64 * dx).cos()).abs())
                .fold(0.0, f64::max)
        };
        let r = err(101, true) / err(201, true);
        assert!((14.0..18.0).contains(&r), "{r}");
        let r = err(101, false) / err(201, false);
        assert!((3.5..4.5).contains(&r), "{r}");
    }
}
