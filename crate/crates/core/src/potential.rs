//! Polynomial information potentials `U(x) = -(1/8) Σ λ_k x^k`.
//!
//! The multipliers `λ_k` are indexed by power `k >= 1`; there is no constant
//! term. A potential can only be constructed in its validated (confining)
//! form, so every downstream solve has normalizable bound states.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A confining polynomial potential.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BTreeMap<u32, f64>", into = "BTreeMap<u32, f64>")]
pub struct PolynomialPotential {
    // coeffs[k] = λ_k, coeffs[0] is always zero; no trailing zeros.
    coeffs: Vec<f64>,
}

impl PolynomialPotential {
    /// Builds and validates a potential from `(k, λ_k)` pairs. Repeated
    /// powers are summed.
    pub fn new<I>(multipliers: I) -> Result<Self>
    where
        I: IntoIterator<Item = (u32, f64)>,
    {
        let mut coeffs = vec![0.0];
        for (k, lambda) in multipliers {
            if k == 0 {
                return Err(Error::InvalidPower(0));
            }
            if !lambda.is_finite() {
                return Err(Error::NonFinite("multiplier"));
            }
            let k = k as usize;
            if coeffs.len() <= k {
                coeffs.resize(k + 1, 0.0);
            }
            coeffs[k] += lambda;
        }
        while coeffs.len() > 1 && *coeffs.last().unwrap() == 0.0 {
            coeffs.pop();
        }
        let p = Self { coeffs };
        validate_potential(&p)?;
        Ok(p)
    }

    /// Highest power `M` with a nonzero multiplier.
    pub fn degree(&self) -> u32 {
        (self.coeffs.len() - 1) as u32
    }

    /// `λ_k`, zero for powers not present.
    pub fn lambda(&self, k: u32) -> f64 {
        self.coeffs.get(k as usize).copied().unwrap_or(0.0)
    }

    /// Powers with a nonzero multiplier, ascending.
    pub fn powers(&self) -> Vec<u32> {
        self.terms().map(|(k, _)| k).collect()
    }

    /// Nonzero `(k, λ_k)` pairs, ascending in `k`.
    pub fn terms(&self) -> impl Iterator<Item = (u32, f64)> + '_ {
        self.coeffs
            .iter()
            .enumerate()
            .skip(1)
            .filter(|(_, &l)| l != 0.0)
            .map(|(k, &l)| (k as u32, l))
    }

    pub fn multipliers(&self) -> BTreeMap<u32, f64> {
        self.terms().collect()
    }

    /// Returns a copy with `λ_k` replaced by `lambda`, revalidated.
    pub fn with_lambda(&self, k: u32, lambda: f64) -> Result<Self> {
        let mut m = self.multipliers();
        m.insert(k, lambda);
        Self::new(m)
    }

    /// `U(x)` by Horner's scheme.
    pub fn eval(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        for &c in self.coeffs.iter().skip(1).rev() {
            acc = acc * x + c;
        }
        -0.125 * acc * x
    }

    /// Exact derivative `U^{(order)}(x)`; `order == 0` gives `U(x)`.
    pub fn derivative(&self, x: f64, order: u32) -> f64 {
        let m = order as usize;
        if m == 0 {
            return self.eval(x);
        }
        if m >= self.coeffs.len() {
            return 0.0;
        }
        // Σ_{k>=m} k!/(k-m)! λ_k x^{k-m}
        let mut acc = 0.0;
        for k in (m..self.coeffs.len()).rev() {
            acc = acc * x + falling_factorial(k as u32, order) * self.coeffs[k];
        }
        -0.125 * acc
    }
}

impl TryFrom<BTreeMap<u32, f64>> for PolynomialPotential {
    type Error = Error;

    fn try_from(m: BTreeMap<u32, f64>) -> Result<Self> {
        Self::new(m)
    }
}

impl From<PolynomialPotential> for BTreeMap<u32, f64> {
    fn from(p: PolynomialPotential) -> Self {
        p.multipliers()
    }
}

impl fmt::Display for PolynomialPotential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.terms().map(|(k, l)| format!("{k}={l}")).collect();
        write!(f, "{{{}}}", parts.join(", "))
    }
}

/// `k (k-1) ... (k-m+1)`.
pub(crate) fn falling_factorial(k: u32, m: u32) -> f64 {
    if m > k {
        return 0.0;
    }
    ((k - m + 1)..=k).map(f64::from).product()
}

/// Checks the confinement invariant: the leading power is even with a
/// negative multiplier, so `U(x) -> +inf` as `|x| -> inf`.
pub fn validate_potential(p: &PolynomialPotential) -> Result<()> {
    let m = p.degree();
    if m == 0 {
        return Err(Error::EmptyPotential);
    }
    let lead = p.lambda(m);
    if m % 2 == 1 || lead >= 0.0 {
        return Err(Error::NotConfining { power: m, lambda: lead });
    }
    Ok(())
}

pub fn eval_potential(p: &PolynomialPotential, x: f64) -> f64 {
    p.eval(x)
}

pub fn eval_potential_derivative(p: &PolynomialPotential, x: f64, order: u32) -> f64 {
    p.derivative(x, order)
}
