//! Finite-difference eigensolver for `-(1/2) ψ'' + U(x) ψ = (α/8) ψ`.
//!
//! The Hamiltonian is discretized with the three-point stencil and Dirichlet
//! ends, giving a symmetric tridiagonal matrix. Eigenvalues are bracketed by
//! Sturm-sequence bisection, vectors come from inverse iteration, and the
//! returned eigenvalue is the Rayleigh quotient of the converged vector,
//! evaluated in a difference form that avoids the `1/Δx²` cancellation.
//!
//! [`solve`] picks the domain and refines the grid by halving `Δx` until
//! successive eigenvalues agree to the requested relative tolerance.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::potential::PolynomialPotential;

/// Energy margin above the top requested level that the potential must reach
/// at the domain edge before the truncation check.
pub const DOMAIN_MARGIN: f64 = 20.0;

const MAX_DOMAIN_DOUBLINGS: u32 = 8;
const PROBE_POINTS: usize = 401;
const DOMAIN_CHECK_POINTS: usize = 1001;
const MAX_INVERSE_ITERATIONS: usize = 8;

/// Symmetric tridiagonal matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalMatrix {
    pub diagonal: Vec<f64>,
    pub off_diagonal: Vec<f64>,
    // d_i + e_{i-1} + e_i, kept separately so callers that know it exactly
    // can avoid the rounding of the large diagonal
    row_sums: Vec<f64>,
}

impl TridiagonalMatrix {
    pub fn new(diagonal: Vec<f64>, off_diagonal: Vec<f64>) -> Result<Self> {
        if diagonal.is_empty() || off_diagonal.len() + 1 != diagonal.len() {
            return Err(Error::InvalidArgument(format!(
                "tridiagonal shape mismatch: {} diagonal, {} off-diagonal",
                diagonal.len(),
                off_diagonal.len()
            )));
        }
        let n = diagonal.len();
        let row_sums = (0..n)
            .map(|i| {
                let left = if i > 0 { off_diagonal[i - 1] } else { 0.0 };
                let right = if i + 1 < n { off_diagonal[i] } else { 0.0 };
                diagonal[i] + left + right
            })
            .collect();
        Ok(Self { diagonal, off_diagonal, row_sums })
    }

    /// Row sums `d_i + e_{i-1} + e_i`, used by [`Self::rayleigh_quotient`].
    pub fn row_sums(&self) -> &[f64] {
        &self.row_sums
    }

    pub fn len(&self) -> usize {
        self.diagonal.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diagonal.is_empty()
    }

    /// Gershgorin interval containing the whole spectrum.
    pub fn gershgorin(&self) -> (f64, f64) {
        let n = self.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let left = if i > 0 { self.off_diagonal[i - 1].abs() } else { 0.0 };
            let right = if i + 1 < n { self.off_diagonal[i].abs() } else { 0.0 };
            lo = lo.min(self.diagonal[i] - left - right);
            hi = hi.max(self.diagonal[i] + left + right);
        }
        (lo, hi)
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut s = self.diagonal[i] * v[i];
                if i > 0 {
                    s += self.off_diagonal[i - 1] * v[i - 1];
                }
                if i + 1 < n {
                    s += self.off_diagonal[i] * v[i + 1];
                }
                s
            })
            .collect()
    }

    /// Number of eigenvalues strictly below `x` (Sturm count of the LDLᵀ
    /// factorization of `T - x I`).
    pub fn count_below(&self, x: f64) -> usize {
        let pivmin = self.pivmin();
        let mut count = 0;
        let mut q = self.diagonal[0] - x;
        if q.abs() < pivmin {
            q = -pivmin;
        }
        if q < 0.0 {
            count += 1;
        }
        for i in 1..self.len() {
            let e = self.off_diagonal[i - 1];
            q = self.diagonal[i] - x - e * e / q;
            if q.abs() < pivmin {
                q = -pivmin;
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    fn pivmin(&self) -> f64 {
        let emax = self.off_diagonal.iter().fold(1.0f64, |m, e| m.max(e * e));
        f64::MIN_POSITIVE * emax
    }

    /// Rayleigh quotient `vᵀTv / vᵀv`, written as
    /// `Σ (d_i + e_{i-1} + e_i) v_i² - Σ e_i (v_{i+1} - v_i)²` so that the large
    /// diagonal and off-diagonal entries never cancel against each other.
    pub fn rayleigh_quotient(&self, v: &[f64]) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for (r, x) in self.row_sums.iter().zip(v) {
            num += r * x * x;
            den += x * x;
        }
        for (e, w) in self.off_diagonal.iter().zip(v.windows(2)) {
            let d = w[1] - w[0];
            num -= e * d * d;
        }
        num / den
    }

    /// `i`-th smallest eigenvalue (0-based) by bisection to full precision.
    pub fn bisect_eigenvalue(&self, i: usize) -> f64 {
        let (lo, hi) = self.spectrum_bounds();
        self.bisect_in(i, lo, hi, 4.0 * f64::EPSILON)
    }

    fn spectrum_bounds(&self) -> (f64, f64) {
        let (lo, hi) = self.gershgorin();
        let pad = f64::EPSILON * lo.abs().max(hi.abs()) + self.pivmin();
        (lo - pad, hi + pad)
    }

    /// Bisection inside `[lo, hi]`, which must satisfy
    /// `count_below(lo) <= i < count_below(hi)`.
    fn bisect_in(&self, i: usize, mut lo: f64, mut hi: f64, rel_tol: f64) -> f64 {
        for _ in 0..256 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.count_below(mid) > i {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo <= rel_tol * lo.abs().max(hi.abs()) {
                break;
            }
        }
        0.5 * (lo + hi)
    }

    /// Bracket for eigenvalue `i` around a guess, widened until the Sturm
    /// counts confirm it; falls back to the Gershgorin interval.
    fn bracket_near(&self, i: usize, guess: f64) -> (f64, f64) {
        let (glo, ghi) = self.spectrum_bounds();
        let mut w = 1e-4 * guess.abs().max(1e-3);
        for _ in 0..40 {
            let lo = (guess - w).max(glo);
            let hi = (guess + w).min(ghi);
            if self.count_below(lo) <= i && self.count_below(hi) > i {
                return (lo, hi);
            }
            w *= 8.0;
        }
        (glo, ghi)
    }

    /// The `n` smallest eigenvalues by bisection only.
    pub fn lowest_eigenvalues(&self, n: usize) -> Vec<f64> {
        (0..n).map(|i| self.bisect_eigenvalue(i)).collect()
    }
}

/// LU factorization of a shifted tridiagonal matrix with partial pivoting.
struct TridiagonalLu {
    dl: Vec<f64>,
    d: Vec<f64>,
    du: Vec<f64>,
    du2: Vec<f64>,
    swapped: Vec<bool>,
}

impl TridiagonalLu {
    fn factor(t: &TridiagonalMatrix, shift: f64) -> Self {
        let n = t.len();
        let mut d: Vec<f64> = t.diagonal.iter().map(|x| x - shift).collect();
        let mut dl = t.off_diagonal.clone();
        let mut du = t.off_diagonal.clone();
        let mut du2 = vec![0.0; n.saturating_sub(2)];
        let mut swapped = vec![false; n.saturating_sub(1)];
        for i in 0..n.saturating_sub(1) {
            if d[i].abs() >= dl[i].abs() {
                if d[i] != 0.0 {
                    let fact = dl[i] / d[i];
                    dl[i] = fact;
                    d[i + 1] -= fact * du[i];
                }
            } else {
                let fact = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = fact;
                let temp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = temp - fact * d[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] *= -fact;
                }
                swapped[i] = true;
            }
        }
        // an exactly singular pivot only means the shift hit an eigenvalue
        let (glo, ghi) = t.gershgorin();
        let tiny = f64::EPSILON * glo.abs().max(ghi.abs()).max(1.0);
        for x in d.iter_mut() {
            if *x == 0.0 {
                *x = tiny;
            }
        }
        Self { dl, d, du, du2, swapped }
    }

    fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.d.len();
        for i in 0..n.saturating_sub(1) {
            if self.swapped[i] {
                let temp = b[i] - self.dl[i] * b[i + 1];
                b[i] = b[i + 1];
                b[i + 1] = temp;
            } else {
                b[i + 1] -= self.dl[i] * b[i];
            }
        }
        b[n - 1] /= self.d[n - 1];
        if n > 1 {
            b[n - 2] = (b[n - 2] - self.du[n - 2] * b[n - 1]) / self.d[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            b[i] = (b[i] - self.du[i] * b[i + 1] - self.du2[i] * b[i + 2]) / self.d[i];
        }
    }
}

/// One eigenpair of a tridiagonal matrix. `vector` is normalized so that
/// `Σ v_i² dx = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    pub value: f64,
    pub vector: Vec<f64>,
}

fn start_vector(n: usize) -> Vec<f64> {
    // aperiodic and without parity so no eigenvector is missed
    (0..n).map(|i| 1.0 + 0.5 * (0.754_877_666_2 * i as f64 + 0.1).sin()).collect()
}

fn normalize(v: &mut [f64]) {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= norm);
}

fn orthogonalize(v: &mut [f64], basis: &[Vec<f64>]) {
    for u in basis {
        let dot: f64 = v.iter().zip(u).map(|(a, b)| a * b).sum();
        v.iter_mut().zip(u).for_each(|(a, b)| *a -= dot * b);
    }
}

/// First component that is not tail noise is made positive.
fn fix_sign(v: &mut [f64]) {
    let vmax = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if let Some(first) = v.iter().find(|x| x.abs() > SIGN_THRESHOLD * vmax) {
        if *first < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

/// Relative amplitude below which samples count as tail for sign and node
/// bookkeeping.
pub const SIGN_THRESHOLD: f64 = 1e-6;

/// The `n_states` smallest eigenpairs, ascending, with eigenvectors
/// orthonormal under the weight `dx`.
pub fn solve_lowest(h: &TridiagonalMatrix, n_states: usize, dx: f64) -> Result<Vec<EigenPair>> {
    solve_lowest_near(h, n_states, dx, None)
}

/// As [`solve_lowest`], seeding the bisection brackets with approximate
/// eigenvalues (e.g. from a coarser grid or a nearby potential).
pub fn solve_lowest_near(
    h: &TridiagonalMatrix,
    n_states: usize,
    dx: f64,
    hints: Option<&[f64]>,
) -> Result<Vec<EigenPair>> {
    let n = h.len();
    if n_states == 0 || n_states > n {
        return Err(Error::InvalidArgument(format!(
            "n_states {n_states} must lie in 1..={n}"
        )));
    }
    let (glo, ghi) = h.gershgorin();
    let norm = glo.abs().max(ghi.abs());
    let mut vectors: Vec<Vec<f64>> = Vec::with_capacity(n_states);
    let mut values = Vec::with_capacity(n_states);
    for i in 0..n_states {
        // inverse iteration finishes the job, so the bracket only has to
        // isolate the eigenvalue
        let (lo, hi) = match hints.and_then(|hs| hs.get(i)) {
            Some(&g) => h.bracket_near(i, g),
            None => h.spectrum_bounds(),
        };
        let shift = h.bisect_in(i, lo, hi, 1e-10);
        let lu = TridiagonalLu::factor(h, shift);
        let mut v = start_vector(n);
        orthogonalize(&mut v, &vectors);
        normalize(&mut v);
        let mut rq = shift;
        let mut converged = false;
        let mut residual = f64::INFINITY;
        for it in 0..MAX_INVERSE_ITERATIONS {
            lu.solve_in_place(&mut v);
            orthogonalize(&mut v, &vectors);
            normalize(&mut v);
            rq = h.rayleigh_quotient(&v);
            let hv = h.mul_vec(&v);
            residual = hv.iter().zip(&v).map(|(a, b)| (a - rq * b).powi(2)).sum::<f64>().sqrt();
            if it >= 1 && residual <= 64.0 * f64::EPSILON * norm.max(1.0) {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::ConvergenceFailure(format!(
                "inverse iteration for state {i}: residual {residual:.3e} after \
                 {MAX_INVERSE_ITERATIONS} iterations (shift {shift}, matrix norm {norm:.3e})"
            )));
        }
        if let Some(&prev) = values.last() {
            if rq <= prev {
                return Err(Error::ConvergenceFailure(format!(
                    "eigenvalues not strictly increasing at state {i}: {prev} then {rq}"
                )));
            }
        }
        fix_sign(&mut v);
        values.push(rq);
        vectors.push(v);
    }
    let scale = 1.0 / dx.sqrt();
    Ok(values
        .into_iter()
        .zip(vectors)
        .map(|(value, mut vector)| {
            vector.iter_mut().for_each(|x| *x *= scale);
            EigenPair { value, vector }
        })
        .collect())
}

/// Three-point discretization of `-(1/2) d²/dx² + U(x)` with Dirichlet ends.
pub fn build_hamiltonian(p: &PolynomialPotential, g: &GridSpec) -> TridiagonalMatrix {
    let dx = g.dx();
    let kin = 1.0 / (dx * dx);
    let u: Vec<f64> = g.points().map(|x| p.eval(x)).collect();
    let diagonal = u.iter().map(|v| kin + v).collect();
    let off_diagonal = vec![-0.5 * kin; g.n_points - 1];
    let last = u.len() - 1;
    let row_sums = u
        .iter()
        .enumerate()
        .map(|(i, v)| if i == 0 || i == last { 0.5 * kin + v } else { *v })
        .collect();
    TridiagonalMatrix { diagonal, off_diagonal, row_sums }
}

/// One bound state on a grid. `alpha` is eight times the eigenvalue.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Eigenstate {
    pub index: usize,
    pub alpha: f64,
    pub psi: Vec<f64>,
    pub grid: GridSpec,
}

impl Eigenstate {
    pub fn energy(&self) -> f64 {
        self.alpha / 8.0
    }

    /// Number of sign changes among samples above the tail threshold.
    pub fn node_count(&self) -> usize {
        let vmax = self.psi.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let mut last = 0.0f64;
        let mut nodes = 0;
        for &v in &self.psi {
            if v.abs() <= SIGN_THRESHOLD * vmax {
                continue;
            }
            if last != 0.0 && v.signum() != last.signum() {
                nodes += 1;
            }
            last = v;
        }
        nodes
    }

    /// `Σ ψ_i² Δx`.
    pub fn norm_squared(&self) -> f64 {
        self.psi.iter().map(|x| x * x).sum::<f64>() * self.grid.dx()
    }
}

/// Solver controls.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveOptions {
    pub n_states: usize,
    /// Relative agreement required between successive refinements.
    pub target_tolerance: f64,
    /// Zero solves once on the starting grid and skips the convergence test.
    pub max_refinements: u32,
    /// Pick the domain from the potential. When false, `grid` fixes the
    /// domain and the starting resolution.
    pub auto_domain: bool,
    pub grid: Option<GridSpec>,
    /// Starting number of points for the refinement ladder.
    pub initial_points: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            n_states: 1,
            target_tolerance: 1e-8,
            max_refinements: 8,
            auto_domain: true,
            grid: None,
            initial_points: 1025,
        }
    }
}

impl SolveOptions {
    pub fn with_states(n_states: usize) -> Self {
        Self { n_states, ..Self::default() }
    }

    fn validate(&self) -> Result<()> {
        if self.n_states == 0 {
            return Err(Error::InvalidArgument("n_states must be >= 1".into()));
        }
        if !(self.target_tolerance > 0.0) {
            return Err(Error::InvalidArgument("target_tolerance must be > 0".into()));
        }
        if self.initial_points < 3 {
            return Err(Error::InvalidArgument("initial_points must be >= 3".into()));
        }
        if !self.auto_domain && self.grid.is_none() {
            return Err(Error::InvalidArgument("a grid is required when auto_domain is off".into()));
        }
        Ok(())
    }
}

/// One rung of the refinement ladder.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RefinementStep {
    pub n_points: usize,
    pub dx: f64,
    pub alphas: Vec<f64>,
}

/// Converged states plus the ladder that produced them.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveOutcome {
    pub states: Vec<Eigenstate>,
    pub history: Vec<RefinementStep>,
}

/// Eigenstates of `p` on a fixed grid, no refinement.
pub fn solve_on_grid(p: &PolynomialPotential, grid: &GridSpec, n_states: usize) -> Result<Vec<Eigenstate>> {
    solve_on_grid_near(p, grid, n_states, None)
}

/// As [`solve_on_grid`] with approximate eigenvalues (not alphas) as hints.
pub fn solve_on_grid_near(
    p: &PolynomialPotential,
    grid: &GridSpec,
    n_states: usize,
    hints: Option<&[f64]>,
) -> Result<Vec<Eigenstate>> {
    let h = build_hamiltonian(p, grid);
    let pairs = solve_lowest_near(&h, n_states, grid.dx(), hints)?;
    Ok(pairs
        .into_iter()
        .enumerate()
        .map(|(index, pair)| Eigenstate {
            index,
            alpha: 8.0 * pair.value,
            psi: pair.vector,
            grid: *grid,
        })
        .collect())
}

/// Auto-domain, auto-refined solve. See [`solve_with_history`].
pub fn solve(p: &PolynomialPotential, opts: &SolveOptions) -> Result<Vec<Eigenstate>> {
    solve_with_history(p, opts).map(|o| o.states)
}

pub fn solve_with_history(p: &PolynomialPotential, opts: &SolveOptions) -> Result<SolveOutcome> {
    opts.validate()?;
    let mut grid = if opts.auto_domain {
        let half = choose_half_width(p, opts)?;
        GridSpec::symmetric(half, opts.initial_points)?
    } else {
        opts.grid.expect("checked in validate")
    };
    if grid.n_points <= opts.n_states {
        return Err(Error::InvalidGrid(format!(
            "{} points cannot hold {} states",
            grid.n_points, opts.n_states
        )));
    }

    let mut history = Vec::new();
    let mut states = solve_on_grid(p, &grid, opts.n_states)?;
    history.push(step(&grid, &states));
    if opts.max_refinements == 0 {
        return Ok(SolveOutcome { states, history });
    }
    for _ in 0..opts.max_refinements {
        grid = grid.refined();
        let hints: Vec<f64> = states.iter().map(Eigenstate::energy).collect();
        let next = solve_on_grid_near(p, &grid, opts.n_states, Some(&hints))?;
        history.push(step(&grid, &next));
        let u_min = grid.points().map(|x| p.eval(x)).fold(f64::INFINITY, f64::min);
        let converged = states.iter().zip(&next).all(|(a, b)| {
            agree(a.energy(), b.energy(), u_min, opts.target_tolerance)
        });
        states = next;
        if converged {
            return Ok(SolveOutcome { states, history });
        }
    }
    let last = &history[history.len() - 1];
    let prev = &history[history.len() - 2];
    Err(Error::ConvergenceFailure(format!(
        "grid refinement did not reach relative tolerance {:e} within {} refinements; \
         last alphas {:?} at n={} vs {:?} at n={}",
        opts.target_tolerance, opts.max_refinements, last.alphas, last.n_points, prev.alphas, prev.n_points
    )))
}

fn step(grid: &GridSpec, states: &[Eigenstate]) -> RefinementStep {
    RefinementStep {
        n_points: grid.n_points,
        dx: grid.dx(),
        alphas: states.iter().map(|s| s.alpha).collect(),
    }
}

/// Relative agreement with the scale `max(|E|, E - U_min)`, which stays
/// positive when `E` crosses zero and scales with the problem.
fn agree(a: f64, b: f64, u_min: f64, tol: f64) -> bool {
    let scale = b.abs().max(b - u_min);
    (a - b).abs() <= tol * scale
}

/// Half-width `L` of the symmetric domain `[-L, L]`.
///
/// First `L` is adjusted until `min(U(±L)) >= E_top + DOMAIN_MARGIN` with
/// `E_top` from a coarse probe; then `L` is doubled until the lowest levels
/// move by less than the target tolerance when the domain is doubled at
/// fixed spacing.
pub fn choose_half_width(p: &PolynomialPotential, opts: &SolveOptions) -> Result<f64> {
    let n = opts.n_states;
    let edge = |l: f64| p.eval(-l).min(p.eval(l));
    let top = |l: f64| -> Result<f64> {
        let g = GridSpec::symmetric(l, PROBE_POINTS)?;
        Ok(*build_hamiltonian(p, &g).lowest_eigenvalues(n).last().unwrap())
    };

    let mut l = 1.0f64;
    for _ in 0..200 {
        let half = 0.5 * l;
        if edge(half) >= top(half)? + DOMAIN_MARGIN {
            l = half;
        } else {
            break;
        }
    }
    let mut grown = false;
    for _ in 0..400 {
        if edge(l) >= top(l)? + DOMAIN_MARGIN {
            grown = true;
            break;
        }
        l *= 1.25;
    }
    if !grown || !l.is_finite() {
        return Err(Error::DomainExpansionFailure { doublings: 0, half_width: l });
    }

    for doubling in 0..=MAX_DOMAIN_DOUBLINGS {
        let inner = GridSpec::symmetric(l, DOMAIN_CHECK_POINTS)?;
        let outer = GridSpec::symmetric(2.0 * l, 2 * DOMAIN_CHECK_POINTS - 1)?;
        let a = build_hamiltonian(p, &inner).lowest_eigenvalues(n);
        let b = build_hamiltonian(p, &outer).lowest_eigenvalues(n);
        let u_min = outer.points().map(|x| p.eval(x)).fold(f64::INFINITY, f64::min);
        if a.iter().zip(&b).all(|(&x, &y)| agree(x, y, u_min, opts.target_tolerance)) {
            return Ok(l);
        }
        if doubling < MAX_DOMAIN_DOUBLINGS {
            l *= 2.0;
        }
    }
    Err(Error::DomainExpansionFailure { doublings: MAX_DOMAIN_DOUBLINGS, half_width: l })
}

/// Richardson extrapolation of a second-order quantity from spacings `h`
/// (`coarse`) and `h/2` (`fine`).
pub fn richardson(coarse: f64, fine: f64) -> f64 {
    fine + (fine - coarse) / 3.0
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ho(lambda2: f64) -> PolynomialPotential {
        PolynomialPotential::new([(2, lambda2)]).unwrap()
    }

    #[test]
    fn hamiltonian_entries() {
        let g = GridSpec::new(-10.0, 10.0, 5).unwrap();
        let h = build_hamiltonian(&ho(-4.0), &g);
        let dx = g.dx();
        assert_eq!(h.diagonal[2], 1.0 / (dx * dx));
        assert!(h.off_diagonal.iter().all(|&e| e == -0.5 / (dx * dx)));
        assert_eq!(h.off_diagonal.len(), 4);

        let g = GridSpec::new(-5.0, 5.0, 1001).unwrap();
        let q = PolynomialPotential::new([(4, -8.0)]).unwrap();
        let h = build_hamiltonian(&q, &g);
        // x = 2 sits at index 700, x = 0 at 500
        assert!((g.x(700) - 2.0).abs() < 1e-12);
        assert!((h.diagonal[700] - h.diagonal[500] - 16.0).abs() < 1e-9);
    }

    #[test]
    fn sturm_count_on_small_matrix() {
        // eigenvalues of tridiag(-1, 2, -1) n=3: 2 - √2, 2, 2 + √2
        let t = TridiagonalMatrix::new(vec![2.0; 3], vec![-1.0; 2]).unwrap();
        assert_eq!(t.count_below(0.5), 0);
        assert_eq!(t.count_below(1.0), 1);
        assert_eq!(t.count_below(2.5), 2);
        assert_eq!(t.count_below(4.0), 3);
        let ev = t.lowest_eigenvalues(3);
        let exact = [2.0 - 2f64.sqrt(), 2.0, 2.0 + 2f64.sqrt()];
        for (a, b) in ev.iter().zip(exact) {
            assert!((a - b).abs() < 1e-14);
        }
        let pairs = solve_lowest(&t, 3, 1.0).unwrap();
        for (p, b) in pairs.iter().zip(exact) {
            assert!((p.value - b).abs() < 1e-14);
        }
    }

    #[test]
    fn rejects_bad_state_counts() {
        let t = TridiagonalMatrix::new(vec![2.0; 3], vec![-1.0; 2]).unwrap();
        assert!(solve_lowest(&t, 0, 1.0).is_err());
        assert!(solve_lowest(&t, 4, 1.0).is_err());
        assert!(TridiagonalMatrix::new(vec![1.0; 3], vec![1.0; 3]).is_err());
    }

    #[test]
    fn harmonic_ground_state_on_fixed_grid() {
        let g = GridSpec::new(-10.0, 10.0, 2000).unwrap();
        let s = solve_on_grid(&ho(-4.0), &g, 1).unwrap();
        assert!((s[0].energy() - 0.5).abs() < 1e-4);
        assert!((s[0].alpha - 4.0).abs() < 1e-3);
    }

    #[test]
    fn harmonic_ladder() {
        let g = GridSpec::new(-10.0, 10.0, 2000).unwrap();
        let s = solve_on_grid(&ho(-4.0), &g, 3).unwrap();
        for (n, st) in s.iter().enumerate() {
            assert!((st.energy() - (n as f64 + 0.5)).abs() < 1e-4, "{n}: {}", st.energy());
        }
    }

    #[test]
    fn orthonormal_and_sign_fixed() {
        let g = GridSpec::new(-10.0, 10.0, 4001).unwrap();
        let s = solve_on_grid(&ho(-4.0), &g, 4).unwrap();
        let dx = g.dx();
        for i in 0..s.len() {
            for j in 0..s.len() {
                let dot: f64 = s[i].psi.iter().zip(&s[j].psi).map(|(a, b)| a * b).sum::<f64>() * dx;
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((dot - expect).abs() < 1e-8, "({i},{j}) {dot}");
            }
            let vmax = s[i].psi.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            let first = s[i].psi.iter().find(|x| x.abs() > SIGN_THRESHOLD * vmax).unwrap();
            assert!(*first > 0.0);
            assert_eq!(s[i].node_count(), i);
        }
    }

    #[test]
    fn auto_solve_harmonic() {
        let s = solve(&ho(-4.0), &SolveOptions::default()).unwrap();
        assert!((s[0].alpha - 4.0).abs() < 1e-7, "{}", s[0].alpha);
        assert!((s[0].norm_squared() - 1.0).abs() < 1e-10);

        let s = solve(&ho(-16.0), &SolveOptions::default()).unwrap();
        assert!((s[0].alpha - 8.0).abs() < 1e-6, "{}", s[0].alpha);

        let shifted = PolynomialPotential::new([(1, 8.0), (2, -4.0)]).unwrap();
        let s = solve(&shifted, &SolveOptions::default()).unwrap();
        assert!(s[0].alpha.abs() < 1e-6, "{}", s[0].alpha);
    }

    #[test]
    fn fixed_domain_requires_grid() {
        let opts = SolveOptions { auto_domain: false, ..SolveOptions::default() };
        assert!(solve(&ho(-4.0), &opts).is_err());
        let opts = SolveOptions {
            auto_domain: false,
            grid: Some(GridSpec::symmetric(8.0, 401).unwrap()),
            ..SolveOptions::default()
        };
        let s = solve(&ho(-4.0), &opts).unwrap();
        assert!((s[0].alpha - 4.0).abs() < 1e-7);
    }

    #[test]
    fn refinement_failure_is_reported() {
        let opts = SolveOptions { max_refinements: 1, ..SolveOptions::default() };
        assert!(matches!(solve(&ho(-4.0), &opts), Err(Error::ConvergenceFailure(_))));
    }

    #[test]
    fn zero_refinements_solves_once_on_the_given_grid() {
        let grid = GridSpec::new(-6.0, 6.0, 201).unwrap();
        let opts = SolveOptions { max_refinements: 0, auto_domain: false, grid: Some(grid), initial_points: 201, ..SolveOptions::default() };
        let out = solve_with_history(&ho(-4.0), &opts).unwrap();
        assert_eq!(out.history.len(), 1);
        assert_eq!(out.states[0].grid, grid);
        assert!((out.states[0].alpha - 4.0).abs() < 1e-2);
    }

    #[test]
    fn richardson_removes_h2_term() {
        // f(h) = 1 + 3h²
        let coarse = 1.0 + 3.0 * 0.04;
        let fine = 1.0 + 3.0 * 0.01;
        assert!((richardson(coarse, fine) - 1.0).abs() < 1e-15);
    }
}
