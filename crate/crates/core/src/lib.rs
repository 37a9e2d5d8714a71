//! Numerical laboratory for the Fisher-information view of the 1-D
//! Schrödinger equation with polynomial potentials `U(x) = -(1/8) Σ λ_k x^k`.
//!
//! The eigenvalue `α/8` of `-(1/2)ψ'' + Uψ` is treated as a function of the
//! multipliers `λ_k`; the modules below solve the eigenproblem and check the
//! identities that tie `α`, the moments `<x^k>` and the Fisher information
//! `I = 4∫ψ'²` together.

pub mod ansatz;
pub mod characteristics;
pub mod eigensolver;
pub mod error;
pub mod grid;
pub mod legendre;
pub mod observables;
mod parallel;
pub mod potential;
pub mod report;
pub mod translate;

pub use eigensolver::{solve, solve_lowest, solve_on_grid, solve_with_history, Eigenstate, SolveOptions, TridiagonalMatrix};
pub use legendre::FdConfig;
pub use observables::{MomentSet, FisherTriple};
pub use error::{Error, Result};
pub use grid::GridSpec;
pub use report::{verify, CheckKind, Tolerances, VerificationReport};
pub use potential::{eval_potential, eval_potential_derivative, validate_potential, PolynomialPotential};
