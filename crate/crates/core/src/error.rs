use thiserror::Error;

/// Errors raised by the solver and the identity checks.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("potential has no nonzero multiplier")]
    EmptyPotential,

    #[error("potential is not confining: leading power {power} has multiplier {lambda} (need even power with negative multiplier)")]
    NotConfining { power: u32, lambda: f64 },

    #[error("multiplier power must be >= 1, got {0}")]
    InvalidPower(u32),

    #[error("non-finite value for {0}")]
    NonFinite(&'static str),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("eigensolver failed to converge: {0}")]
    ConvergenceFailure(String),

    #[error("domain expansion failed after {doublings} doublings (half-width {half_width})")]
    DomainExpansionFailure { doublings: u32, half_width: f64 },

    #[error("moment <x^{0}> is not available")]
    MissingMoment(u32),

    #[error("perturbing lambda_{0} breaks confinement")]
    PerturbationBreaksConfinement(u32),

    #[error("moment Jacobian is singular")]
    SingularJacobian,

    #[error("scale must be positive, got {0}")]
    NonpositiveScale(f64),

    #[error("constant D_{0} must be positive")]
    NonpositiveD(u32),

    #[error("constant {name}_{k} must be positive")]
    NonpositiveConstant { name: &'static str, k: u32 },

    #[error("scan needs at least 5 values spanning one decade: {0}")]
    InsufficientScan(String),

    #[error("all multipliers are zero")]
    AllZeroMultipliers,

    #[error("no interior minimum found")]
    NoInteriorMinimum,
}

pub type Result<T> = std::result::Result<T, Error>;
