use thiserror::Error;

/// Errors raised by the lattice field theory machinery.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("affine map has a singular linear part")]
    Singular,

    #[error("invalid lattice: {0}")]
    InvalidLattice(String),

    #[error("lattice mismatch between operands")]
    LatticeMismatch,

    #[error("site index out of range: t = {t}, x = {x}")]
    OutOfRange { t: usize, x: usize },

    #[error("support violation: {0}")]
    Support(String),

    #[error("residual {residual:.3e} exceeds tolerance {tolerance:.3e}")]
    Residual { residual: f64, tolerance: f64 },

    #[error("time window too narrow: [{t_a}, {t_b}] needs at least 4 slices of separation")]
    WindowTooNarrow { t_a: usize, t_b: usize },

    #[error("statistics mismatch between algebra operands")]
    StatisticsMismatch,

    #[error("monomial degree {degree} exceeds cap {cap}")]
    DegreeCap { degree: usize, cap: usize },

    #[error("bilinear form is not {0}")]
    FormSymmetry(&'static str),

    #[error("linear map does not preserve the bilinear form (deviation {deviation:.3e})")]
    NotFormPreserving { deviation: f64 },

    #[error("vector is not expressible in the basis (residual {residual:.3e})")]
    NotExpressible { residual: f64 },

    #[error("positivity violated: smallest eigenvalue {min_eigenvalue:.3e}")]
    Positivity { min_eigenvalue: f64 },

    #[error("mode k = {mode} is unstable for the explicit scheme (dt^2 omega^2 = {value:.3})")]
    UnstableMode { mode: usize, value: f64 },

    #[error("argument out of range: {0}")]
    Argument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
