use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("diversity condition violated: 2·α_max + ℓ_max + 2·α_max·ℓ_max = {value} must be < N = {n}")]
    DiversityViolation { value: usize, n: usize },

    #[error("chirp-periodic prefix too short: N_cpp = {n_cpp} < ℓ_max = {ell_max}")]
    PrefixTooShort { n_cpp: usize, ell_max: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("frame prefix flag mismatch: expected has_cpp = {expected}")]
    PrefixFlagMismatch { expected: bool },

    #[error("target outside the unambiguous window: {0}")]
    OutOfWindow(String),

    #[error("invalid grid resolution r_k = {0}")]
    InvalidResolution(f64),

    #[error("dictionary of {columns} columns exceeds the cap of {cap}")]
    DictionaryTooLarge { columns: usize, cap: usize },

    #[error("off-grid offset κ[{index}] = {value} outside ±{bound}")]
    KappaOutOfBounds { index: usize, value: f64, bound: f64 },

    #[error("measurement vector has zero energy")]
    ZeroInput,

    #[error("matrix not positive definite (pivot {pivot} = {value})")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("noise-precision update diverged: denominator {0} is not positive")]
    BetaDivergence(f64),

    #[error("invalid estimator parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
