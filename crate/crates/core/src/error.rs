use thiserror::Error;

/// Errors raised by the simulator, compiler and metrology routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid Hilbert space: {0}")]
    InvalidSpace(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("operator is not Hermitian (max |M - M^dagger| = {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("operator is not unitary (max |U^dagger U - I| = {deviation:e})")]
    NotUnitary { deviation: f64 },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("Hilbert space too small: need n_max >= {required}, have {n_max}")]
    SpaceTooSmall { required: usize, n_max: usize },

    #[error("invalid pulse: {0}")]
    InvalidPulse(String),

    #[error("unsupported sideband order |l| = {0}")]
    UnsupportedOrder(u32),

    #[error("pi/2 duration is only defined for spin-flip (epsilon = 1) pulses")]
    NoSpinFlip,

    #[error("invalid trap configuration: {0}")]
    InvalidTrap(String),

    #[error("truncation guard violated: {leaked:e} population in the top two Fock levels")]
    Truncation { leaked: f64 },

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("target term {monomial} is unreachable within depth {depth}")]
    Unreachable { monomial: String, depth: usize },

    #[error("{0}")]
    NotRealizable(String),

    #[error("invalid parameter `{name}`: {message}")]
    OutOfRange { name: &'static str, message: String },

    #[error("fringe fit failed: {0}")]
    Fit(String),

    #[error("bin size N_b = {n_b} outside the allowed range 2 < N_b < M/2 (M = {m})")]
    BinSize { n_b: usize, m: usize },

    #[error("need at least two bins, got {0}")]
    TooFewBins(usize),

    #[error("fringe slope is zero at the operating point")]
    ZeroSlope,

    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
