//! Crate-wide error type.
//!
//! Every failure is explicit: domain violations (bad modulus, non-unit),
//! resource limits (budget, enumeration bounds), and genuine mathematical
//! obstructions (unsolvable lifting systems) all get their own variant so
//! callers can map them onto distinct exit codes.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("{0} is not an odd prime")]
    NotOddPrime(u64),

    #[error("p^m = {p}^{m} does not fit in a 64-bit word")]
    ModulusOverflow { p: u64, m: u32 },

    #[error("{value} is not a unit mod {modulus} (divisible by p)")]
    NotAUnit { value: u64, modulus: u64 },

    #[error("negative exponent {exp} on non-unit {value}")]
    NegativePowerOfNonUnit { value: u64, exp: i64 },

    #[error("residue {0} is divisible by p; no Teichmüller lift")]
    ZeroResidue(u64),

    #[error("matrix shape or modulus mismatch: {0}")]
    ShapeMismatch(String),

    #[error("matrix is not invertible mod p^m (determinant divisible by p)")]
    NotInvertible,

    #[error("time budget exceeded during {stage}")]
    BudgetExceeded { stage: String },

    #[error("input {what} too large for configured bounds: {detail}")]
    TooLarge { what: String, detail: String },

    #[error("eigenspace index {i} out of range 0..={max}")]
    EigenspaceIndexRange { i: u64, max: u64 },

    #[error("exponent-tuple selection failed: {0}")]
    Selection(#[from] SelectionError),

    #[error("search space exceeds configured bound of {bound} tuples")]
    SearchBound { bound: u64 },

    #[error("ks differences are not distinct mod p-1; decomposition by character is ill-posed")]
    IndistinctCharacters,

    #[error("subgroup closure overflowed its bound; exact result unavailable")]
    ClosureOverflow,

    #[error("congruence-kernel level {k} must be below ambient level {m}")]
    KernelLevel { k: u32, m: u32 },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid representation: {0}")]
    InvalidRep(String),

    #[error("character inconsistent with relators: {0}")]
    InvalidCharacter(String),

    #[error("lifting obstructed: relator {relator} has unremovable defect")]
    Obstructed { relator: String },

    #[error("determinant fix requires p coprime to n, got p={p}, n={n}")]
    DetFixNeedsPCoprimeN { p: u64, n: usize },

    #[error("{0} is not a 1-cocycle (relator condition fails)")]
    NotACocycle(String),

    #[error("candidate does not reduce to the given lift mod p^{level}")]
    BadCandidateReduction { level: u32 },

    #[error("requested {requested} characters but only {available} exist at this level")]
    CharacterCount { requested: u64, available: u64 },

    #[error("pipeline stage {stage} failed: {reason}")]
    Stage { stage: String, reason: String },

    #[error("io error: {0}")]
    Io(String),
}

/// Why `select_ks` could not produce a tuple. These are *reasons*, not bugs:
/// the procedure is allowed to fail (e.g. at the boundary p = 2^{t+2}+3).
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SelectionError {
    #[error("profile has e_p = {e_p} but only e = {e} spare indices were allowed")]
    NotEnoughSpares { e_p: usize, e: u64 },

    #[error("boundary violation of condition (1): m_{t} = {value} is not < (p-1)/2 = {limit}")]
    Boundary { t: usize, value: u64, limit: u64 },

    #[error("insufficient survivors of the required parity: need {need_odd} odd and {need_even} even indices, have {have_odd} and {have_even}")]
    InsufficientParity {
        need_odd: usize,
        need_even: usize,
        have_odd: usize,
        have_even: usize,
    },

    #[error("selected tuple unexpectedly failed final checking at condition ({condition})")]
    FinalCheck { condition: usize },
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
