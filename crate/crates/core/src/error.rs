use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("insertion probability {0} outside [0, 1)")]
    InvalidAlpha(f64),

    #[error("probability {0} outside [0, 1]")]
    InvalidProbability(f64),

    #[error("symbol {0} is not a bit")]
    InvalidBit(u8),

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("empty word")]
    EmptyWord,

    #[error("blocklength {n} exceeds enumeration guard {guard} (override with SYNCAP_GUARD_N)")]
    GuardExceeded { n: usize, guard: usize },

    #[error("invalid input law: {0}")]
    InvalidLaw(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("sample budget exceeded: {requested} > {budget}")]
    BudgetExceeded { requested: u128, budget: u128 },

    #[error("Blahut-Arimoto did not converge in {iterations} iterations (gap {gap:e} bits)")]
    NotConverged {
        iterations: usize,
        gap: f64,
        trace: Box<crate::capacity::BaTrace>,
    },
}
