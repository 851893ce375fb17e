use thiserror::Error;

/// Errors produced by the cascade model library.
#[derive(Debug, Error)]
pub enum CascadeError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    /// The infinite-depth iteration has no finite limit for these parameters.
    #[error("divergent regime: 2(q + pK) = {factor} >= 1")]
    DivergentRegime { factor: f64 },

    #[error("iteration budget exhausted after {0} iterations")]
    IterationBudget(usize),

    #[error("angle {0} outside [0, 2pi)")]
    AngleOutOfRange(f64),

    #[error("expected {expected} arguments, got {got}")]
    WrongArity { expected: usize, got: usize },

    #[error("beam order k = {k} exceeds the subset-enumeration ceiling {max_k}")]
    BeamOrderTooLarge { k: u32, max_k: u32 },

    #[error("conditioning event has negligible probability")]
    NegligibleConditioning,

    #[error("{0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, CascadeError>;
