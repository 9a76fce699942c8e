use thiserror::Error;

/// Errors raised by the toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid convex function: {0}")]
    InvalidFunction(String),

    #[error("representation overflow: {pieces} pieces exceeds the cap of {cap}")]
    RepresentationOverflow { pieces: usize, cap: usize },

    #[error("undefined sum: +inf and -inf both occur")]
    UndefinedSum,

    #[error("invalid probability space: {0}")]
    InvalidSpace(String),

    #[error("invalid density: {0}")]
    InvalidDensity(String),

    #[error("space mismatch: expected {expected} atoms, got {got}")]
    SpaceMismatch { expected: usize, got: usize },

    #[error("invalid penalty: {0}")]
    InvalidPenalty(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("ill-posed functional value: {0}")]
    IllPosed(String),

    #[error("solver did not converge: {0}")]
    NonConvergence(String),

    #[error("infeasible problem: {0}")]
    Infeasible(String),

    #[error("scenario error: {0}")]
    Scenario(String),
}

pub type Result<T> = std::result::Result<T, Error>;
