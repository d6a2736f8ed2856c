//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Formula text could not be parsed; `offset` is a byte position into the input.
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },

    /// A model or policy file is malformed; `line` is 1-based.
    #[error("{path}:{line}: {message}")]
    FileFormat {
        path: String,
        line: usize,
        message: String,
    },

    /// A loaded or constructed model breaks a structural invariant.
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("policy defines no distribution for state {state}")]
    UndefinedPolicyState { state: usize },

    #[error("action {action} is not enabled in state {state}")]
    ActionNotEnabled { state: usize, action: usize },

    #[error("policies range over different state/action spaces")]
    MismatchedSpaces,

    #[error("unknown atomic proposition `{0}`")]
    UnknownAtom(String),

    /// Nested probability operators inside path content are only supported for
    /// checks against a fixed Markov chain, not for MDP-level optimization.
    #[error("nested probability operator is not supported in MDP-level checks")]
    NestedProb,

    #[error("{what} did not converge within {max_iters} iterations (residual {residual:e})")]
    NoConvergence {
        what: &'static str,
        max_iters: usize,
        residual: f64,
    },

    #[error("k = {k} is outside 1..={max}")]
    TopKOutOfRange { k: usize, max: usize },

    #[error("cannot project an empty vector onto the simplex")]
    EmptyProjection,

    #[error("the violation state set is empty")]
    EmptyViolationSet,

    #[error("neither implication branch admits a satisfying policy")]
    ImplicationUnsatisfied,

    #[error("invalid grid spec: {0}")]
    InvalidGrid(String),

    #[error("could not place grid features after {0} attempts")]
    InfeasiblePlacement(usize),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
