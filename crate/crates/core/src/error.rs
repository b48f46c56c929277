use thiserror::Error;

use crate::solver::GridSolution;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed input: non-finite entries, bad indices, inconsistent lengths.
    #[error("input domain error: {0}")]
    InputDomain(String),

    /// The point lies outside the set where the operator is defined.
    #[error("outside domain: {0}")]
    OutsideDomain(String),

    #[error("sampler exhausted after {attempts} shifts for {cone}")]
    SamplingExhausted { cone: String, attempts: usize },

    #[error("configuration error: {0}")]
    Configuration(String),

    /// The solver stalled; the last accepted iterate is attached.
    #[error("no convergence: {message}")]
    NoConvergence {
        message: String,
        last: Box<GridSolution>,
    },

    #[error("admissibility lost: {0}")]
    Admissibility(String),

    #[error("maximum principle violated: u = {value} at node {node}")]
    MaximumPrinciple { node: usize, value: f64 },

    #[error("corrupt input: {0}")]
    CorruptInput(String),

    #[error("singular linear system at pivot {0}")]
    Singular(usize),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
