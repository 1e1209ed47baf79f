use thiserror::Error;

use crate::report::SolverReport;

/// Errors surfaced by the library. Solver runs either complete with a
/// [`SolverReport`](crate::report::SolverReport) or fail with one of these.
#[derive(Debug, Error)]
pub enum Error {
    #[error("permutation size must be at least 1")]
    InvalidSize,

    #[error("sequence is not a permutation of 1..={expected}")]
    InvalidPermutation { expected: usize },

    #[error("move position {position} out of range for permutation of length {len}")]
    MoveOutOfBounds { position: usize, len: usize },

    #[error("route has {route_len} stops but instance has {instance_n}")]
    DimensionMismatch { route_len: usize, instance_n: usize },

    #[error("instance field `{field}` is invalid: {reason}")]
    InvalidInstance { field: &'static str, reason: String },

    #[error("instance document malformed: {0}")]
    Schema(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("exact enumeration refused: n={n} exceeds cap {cap} ({evaluations} routes, est. {est_seconds:.0} s)")]
    CapExceeded {
        n: usize,
        cap: usize,
        evaluations: f64,
        est_seconds: f64,
    },

    #[error("query ledger exceeded its memory cap of {cap} distinct routes")]
    LedgerCapacity { cap: usize },

    #[error("route length {n} exceeds the {max} symbols the ledger can key exactly")]
    LedgerKeySize { n: usize, max: usize },

    #[error("reported cost {found} is below the exact minimum {min_cost}; solver or oracle is buggy")]
    OracleViolation { found: f64, min_cost: f64 },

    #[error("performance vector requires a uniform stop count; saw both n={first} and n={other}")]
    MixedBatch { first: usize, other: usize },

    #[error("replicas at ladder slots {i} and {j} are not adjacent")]
    NonAdjacentReplicas { i: usize, j: usize },

    #[error("population died out at step {step} (beta/s = {at})")]
    Extinction {
        step: usize,
        at: f64,
        /// Best-so-far results, attached by the run-level entry points.
        report: Option<Box<SolverReport>>,
    },

    #[error("transition probabilities out of range: p_step={p_step}, |death/spawn|={p_change} (dt too large)")]
    ProbabilityGuard { p_step: f64, p_change: f64 },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
