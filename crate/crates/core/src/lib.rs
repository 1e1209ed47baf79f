//! Quantum-inspired optimization over permutation spaces.
//!
//! Three stochastic solvers — parallel tempering, population annealing and
//! substochastic Monte Carlo — search the `n!` landscape of routes through
//! uniform permutation sampling and adjacent-transposition moves, with cost
//! models for classic travel-cost routing and energy-optimal parcel
//! delivery, an exhaustive baseline, and `[span, error]` performance
//! accounting of how much of the landscape a solver had to query.

pub mod error;
pub mod mcmc;
pub mod oracle;
pub mod pa;
pub mod perm;
pub mod problem;
pub mod pt;
pub mod report;
pub mod rng;
pub mod ssmc;

pub use error::{Error, Result};
pub use perm::{apply_move, is_valid, random_permutation, AdjacentMove, Permutation};
pub use problem::{
    generate_espdp, generate_tsp, EspdpGenParams, EspdpInstance, Instance, Problem, TspInstance,
};
pub use report::SolverReport;
pub use rng::RandomStream;
