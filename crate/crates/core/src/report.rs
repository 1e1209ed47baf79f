//! Solver run reports: best route found, query accounting and per-round
//! traces, serialized as a stable JSON document.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::perm::Permutation;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub round: u64,
    pub best: f64,
}

/// One population-annealing step: inverse temperature, population size and
/// the per-variable mean energy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationPoint {
    pub beta: f64,
    pub size: usize,
    pub e_bar: f64,
}

/// One walker-diffusion step: schedule position, walker count, mean walker
/// energy and the population-control offset after the step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WalkerPoint {
    pub s: f64,
    pub count: usize,
    pub mean_energy: f64,
    pub offset: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverReport {
    pub best_route: Permutation,
    pub best_energy: f64,
    pub total_queries: u64,
    pub unique_queries: u64,
    pub rounds: u64,
    pub trace: Vec<TracePoint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub population_trace: Option<Vec<PopulationPoint>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub walker_trace: Option<Vec<WalkerPoint>>,
}

impl SolverReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))
    }
}
