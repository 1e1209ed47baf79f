//! Parallel tempering over permutation space.
//!
//! `m` replicas run Metropolis sweeps at fixed temperatures; after each
//! round, neighboring temperature slots attempt to exchange their states
//! with probability `min(1, exp(dBeta * dE))`, letting cold replicas escape
//! local minima through the hot end of the ladder.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mcmc::{self, BestTracker};
use crate::oracle::QueryLedger;
use crate::perm::{random_permutation, Permutation};
use crate::problem::Problem;
use crate::report::{SolverReport, TracePoint};
use crate::rng::RandomStream;

/// Strictly descending temperatures `T_1 > .. > T_m > 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct TemperatureLadder {
    temperatures: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LadderProfile {
    Geometric,
    InverseLinear,
}

fn check_endpoints(t_hot: f64, t_cold: f64, m: usize) -> Result<()> {
    if m < 2 {
        return Err(Error::Config(format!("ladder needs m >= 2 slots, got {m}")));
    }
    if !(t_hot.is_finite() && t_cold.is_finite() && t_hot > t_cold && t_cold > 0.0) {
        return Err(Error::Config(format!(
            "degenerate ladder endpoints: t_hot={t_hot}, t_cold={t_cold}"
        )));
    }
    Ok(())
}

impl TemperatureLadder {
    /// Constant-ratio spacing: `T_i = T_1 (T_m / T_1)^((i-1)/(m-1))`.
    pub fn geometric(t_hot: f64, t_cold: f64, m: usize) -> Result<Self> {
        check_endpoints(t_hot, t_cold, m)?;
        let ratio = t_cold / t_hot;
        let temperatures = (0..m)
            .map(|i| {
                if i == 0 {
                    t_hot
                } else if i == m - 1 {
                    t_cold
                } else {
                    t_hot * ratio.powf(i as f64 / (m - 1) as f64)
                }
            })
            .collect();
        Ok(Self { temperatures })
    }

    /// Equally spaced inverse temperatures between `1/t_hot` and `1/t_cold`,
    /// returned hottest first.
    pub fn inverse_linear(t_hot: f64, t_cold: f64, m: usize) -> Result<Self> {
        check_endpoints(t_hot, t_cold, m)?;
        let beta_hot = 1.0 / t_hot;
        let beta_cold = 1.0 / t_cold;
        let temperatures = (0..m)
            .map(|i| {
                if i == 0 {
                    t_hot
                } else if i == m - 1 {
                    t_cold
                } else {
                    let beta =
                        beta_hot + (beta_cold - beta_hot) * i as f64 / (m - 1) as f64;
                    1.0 / beta
                }
            })
            .collect();
        Ok(Self { temperatures })
    }

    /// Single fixed temperature: the m = 1 degenerate case, which reduces
    /// the solver to Metropolis sampling at that temperature.
    pub fn single(t: f64) -> Result<Self> {
        if !(t.is_finite() && t > 0.0) {
            return Err(Error::Config(format!("temperature must be positive, got {t}")));
        }
        Ok(Self {
            temperatures: vec![t],
        })
    }

    pub fn len(&self) -> usize {
        self.temperatures.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn temperatures(&self) -> &[f64] {
        &self.temperatures
    }

    pub fn temperature(&self, slot: usize) -> f64 {
        self.temperatures[slot]
    }

    pub fn beta(&self, slot: usize) -> f64 {
        1.0 / self.temperatures[slot]
    }
}

/// One replica pinned to a temperature slot. Swaps exchange states between
/// slots; the slot's temperature and random stream never move.
#[derive(Debug, Clone)]
pub struct PtReplica {
    pub state: Permutation,
    pub energy: f64,
    pub temperature_index: usize,
    pub rng: RandomStream,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PtConfig {
    /// Number of replicas `m`.
    pub replicas: usize,
    /// Hot endpoint; calibrated from the instance when absent.
    pub t_hot: Option<f64>,
    /// Cold endpoint; calibrated from the instance when absent.
    pub t_cold: Option<f64>,
    pub profile: LadderProfile,
    pub sweeps_per_round: usize,
    pub max_rounds: usize,
    /// Stop after this many rounds without a new best energy.
    pub patience: usize,
    pub seed: u64,
}

impl Default for PtConfig {
    fn default() -> Self {
        Self {
            replicas: 8,
            t_hot: None,
            t_cold: None,
            profile: LadderProfile::Geometric,
            sweeps_per_round: 10,
            max_rounds: 500,
            patience: 50,
            seed: 0,
        }
    }
}

impl PtConfig {
    fn validate(&self) -> Result<()> {
        if self.replicas < 1 || self.sweeps_per_round < 1 || self.max_rounds < 1 || self.patience < 1
        {
            return Err(Error::Config(format!(
                "replicas, sweeps_per_round, max_rounds and patience must all be >= 1: {self:?}"
            )));
        }
        if let (Some(h), Some(c)) = (self.t_hot, self.t_cold) {
            if !(h > c && c > 0.0) {
                return Err(Error::Config(format!(
                    "need t_hot > t_cold > 0, got {h} and {c}"
                )));
            }
        }
        Ok(())
    }
}

/// One Metropolis sweep of a replica at its slot temperature. Returns the
/// number of accepted moves.
pub fn metropolis_sweep<P: Problem>(
    replica: &mut PtReplica,
    ladder: &TemperatureLadder,
    problem: &P,
    ledger: &mut QueryLedger,
) -> Result<usize> {
    let mut best = BestTracker::new();
    mcmc::sweep(
        &mut replica.state,
        &mut replica.energy,
        ladder.temperature(replica.temperature_index),
        problem,
        ledger,
        &mut best,
        &mut replica.rng,
    )
}

/// Attempts a state exchange between two replicas at adjacent ladder slots:
/// accepted with probability `min(1, exp(dBeta * dE))`, where both deltas
/// are taken cold-minus-hot. States and energies move; temperatures don't.
pub fn swap_attempt(
    a: &mut PtReplica,
    b: &mut PtReplica,
    ladder: &TemperatureLadder,
    rng: &mut RandomStream,
) -> Result<bool> {
    let (i, j) = (a.temperature_index, b.temperature_index);
    if i.abs_diff(j) != 1 {
        return Err(Error::NonAdjacentReplicas { i, j });
    }
    // orient so `hot` is the smaller slot index (higher temperature)
    let (hot, cold) = if i < j { (&mut *a, &mut *b) } else { (&mut *b, &mut *a) };
    let d_beta = ladder.beta(cold.temperature_index) - ladder.beta(hot.temperature_index);
    let d_energy = cold.energy - hot.energy;
    let exponent = d_beta * d_energy;
    let accepted = exponent >= 0.0 || rng.bernoulli(exponent.exp());
    if accepted {
        std::mem::swap(&mut hot.state, &mut cold.state);
        std::mem::swap(&mut hot.energy, &mut cold.energy);
    }
    Ok(accepted)
}

/// Full parallel-tempering run: random initial replicas, rounds of sweeps
/// followed by alternating even/odd adjacent swaps, stopping at `max_rounds`
/// or after `patience` rounds without improvement.
pub fn run_pt<P: Problem>(problem: &P, config: &PtConfig) -> Result<SolverReport> {
    config.validate()?;
    let n = problem.stops();
    if n == 0 {
        return Err(Error::InvalidSize);
    }
    let mut ledger = QueryLedger::new(n)?;
    let mut best = BestTracker::new();
    let master = RandomStream::new(config.seed);

    let (t_hot, t_cold) = match (config.t_hot, config.t_cold) {
        (Some(h), Some(c)) => (h, c),
        _ => {
            let mut calib_rng = master.split(0);
            let (h, c) =
                mcmc::calibrate_temperature_range(problem, &mut calib_rng, &mut ledger, &mut best)?;
            (config.t_hot.unwrap_or(h), config.t_cold.unwrap_or(c))
        }
    };
    if !(t_hot > t_cold && t_cold > 0.0) {
        return Err(Error::Config(format!(
            "calibrated endpoints degenerate: t_hot={t_hot}, t_cold={t_cold}"
        )));
    }
    let m = config.replicas;
    let ladder = if m == 1 {
        // single replica: fixed-temperature Metropolis at the cold end
        TemperatureLadder::single(t_cold)?
    } else {
        match config.profile {
            LadderProfile::Geometric => TemperatureLadder::geometric(t_hot, t_cold, m)?,
            LadderProfile::InverseLinear => TemperatureLadder::inverse_linear(t_hot, t_cold, m)?,
        }
    };

    let mut replicas = Vec::with_capacity(m);
    for slot in 0..m {
        let mut rng = master.split(1 + slot as u64);
        let state = random_permutation(n, &mut rng)?;
        let energy = mcmc::evaluate(problem, &state, &mut ledger, &mut best)?;
        replicas.push(PtReplica {
            state,
            energy,
            temperature_index: slot,
            rng,
        });
    }
    let mut swap_rng = master.split(1 + m as u64);

    let mut trace = Vec::new();
    let mut rounds = 0u64;
    let mut stale = 0usize;
    let mut best_seen = best.energy;
    for round in 0..config.max_rounds {
        rounds = round as u64 + 1;
        for replica in replicas.iter_mut() {
            for _ in 0..config.sweeps_per_round {
                mcmc::sweep(
                    &mut replica.state,
                    &mut replica.energy,
                    ladder.temperature(replica.temperature_index),
                    problem,
                    &mut ledger,
                    &mut best,
                    &mut replica.rng,
                )?;
            }
        }
        // even rounds swap pairs (0,1),(2,3),.. ; odd rounds (1,2),(3,4),..
        let mut i = round % 2;
        while i + 1 < m {
            let (left, right) = replicas.split_at_mut(i + 1);
            swap_attempt(&mut left[i], &mut right[0], &ladder, &mut swap_rng)?;
            i += 2;
        }
        if best.energy < best_seen {
            best_seen = best.energy;
            stale = 0;
        } else {
            stale += 1;
        }
        trace.push(TracePoint {
            round: rounds,
            best: best.energy,
        });
        if stale >= config.patience {
            break;
        }
    }

    Ok(SolverReport {
        best_route: best.route.expect("at least one evaluation"),
        best_energy: best.energy,
        total_queries: ledger.total(),
        unique_queries: ledger.unique(),
        rounds,
        trace,
        population_trace: None,
        walker_trace: None,
    })
}
