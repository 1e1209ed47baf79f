//! Population annealing over permutation space.
//!
//! A population of `R` replicas is cooled through an inverse-temperature
//! schedule. At each step the population is resampled by Boltzmann
//! reweighting between the old and new temperature (copy counts are the
//! floor/ceil randomization of the normalized weight, so the expected count
//! equals the weight exactly), then every survivor runs `N_s` Metropolis
//! sweeps at the new temperature.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mcmc::{self, BestTracker};
use crate::oracle::QueryLedger;
use crate::perm::{random_permutation, Permutation};
use crate::problem::Problem;
use crate::report::{PopulationPoint, SolverReport, TracePoint};
use crate::rng::RandomStream;

/// Strictly increasing inverse temperatures `beta_0 < .. < beta_f`,
/// `beta_0 >= 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnealSchedule {
    betas: Vec<f64>,
}

impl AnnealSchedule {
    pub fn new(betas: Vec<f64>) -> Result<Self> {
        if betas.len() < 2 {
            return Err(Error::Config("schedule needs at least two betas".into()));
        }
        if betas[0] < 0.0 || !betas.iter().all(|b| b.is_finite()) {
            return Err(Error::Config("betas must be finite and start at >= 0".into()));
        }
        if betas.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("betas must be strictly increasing".into()));
        }
        Ok(Self { betas })
    }

    /// `beta_0 = 0` followed by `steps` geometrically spaced betas from
    /// `1/t_hot` up to `1/t_cold`.
    pub fn geometric(t_hot: f64, t_cold: f64, steps: usize) -> Result<Self> {
        if !(t_hot > t_cold && t_cold > 0.0) || steps < 1 {
            return Err(Error::Config(format!(
                "degenerate schedule endpoints: t_hot={t_hot}, t_cold={t_cold}, steps={steps}"
            )));
        }
        let beta_start = 1.0 / t_hot;
        let beta_end = 1.0 / t_cold;
        let mut betas = vec![0.0];
        for i in 0..steps {
            let beta = if i == steps - 1 {
                beta_end
            } else if steps == 1 {
                beta_end
            } else {
                beta_start * (beta_end / beta_start).powf(i as f64 / (steps - 1) as f64)
            };
            betas.push(beta);
        }
        Self::new(betas)
    }

    pub fn betas(&self) -> &[f64] {
        &self.betas
    }
}

#[derive(Debug, Clone)]
pub struct Member {
    pub state: Permutation,
    pub energy: f64,
}

/// The evolving replica population. `nominal` is the target size `R` the
/// resampling normalization aims to keep.
#[derive(Debug, Clone)]
pub struct Population {
    pub members: Vec<Member>,
    pub nominal: usize,
}

impl Population {
    pub fn current_size(&self) -> usize {
        self.members.len()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PaConfig {
    /// Nominal population size `R`.
    pub population: usize,
    /// MCMC sweeps per temperature `N_s`.
    pub sweeps_per_beta: usize,
    /// Number of betas after the infinite-temperature start.
    pub beta_steps: usize,
    /// Hot endpoint; calibrated from the instance when absent.
    pub t_hot: Option<f64>,
    /// Cold endpoint; calibrated from the instance when absent.
    pub t_cold: Option<f64>,
    pub seed: u64,
}

impl Default for PaConfig {
    fn default() -> Self {
        Self {
            population: 100,
            sweeps_per_beta: 5,
            beta_steps: 50,
            t_hot: None,
            t_cold: None,
            seed: 0,
        }
    }
}

impl PaConfig {
    fn validate(&self) -> Result<()> {
        if self.population < 2 || self.sweeps_per_beta < 1 || self.beta_steps < 1 {
            return Err(Error::Config(format!(
                "need population >= 2, sweeps_per_beta >= 1, beta_steps >= 1: {self:?}"
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

/// Normalized resampling weights `tau_hat_j = R * w_j / sum(w)` with
/// `w_j = exp(-(beta_next - beta_prev) E_j)`, computed with a max-shift on
/// the exponents so arbitrarily large energies cannot overflow. The mean
/// weight is `R / current_size`, so expected copy counts keep the
/// population at its nominal size.
pub fn resampling_weights(
    pop: &Population,
    beta_prev: f64,
    beta_next: f64,
) -> Result<Vec<f64>> {
    if pop.members.is_empty() {
        return Err(Error::Config("resampling an empty population".into()));
    }
    if !(beta_next > beta_prev) {
        return Err(Error::Config(format!(
            "schedule must be strictly increasing: {beta_prev} -> {beta_next}"
        )));
    }
    let d_beta = beta_next - beta_prev;
    let e_min = pop
        .members
        .iter()
        .map(|m| m.energy)
        .fold(f64::INFINITY, f64::min);
    let raw: Vec<f64> = pop
        .members
        .iter()
        .map(|m| (-d_beta * (m.energy - e_min)).exp())
        .collect();
    let total: f64 = raw.iter().sum();
    let scale = pop.nominal as f64 / total;
    Ok(raw.into_iter().map(|w| w * scale).collect())
}

/// Stochastic copy counts: `floor(tau)` with probability `1 - frac(tau)`,
/// else `floor(tau) + 1`, so the expected count is exactly `tau` with the
/// smallest possible variance.
pub fn copy_counts(weights: &[f64], rng: &mut RandomStream) -> Vec<u32> {
    weights
        .iter()
        .map(|&tau| {
            debug_assert!(tau >= 0.0);
            let base = tau.floor();
            let frac = tau - base;
            let extra = frac > 0.0 && rng.uniform() < frac;
            base as u32 + u32::from(extra)
        })
        .collect()
}

/// One annealing step: resample at the new inverse temperature, then run
/// `sweeps` Metropolis sweeps on every member at `T = 1/beta_next`. Members
/// sweep on streams split per member index, so the outcome is independent
/// of how the sweeps are scheduled.
#[allow(clippy::too_many_arguments)]
pub fn pa_step<P: Problem>(
    pop: &mut Population,
    beta_prev: f64,
    beta_next: f64,
    sweeps: usize,
    problem: &P,
    ledger: &mut QueryLedger,
    best: &mut BestTracker,
    rng: &mut RandomStream,
) -> Result<()> {
    let weights = resampling_weights(pop, beta_prev, beta_next)?;
    let counts = copy_counts(&weights, rng);
    let mut next = Vec::with_capacity(pop.nominal + pop.nominal / 2);
    for (member, &count) in pop.members.iter().zip(&counts) {
        for _ in 0..count {
            next.push(member.clone());
        }
    }
    if next.is_empty() {
        return Err(Error::Extinction {
            step: 0,
            at: beta_next,
            report: None,
        });
    }
    pop.members = next;
    let temperature = 1.0 / beta_next;
    for (j, member) in pop.members.iter_mut().enumerate() {
        let mut member_rng = rng.split(j as u64 + 1);
        for _ in 0..sweeps {
            mcmc::sweep(
                &mut member.state,
                &mut member.energy,
                temperature,
                problem,
                ledger,
                best,
                &mut member_rng,
            )?;
        }
    }
    Ok(())
}

/// Population mean energy per variable: `mean(E) / n`.
pub fn population_energy(pop: &Population, n: usize) -> Result<f64> {
    if pop.members.is_empty() {
        return Err(Error::Config("empty population has no mean energy".into()));
    }
    let mean = pop.members.iter().map(|m| m.energy).sum::<f64>() / pop.members.len() as f64;
    Ok(mean / n as f64)
}

/// Full population-annealing run over the beta schedule, starting from a
/// uniform random population at infinite temperature.
pub fn run_pa<P: Problem>(problem: &P, config: &PaConfig) -> Result<SolverReport> {
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
    let schedule = AnnealSchedule::geometric(t_hot, t_cold, config.beta_steps)?;

    let mut init_rng = master.split(1);
    let mut members = Vec::with_capacity(config.population);
    for _ in 0..config.population {
        let state = random_permutation(n, &mut init_rng)?;
        let energy = mcmc::evaluate(problem, &state, &mut ledger, &mut best)?;
        members.push(Member { state, energy });
    }
    let mut pop = Population {
        members,
        nominal: config.population,
    };

    let mut trace = Vec::new();
    let mut population_trace = vec![PopulationPoint {
        beta: schedule.betas()[0],
        size: pop.current_size(),
        e_bar: population_energy(&pop, n)?,
    }];

    let steps_root = master.split(2);
    let mut rounds = 0u64;
    for (t, window) in schedule.betas().windows(2).enumerate() {
        let mut step_rng = steps_root.split(t as u64);
        let result = pa_step(
            &mut pop,
            window[0],
            window[1],
            config.sweeps_per_beta,
            problem,
            &mut ledger,
            &mut best,
            &mut step_rng,
        );
        if let Err(Error::Extinction { at, .. }) = result {
            return Err(Error::Extinction {
                step: t,
                at,
                report: Some(Box::new(partial_report(
                    &best,
                    &ledger,
                    rounds,
                    trace,
                    population_trace,
                ))),
            });
        }
        result?;
        rounds = t as u64 + 1;
        population_trace.push(PopulationPoint {
            beta: window[1],
            size: pop.current_size(),
            e_bar: population_energy(&pop, n)?,
        });
        trace.push(TracePoint {
            round: rounds,
            best: best.energy,
        });
    }

    Ok(SolverReport {
        best_route: best.route.expect("at least one evaluation"),
        best_energy: best.energy,
        total_queries: ledger.total(),
        unique_queries: ledger.unique(),
        rounds,
        trace,
        population_trace: Some(population_trace),
        walker_trace: None,
    })
}

fn partial_report(
    best: &BestTracker,
    ledger: &QueryLedger,
    rounds: u64,
    trace: Vec<TracePoint>,
    population_trace: Vec<PopulationPoint>,
) -> SolverReport {
    SolverReport {
        best_route: best.route.clone().expect("at least one evaluation"),
        best_energy: best.energy,
        total_queries: ledger.total(),
        unique_queries: ledger.unique(),
        rounds,
        trace,
        population_trace: Some(population_trace),
        walker_trace: None,
    }
}
