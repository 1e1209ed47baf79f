//! Substochastic Monte Carlo over permutation space.
//!
//! Walkers diffuse on the adjacent-transposition move graph, an
//! `(n-1)`-regular graph over the `n!` routes. At schedule position `s` a
//! walker either steps to a uniformly random neighbor with probability
//! `a(s) dt (n-1)`, dies with probability `b(s) dt (w - threshold)` when its
//! cost sits above the population threshold, spawns a copy of itself with
//! the mirrored probability when below, or stays put. The threshold is the
//! population mean shifted by an adaptive offset that holds the walker
//! count near its nominal value.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mcmc::BestTracker;
use crate::oracle::QueryLedger;
use crate::perm::{random_permutation, AdjacentMove, Permutation};
use crate::problem::Problem;
use crate::report::{SolverReport, TracePoint, WalkerPoint};
use crate::rng::RandomStream;

/// Interpolation profile for `a(s)` (diffusion, non-increasing) and `b(s)`
/// (cost coupling, non-decreasing) over `s` in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScheduleProfile {
    /// `a = 1 - s`, `b = s`.
    Linear,
    /// `a = cos(pi s / 2)`, `b = sin(pi s / 2)`: gentler at the endpoints.
    Trig,
}

/// Annealing schedule: profile, step count and the cap on each step size.
/// The run shrinks `dt` below the cap whenever the stay-probability guard
/// requires it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SsmcSchedule {
    pub profile: ScheduleProfile,
    pub steps: usize,
    pub dt_cap: f64,
}

impl SsmcSchedule {
    pub fn new(profile: ScheduleProfile, steps: usize, dt_cap: f64) -> Result<Self> {
        if steps < 2 || !(dt_cap > 0.0) {
            return Err(Error::Config(format!(
                "schedule needs steps >= 2 and dt_cap > 0, got {steps} and {dt_cap}"
            )));
        }
        Ok(Self {
            profile,
            steps,
            dt_cap,
        })
    }

    pub fn a(&self, s: f64) -> f64 {
        match self.profile {
            ScheduleProfile::Linear => 1.0 - s,
            ScheduleProfile::Trig => (std::f64::consts::FRAC_PI_2 * s).cos(),
        }
    }

    pub fn b(&self, s: f64) -> f64 {
        match self.profile {
            ScheduleProfile::Linear => s,
            ScheduleProfile::Trig => (std::f64::consts::FRAC_PI_2 * s).sin(),
        }
    }

    /// Schedule position of step `j`, sweeping 0 to 1 inclusive.
    pub fn s_at(&self, j: usize) -> f64 {
        j as f64 / (self.steps - 1) as f64
    }
}

#[derive(Debug, Clone)]
pub struct Walker {
    pub state: Permutation,
    pub energy: f64,
}

/// The walker population plus the adaptive energy offset of its
/// death/spawn threshold.
#[derive(Debug, Clone)]
pub struct WalkerEnsemble {
    pub walkers: Vec<Walker>,
    pub nominal: usize,
    pub energy_offset: f64,
}

impl WalkerEnsemble {
    pub fn mean_energy(&self) -> f64 {
        self.walkers.iter().map(|w| w.energy).sum::<f64>() / self.walkers.len() as f64
    }

    fn energy_spread(&self) -> f64 {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for w in &self.walkers {
            lo = lo.min(w.energy);
            hi = hi.max(w.energy);
        }
        hi - lo
    }
}

/// Per-step population statistics the transition probabilities depend on.
#[derive(Debug, Clone, Copy)]
pub struct EnsembleStats {
    /// Mean walker energy at the start of the step.
    pub mean_energy: f64,
    /// Adaptive offset: the death/spawn threshold is `mean_energy - offset`.
    pub offset: f64,
    /// Vertex degree of the move graph, `n - 1` everywhere.
    pub degree: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionProbs {
    pub step: f64,
    pub stay: f64,
    pub die: f64,
    pub spawn: f64,
}

/// The four walker transition probabilities at schedule position `s`:
/// step `a(s) dt degree`; die or spawn `b(s) dt |w - threshold|` depending
/// on the sign of the deviation; stay with the remainder. Exactly one of
/// die/spawn is nonzero (neither when the walker sits on the threshold),
/// and step + stay + die + spawn = 1 by construction — spawning walkers
/// also stay.
pub fn transition_probabilities(
    walker: &Walker,
    stats: &EnsembleStats,
    s: f64,
    dt: f64,
    schedule: &SsmcSchedule,
) -> Result<TransitionProbs> {
    let p_step = schedule.a(s) * dt * stats.degree as f64;
    let deviation = walker.energy - (stats.mean_energy - stats.offset);
    let change = schedule.b(s) * dt * deviation;
    let p_change = change.abs();
    let p_stay = 1.0 - p_step - p_change;
    if !(0.0..=1.0).contains(&p_step) || p_stay < -1e-12 || p_change > 1.0 {
        return Err(Error::ProbabilityGuard {
            p_step,
            p_change,
        });
    }
    let (die, spawn) = if change > 0.0 {
        (p_change, 0.0)
    } else if change < 0.0 {
        (0.0, p_change)
    } else {
        (0.0, 0.0)
    };
    Ok(TransitionProbs {
        step: p_step,
        stay: p_stay.max(0.0),
        die,
        spawn,
    })
}

/// Largest `dt` keeping the worst-case stay probability non-negative, given
/// the current population; infinite when both channels are off.
fn dt_guard_limit(
    ensemble: &WalkerEnsemble,
    stats: &EnsembleStats,
    s: f64,
    schedule: &SsmcSchedule,
) -> f64 {
    let threshold = stats.mean_energy - stats.offset;
    let dev_max = ensemble
        .walkers
        .iter()
        .map(|w| (w.energy - threshold).abs())
        .fold(0.0, f64::max);
    let rate = schedule.a(s) * stats.degree as f64 + schedule.b(s) * dev_max;
    if rate > 0.0 {
        1.0 / rate
    } else {
        f64::INFINITY
    }
}

/// One diffusion step: every walker independently steps, stays, dies or
/// spawns against the pre-step population mean. Spawned copies join at the
/// end of the step and act from the next one; afterwards the offset is
/// nudged towards holding the population at its nominal size.
#[allow(clippy::too_many_arguments)]
pub fn ssmc_step<P: Problem>(
    ensemble: &mut WalkerEnsemble,
    step_index: usize,
    s: f64,
    dt: f64,
    schedule: &SsmcSchedule,
    gain: f64,
    problem: &P,
    ledger: &mut QueryLedger,
    best: &mut BestTracker,
    rng: &mut RandomStream,
) -> Result<()> {
    let n = problem.stops();
    let stats = EnsembleStats {
        mean_energy: ensemble.mean_energy(),
        offset: ensemble.energy_offset,
        degree: n.saturating_sub(1),
    };
    let walkers = std::mem::take(&mut ensemble.walkers);
    let mut survivors = Vec::with_capacity(walkers.len() + walkers.len() / 4);
    let mut spawned = Vec::new();
    for mut walker in walkers {
        let probs = transition_probabilities(&walker, &stats, s, dt, schedule)?;
        let u = rng.uniform();
        if u < probs.step {
            let mv = AdjacentMove::new(rng.index(n - 1));
            let energy = problem.delta_cost(&walker.state, mv, walker.energy);
            walker.state.swap_adjacent(mv);
            ledger.record(&walker.state)?;
            best.observe(&walker.state, energy);
            walker.energy = energy;
            survivors.push(walker);
        } else if u < probs.step + probs.stay {
            survivors.push(walker);
        } else if probs.die > 0.0 {
            // walker dies
        } else if probs.spawn > 0.0 {
            spawned.push(walker.clone());
            survivors.push(walker);
        } else {
            survivors.push(walker);
        }
    }
    survivors.extend(spawned);
    if survivors.is_empty() {
        return Err(Error::Extinction {
            step: step_index,
            at: s,
            report: None,
        });
    }
    ensemble.walkers = survivors;
    // Proportional population control: the channel is neutral at offset 0
    // (deviations from the mean sum to zero), so the offset tracks the size
    // drift directly. An accumulating offset would pair with the population
    // dynamics into an undamped oscillator.
    let drift =
        (ensemble.walkers.len() as f64 - ensemble.nominal as f64) / ensemble.nominal as f64;
    ensemble.energy_offset = gain * ensemble.energy_spread() * drift;
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SsmcConfig {
    /// Nominal walker count.
    pub walkers: usize,
    /// Number of schedule steps from s = 0 to s = 1.
    pub steps: usize,
    /// Step size cap; each step uses `min(dt, dt_guard / 2)`.
    pub dt: f64,
    pub profile: ScheduleProfile,
    /// Offset controller gain as a fraction of the population energy spread.
    pub gain: f64,
    pub seed: u64,
}

impl Default for SsmcConfig {
    fn default() -> Self {
        Self {
            walkers: 64,
            steps: 1200,
            dt: 0.05,
            profile: ScheduleProfile::Linear,
            gain: 1.0,
            seed: 0,
        }
    }
}

impl SsmcConfig {
    fn validate(&self) -> Result<()> {
        if self.walkers < 1 || self.steps < 2 || !(self.dt > 0.0) || self.gain < 0.0 {
            return Err(Error::Config(format!(
                "need walkers >= 1, steps >= 2, dt > 0, gain >= 0: {self:?}"
            )));
        }
        Ok(())
    }
}

/// Full substochastic Monte Carlo run: walkers start uniform over the
/// landscape, the schedule sweeps s from 0 to 1, and the best route over
/// every walker at every step is returned. Runs fail with an extinction
/// error (carrying partial results) if every walker dies.
pub fn run_ssmc<P: Problem>(problem: &P, config: &SsmcConfig) -> Result<SolverReport> {
    config.validate()?;
    let n = problem.stops();
    if n == 0 {
        return Err(Error::InvalidSize);
    }
    let schedule = SsmcSchedule::new(config.profile, config.steps, config.dt)?;
    let mut ledger = QueryLedger::new(n)?;
    let mut best = BestTracker::new();
    let master = RandomStream::new(config.seed);

    let mut init_rng = master.split(0);
    let mut walkers = Vec::with_capacity(config.walkers);
    for _ in 0..config.walkers {
        let state = random_permutation(n, &mut init_rng)?;
        let energy = crate::mcmc::evaluate(problem, &state, &mut ledger, &mut best)?;
        walkers.push(Walker { state, energy });
    }
    let mut ensemble = WalkerEnsemble {
        walkers,
        nominal: config.walkers,
        energy_offset: 0.0,
    };

    let steps_root = master.split(1);
    let mut trace = Vec::new();
    let mut walker_trace = Vec::new();
    let mut rounds = 0u64;
    for j in 0..schedule.steps {
        let s = schedule.s_at(j);
        let stats = EnsembleStats {
            mean_energy: ensemble.mean_energy(),
            offset: ensemble.energy_offset,
            degree: n.saturating_sub(1),
        };
        let dt = config.dt.min(dt_guard_limit(&ensemble, &stats, s, &schedule) / 2.0);
        let mut step_rng = steps_root.split(j as u64);
        let result = ssmc_step(
            &mut ensemble,
            j,
            s,
            dt,
            &schedule,
            config.gain,
            problem,
            &mut ledger,
            &mut best,
            &mut step_rng,
        );
        if let Err(Error::Extinction { step, at, .. }) = result {
            return Err(Error::Extinction {
                step,
                at,
                report: Some(Box::new(SolverReport {
                    best_route: best.route.clone().expect("at least one evaluation"),
                    best_energy: best.energy,
                    total_queries: ledger.total(),
                    unique_queries: ledger.unique(),
                    rounds,
                    trace,
                    population_trace: None,
                    walker_trace: Some(walker_trace),
                })),
            });
        }
        result?;
        rounds = j as u64 + 1;
        walker_trace.push(WalkerPoint {
            s,
            count: ensemble.walkers.len(),
            mean_energy: ensemble.mean_energy(),
            offset: ensemble.energy_offset,
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
        population_trace: None,
        walker_trace: Some(walker_trace),
    })
}
