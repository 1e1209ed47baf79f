//! Shared Metropolis machinery: the adjacent-transposition sweep used by
//! both tempering and annealing, best-so-far tracking over every evaluated
//! route, and the temperature-range calibration the default configs rely on.

use crate::error::Result;
use crate::oracle::QueryLedger;
use crate::perm::{random_permutation, AdjacentMove, Permutation};
use crate::problem::Problem;
use crate::rng::RandomStream;

/// Lowest-cost route seen over a run, updated on every evaluation (a
/// rejected proposal still reveals its cost).
#[derive(Debug, Clone)]
pub struct BestTracker {
    pub energy: f64,
    pub route: Option<Permutation>,
}

impl Default for BestTracker {
    fn default() -> Self {
        Self::new()
    }
}

impl BestTracker {
    pub fn new() -> Self {
        Self {
            energy: f64::INFINITY,
            route: None,
        }
    }

    #[inline]
    pub fn observe(&mut self, route: &Permutation, energy: f64) {
        if energy < self.energy {
            self.energy = energy;
            self.route = Some(route.clone());
        }
    }
}

/// Evaluates `route` from scratch, recording the query.
pub(crate) fn evaluate<P: Problem>(
    problem: &P,
    route: &Permutation,
    ledger: &mut QueryLedger,
    best: &mut BestTracker,
) -> Result<f64> {
    let energy = problem.cost(route);
    ledger.record(route)?;
    best.observe(route, energy);
    Ok(energy)
}

/// One Metropolis sweep: `n - 1` uniformly random adjacent transpositions,
/// each accepted with probability `min(1, exp(-dE/T))`. Proposal costs come
/// from delta evaluation; every proposed route is recorded whether or not
/// the move is taken. Returns the number of accepted moves.
pub(crate) fn sweep<P: Problem>(
    state: &mut Permutation,
    energy: &mut f64,
    temperature: f64,
    problem: &P,
    ledger: &mut QueryLedger,
    best: &mut BestTracker,
    rng: &mut RandomStream,
) -> Result<usize> {
    let n = state.len();
    if n < 2 {
        return Ok(0);
    }
    let mut accepted = 0;
    for _ in 0..n - 1 {
        let mv = AdjacentMove::new(rng.index(n - 1));
        let proposed = problem.delta_cost(state, mv, *energy);
        state.swap_adjacent(mv);
        ledger.record(state)?;
        best.observe(state, proposed);
        let delta = proposed - *energy;
        if delta <= 0.0 || rng.bernoulli((-delta / temperature).exp()) {
            *energy = proposed;
            accepted += 1;
        } else {
            state.swap_adjacent(mv);
        }
    }
    Ok(accepted)
}

const CALIBRATION_TRIALS: usize = 100;

/// Picks the hot/cold temperature endpoints from the instance itself: sample
/// random routes and one random move each, then solve for the temperatures
/// at which the mean uphill Metropolis acceptance is 0.8 (hot) and 0.01
/// (cold). All evaluations count as queries.
pub(crate) fn calibrate_temperature_range<P: Problem>(
    problem: &P,
    rng: &mut RandomStream,
    ledger: &mut QueryLedger,
    best: &mut BestTracker,
) -> Result<(f64, f64)> {
    let n = problem.stops();
    if n < 2 {
        return Ok((1.0, 0.01));
    }
    let mut uphill = Vec::new();
    for _ in 0..CALIBRATION_TRIALS {
        let route = random_permutation(n, rng)?;
        let energy = evaluate(problem, &route, ledger, best)?;
        let mv = AdjacentMove::new(rng.index(n - 1));
        let moved_energy = problem.delta_cost(&route, mv, energy);
        let mut moved = route.clone();
        moved.swap_adjacent(mv);
        ledger.record(&moved)?;
        best.observe(&moved, moved_energy);
        let delta = moved_energy - energy;
        if delta > 0.0 {
            uphill.push(delta);
        }
    }
    if uphill.is_empty() {
        // flat landscape: any temperature behaves the same
        return Ok((1.0, 0.01));
    }
    Ok((
        temperature_for_acceptance(&uphill, 0.8),
        temperature_for_acceptance(&uphill, 0.01),
    ))
}

/// Solves mean(exp(-d/T)) = target over the sampled uphill deltas by
/// geometric bisection; the mean is strictly increasing in T.
fn temperature_for_acceptance(deltas: &[f64], target: f64) -> f64 {
    let mean_delta = deltas.iter().sum::<f64>() / deltas.len() as f64;
    let acceptance =
        |t: f64| deltas.iter().map(|d| (-d / t).exp()).sum::<f64>() / deltas.len() as f64;
    let mut lo = 1e-9 * mean_delta;
    let mut hi = 1e9 * mean_delta;
    for _ in 0..200 {
        let mid = (lo * hi).sqrt();
        if acceptance(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo * hi).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn acceptance_solver_hits_target() {
        let deltas = vec![0.5, 1.0, 2.0, 4.0];
        for target in [0.8, 0.5, 0.01] {
            let t = temperature_for_acceptance(&deltas, target);
            let got =
                deltas.iter().map(|d| (-d / t).exp()).sum::<f64>() / deltas.len() as f64;
            assert!((got - target).abs() < 1e-9, "target {target}, got {got}");
        }
    }
}
