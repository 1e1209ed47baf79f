//! Exact baselines and query accounting.
//!
//! Solver quality is summarized by the dimensionless pair `[span, error]`:
//! span is the fraction of the `n!` landscape whose cost the solver actually
//! learned (unique evaluations / n!), error is the mean relative deviation
//! of the returned cost from the true minimum. The ledger that backs the
//! span counts every evaluation — a delta evaluation reveals the moved
//! route's cost just as a full one does, so both count the same.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::perm::Permutation;
use crate::problem::Problem;

/// `FACTORIAL[n]` = n! for n up to 20 (the largest that fits in a u64).
pub const FACTORIAL: [u64; 21] = {
    let mut t = [1u64; 21];
    let mut i = 1;
    while i <= 20 {
        t[i] = t[i - 1] * i as u64;
        i += 1;
    }
    t
};

/// Largest route length whose permutations can be keyed exactly in a u64.
pub const MAX_LEDGER_SYMBOLS: usize = 20;

/// Default cap on distinct routes tracked before the ledger refuses to grow
/// (~8.4M keys, on the order of 200 MB of set overhead).
pub const DEFAULT_LEDGER_CAP: usize = 1 << 23;

/// Lexicographic rank of the permutation: an exact, collision-free u64 key
/// for n <= 20.
fn route_key(p: &Permutation) -> u64 {
    let s = p.symbols();
    let n = s.len();
    let mut rank = 0u64;
    for i in 0..n {
        let smaller_later = s[i + 1..].iter().filter(|&&x| x < s[i]).count() as u64;
        rank += smaller_later * FACTORIAL[n - 1 - i];
    }
    rank
}

/// Counts total and unique cost evaluations over one solver run.
///
/// Unique tracking is exact (each route maps to its lexicographic rank);
/// when the distinct-route set would exceed the cap the ledger errors out
/// rather than approximating.
#[derive(Debug, Clone)]
pub struct QueryLedger {
    n: usize,
    total: u64,
    seen: HashSet<u64>,
    cap: usize,
}

impl QueryLedger {
    pub fn new(n: usize) -> Result<Self> {
        Self::with_cap(n, DEFAULT_LEDGER_CAP)
    }

    pub fn with_cap(n: usize, cap: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidSize);
        }
        if n > MAX_LEDGER_SYMBOLS {
            return Err(Error::LedgerKeySize {
                n,
                max: MAX_LEDGER_SYMBOLS,
            });
        }
        Ok(Self {
            n,
            total: 0,
            seen: HashSet::new(),
            cap,
        })
    }

    /// Records one evaluation of `route`.
    pub fn record(&mut self, route: &Permutation) -> Result<()> {
        debug_assert_eq!(route.len(), self.n);
        self.total += 1;
        if self.seen.len() >= self.cap && !self.seen.contains(&route_key(route)) {
            return Err(Error::LedgerCapacity { cap: self.cap });
        }
        self.seen.insert(route_key(route));
        Ok(())
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn unique(&self) -> u64 {
        self.seen.len() as u64
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Folds another run's counts into this one (set union on routes).
    pub fn merge(&mut self, other: QueryLedger) {
        debug_assert_eq!(self.n, other.n);
        self.total += other.total;
        self.seen.extend(other.seen);
    }
}

/// Ground truth from exhaustive enumeration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactResult {
    pub min_route: Permutation,
    pub min_cost: f64,
    pub evaluations: u64,
}

impl ExactResult {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("exact result serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))
    }
}

/// Default refusal threshold for exhaustive enumeration.
pub const DEFAULT_BRUTE_CAP: usize = 10;

// Rough enumeration throughput used only for the refusal message.
const EVALS_PER_SECOND: f64 = 5e6;

/// Advances `s` to its lexicographic successor; false once at the last one.
fn next_permutation(s: &mut [u32]) -> bool {
    let n = s.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && s[i - 1] >= s[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while s[j] <= s[i - 1] {
        j -= 1;
    }
    s.swap(i - 1, j);
    s[i..].reverse();
    true
}

/// Enumerates all `n!` routes in lexicographic order and returns the first
/// one attaining the minimum cost (so ties resolve to the lexicographically
/// smallest route). Refuses above `cap` with a runtime estimate.
pub fn brute_force<P: Problem>(problem: &P, cap: usize) -> Result<ExactResult> {
    let n = problem.stops();
    if n == 0 {
        return Err(Error::InvalidSize);
    }
    if n > cap {
        let evaluations = (1..=n).map(|k| k as f64).product::<f64>();
        return Err(Error::CapExceeded {
            n,
            cap,
            evaluations,
            est_seconds: evaluations / EVALS_PER_SECOND,
        });
    }
    let mut symbols: Vec<u32> = (1..=n as u32).collect();
    let mut best_cost = f64::INFINITY;
    let mut best: Option<Vec<u32>> = None;
    let mut evaluations = 0u64;
    loop {
        let route = Permutation::from_symbols(symbols.clone()).expect("enumeration stays valid");
        let c = problem.cost(&route);
        evaluations += 1;
        if c < best_cost {
            best_cost = c;
            best = Some(symbols.clone());
        }
        if !next_permutation(&mut symbols) {
            break;
        }
    }
    Ok(ExactResult {
        min_route: Permutation::from_symbols(best.expect("at least one route")).unwrap(),
        min_cost: best_cost,
        evaluations,
    })
}

// Relative slack granted before a below-minimum cost is treated as a bug.
const ORACLE_SLACK: f64 = 1e-9;

/// Relative deviation `(found - min) / min` of a solver's result from the
/// exact minimum. Within slack of the minimum it clamps to zero; below it,
/// the caller has a bug and gets an error.
pub fn deviation(found: f64, exact: &ExactResult) -> Result<f64> {
    let min = exact.min_cost;
    if found < min - ORACLE_SLACK * min.abs() {
        return Err(Error::OracleViolation {
            found,
            min_cost: min,
        });
    }
    Ok(((found - min) / min).max(0.0))
}

/// The `[span, error]` summary of a batch of runs at a common `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerformanceVector {
    pub span: f64,
    pub error: f64,
}

/// Aggregates per-instance rows `(n, unique_queries, deviation)` into the
/// performance vector: span = mean(unique)/n!, error = mean(deviation).
/// Every row must share the same `n`.
pub fn performance_vector(rows: &[(usize, u64, f64)]) -> Result<PerformanceVector> {
    let Some(&(n, _, _)) = rows.first() else {
        return Err(Error::Config("performance vector over an empty batch".into()));
    };
    for &(other, _, _) in rows {
        if other != n {
            return Err(Error::MixedBatch { first: n, other });
        }
    }
    if n > MAX_LEDGER_SYMBOLS {
        return Err(Error::LedgerKeySize {
            n,
            max: MAX_LEDGER_SYMBOLS,
        });
    }
    let count = rows.len() as f64;
    let mean_unique = rows.iter().map(|&(_, u, _)| u as f64).sum::<f64>() / count;
    let mean_dev = rows.iter().map(|&(_, _, d)| d).sum::<f64>() / count;
    Ok(PerformanceVector {
        span: mean_unique / FACTORIAL[n] as f64,
        error: mean_dev,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::perm::random_permutation;
    use crate::problem::{generate_espdp, EspdpGenParams, EspdpInstance, TspInstance};
    use crate::rng::RandomStream;
    use approx::assert_relative_eq;

    fn route(v: &[u32]) -> Permutation {
        Permutation::from_symbols(v.to_vec()).unwrap()
    }

    #[test]
    fn ledger_counts_and_bounds() {
        let mut ledger = QueryLedger::new(4).unwrap();
        let mut rng = RandomStream::new(8);
        let mut log = Vec::new();
        let mut prev_total = 0;
        let mut prev_unique = 0;
        for _ in 0..500 {
            let p = random_permutation(4, &mut rng).unwrap();
            ledger.record(&p).unwrap();
            log.push(p);
            assert!(ledger.total() == prev_total + 1);
            assert!(ledger.unique() >= prev_unique);
            assert!(ledger.unique() <= ledger.total());
            assert!(ledger.unique() <= FACTORIAL[4]);
            prev_total = ledger.total();
            prev_unique = ledger.unique();
        }
        // independent recomputation of the unique count from the log
        let distinct: std::collections::HashSet<Vec<u32>> =
            log.iter().map(|p| p.symbols().to_vec()).collect();
        assert_eq!(ledger.unique(), distinct.len() as u64);
        assert_eq!(ledger.unique(), FACTORIAL[4]); // 500 draws cover S4
    }

    #[test]
    fn ledger_cap_errors_explicitly() {
        let mut ledger = QueryLedger::with_cap(5, 3).unwrap();
        let mut rng = RandomStream::new(1);
        let mut result = Ok(());
        for _ in 0..50 {
            let p = random_permutation(5, &mut rng).unwrap();
            result = ledger.record(&p);
            if result.is_err() {
                break;
            }
        }
        assert!(matches!(result, Err(Error::LedgerCapacity { cap: 3 })));
    }

    #[test]
    fn ledger_rejects_oversized_symbols() {
        assert!(matches!(
            QueryLedger::new(21),
            Err(Error::LedgerKeySize { n: 21, .. })
        ));
    }

    #[test]
    fn ledger_merge_unions() {
        let mut a = QueryLedger::new(3).unwrap();
        let mut b = QueryLedger::new(3).unwrap();
        a.record(&route(&[1, 2, 3])).unwrap();
        a.record(&route(&[2, 1, 3])).unwrap();
        b.record(&route(&[2, 1, 3])).unwrap();
        b.record(&route(&[3, 2, 1])).unwrap();
        a.merge(b);
        assert_eq!(a.total(), 4);
        assert_eq!(a.unique(), 3);
    }

    #[test]
    fn route_keys_are_distinct_per_n() {
        for n in 1..=6usize {
            let mut keys = std::collections::HashSet::new();
            let mut symbols: Vec<u32> = (1..=n as u32).collect();
            loop {
                let p = Permutation::from_symbols(symbols.clone()).unwrap();
                assert!(keys.insert(route_key(&p)));
                assert!(route_key(&p) < FACTORIAL[n]);
                if !next_permutation(&mut symbols) {
                    break;
                }
            }
            assert_eq!(keys.len() as u64, FACTORIAL[n]);
        }
    }

    #[test]
    fn brute_force_single_stop() {
        let inst = EspdpInstance::new(
            1,
            2.0,
            vec![1.0],
            vec![vec![0.0, 3.0], vec![3.0, 0.0]],
            vec![vec![0.0, 0.5], vec![0.5, 0.0]],
            None,
            None,
        )
        .unwrap();
        let exact = brute_force(&inst, DEFAULT_BRUTE_CAP).unwrap();
        assert_eq!(exact.min_route, route(&[1]));
        assert_relative_eq!(exact.min_cost, 16.0, max_relative = 1e-15);
        assert_eq!(exact.evaluations, 1);
    }

    #[test]
    fn brute_force_tie_returns_lex_smallest() {
        // three stops at the corners of an equilateral triangle with the
        // depot in the center: all 6 tours tie exactly by symmetry
        let h = 0.75f64.sqrt();
        let pts = vec![
            [0.5, h / 3.0],
            [0.0, 0.0],
            [1.0, 0.0],
            [0.5, h],
        ];
        let dim = 4;
        let mut rows = vec![vec![0.0; dim]; dim];
        for i in 0..dim {
            for j in 0..dim {
                let dx = pts[i][0] - pts[j][0];
                let dy = pts[i][1] - pts[j][1];
                rows[i][j] = (dx * dx + dy * dy).sqrt();
            }
        }
        // force exact symmetry: stop-stop legs 1, depot legs identical
        let r = (rows[0][1] * 1e12).round() / 1e12;
        for i in 1..dim {
            rows[0][i] = r;
            rows[i][0] = r;
            for j in 1..dim {
                if i != j {
                    rows[i][j] = 1.0;
                }
            }
        }
        let inst = TspInstance::new(3, rows, None, None).unwrap();
        let exact = brute_force(&inst, DEFAULT_BRUTE_CAP).unwrap();
        assert_eq!(exact.evaluations, 6);
        assert_eq!(exact.min_route, route(&[1, 2, 3]));
    }

    #[test]
    fn brute_force_matches_reverse_enumeration_n8() {
        let mut rng = RandomStream::new(88);
        let inst = generate_espdp(8, &mut rng, &EspdpGenParams::default()).unwrap();
        let exact = brute_force(&inst, DEFAULT_BRUTE_CAP).unwrap();
        // independent pass in reverse lexicographic order, keeping the
        // lexicographically smallest route among exact ties
        let mut symbols: Vec<u32> = (1..=8).rev().collect();
        let mut best_cost = f64::INFINITY;
        let mut best: Option<Vec<u32>> = None;
        let mut count = 0u64;
        loop {
            let p = Permutation::from_symbols(symbols.clone()).unwrap();
            let c = inst.cost(&p);
            count += 1;
            let better = c < best_cost
                || (c == best_cost && best.as_ref().is_some_and(|b| symbols < *b));
            if better {
                best_cost = c;
                best = Some(symbols.clone());
            }
            if !prev_permutation(&mut symbols) {
                break;
            }
        }
        assert_eq!(count, FACTORIAL[8]);
        assert_eq!(exact.evaluations, FACTORIAL[8]);
        assert_eq!(exact.min_cost, best_cost);
        assert_eq!(exact.min_route.symbols(), best.unwrap().as_slice());
    }

    fn prev_permutation(s: &mut [u32]) -> bool {
        let n = s.len();
        if n < 2 {
            return false;
        }
        let mut i = n - 1;
        while i > 0 && s[i - 1] <= s[i] {
            i -= 1;
        }
        if i == 0 {
            return false;
        }
        let mut j = n - 1;
        while s[j] >= s[i - 1] {
            j -= 1;
        }
        s.swap(i - 1, j);
        s[i..].reverse();
        true
    }

    #[test]
    fn brute_force_is_idempotent() {
        let mut rng = RandomStream::new(3);
        let inst = generate_espdp(5, &mut rng, &EspdpGenParams::default()).unwrap();
        let a = brute_force(&inst, DEFAULT_BRUTE_CAP).unwrap();
        let b = brute_force(&inst, DEFAULT_BRUTE_CAP).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn brute_force_refuses_above_cap() {
        let mut rng = RandomStream::new(3);
        let inst = generate_espdp(12, &mut rng, &EspdpGenParams::default()).unwrap();
        let err = brute_force(&inst, DEFAULT_BRUTE_CAP).unwrap_err();
        match err {
            Error::CapExceeded {
                n,
                cap,
                evaluations,
                est_seconds,
            } => {
                assert_eq!(n, 12);
                assert_eq!(cap, 10);
                assert_relative_eq!(evaluations, FACTORIAL[12] as f64, max_relative = 1e-12);
                assert!(est_seconds > 0.0);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn deviation_examples() {
        let exact = ExactResult {
            min_route: route(&[1]),
            min_cost: 10.0,
            evaluations: 1,
        };
        assert_eq!(deviation(10.0, &exact).unwrap(), 0.0);
        assert_relative_eq!(deviation(11.0, &exact).unwrap(), 0.1, max_relative = 1e-12);
        // within slack clamps to zero
        assert_eq!(deviation(10.0 - 1e-9, &exact).unwrap(), 0.0);
        assert!(matches!(
            deviation(9.5, &exact),
            Err(Error::OracleViolation { .. })
        ));
    }

    #[test]
    fn performance_vector_examples() {
        // brute-force "solver": spans everything, zero error
        let rows: Vec<(usize, u64, f64)> = (0..5).map(|_| (4, FACTORIAL[4], 0.0)).collect();
        let v = performance_vector(&rows).unwrap();
        assert_eq!(v.span, 1.0);
        assert_eq!(v.error, 0.0);

        // single-query solver
        let v = performance_vector(&[(6, 1, 0.3)]).unwrap();
        assert_relative_eq!(v.span, 1.0 / FACTORIAL[6] as f64, max_relative = 1e-12);

        // the published n=10 scale: 57208 unique queries out of 10!
        let v = performance_vector(&[(10, 57_208, 0.00043)]).unwrap();
        assert!((v.span - 0.016).abs() < 5e-4);
        assert_relative_eq!(v.span, 57_208.0 / FACTORIAL[10] as f64, max_relative = 1e-12);

        assert!(matches!(
            performance_vector(&[(4, 1, 0.0), (5, 1, 0.0)]),
            Err(Error::MixedBatch { .. })
        ));
        assert!(performance_vector(&[]).is_err());
    }
}
