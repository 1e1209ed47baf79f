//! Permutations of `{1..n}` and the adjacent-transposition neighborhood all
//! solvers move through.
//!
//! Adjacent transpositions generate the full symmetric group, so the move
//! graph (one vertex per permutation, one edge per swap of two consecutive
//! symbols) is connected and `n-1`-regular; that graph is the landscape the
//! Monte Carlo solvers diffuse over.

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::rng::RandomStream;

/// An ordering of the symbols `1..=n`. Immutable through the public API;
/// solvers in this crate mutate their own copies in place via
/// [`swap_adjacent`](Permutation::swap_adjacent).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Permutation {
    symbols: Vec<u32>,
}

/// Swap of the entries at positions `k` and `k+1` (0-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AdjacentMove {
    position: usize,
}

impl AdjacentMove {
    pub fn new(position: usize) -> Self {
        Self { position }
    }

    pub fn position(&self) -> usize {
        self.position
    }
}

/// True iff `candidate` lists every integer `1..=len` exactly once.
/// The empty sequence is rejected: there is no zero-symbol state.
pub fn is_valid(candidate: &[u32]) -> bool {
    let n = candidate.len();
    if n == 0 {
        return false;
    }
    let mut seen = vec![false; n];
    for &s in candidate {
        if s < 1 || s as usize > n || seen[s as usize - 1] {
            return false;
        }
        seen[s as usize - 1] = true;
    }
    true
}

/// Uniform random permutation of `1..=n` by Durstenfeld's in-place
/// Fisher-Yates walk; consumes exactly `n-1` index draws.
pub fn random_permutation(n: usize, rng: &mut RandomStream) -> Result<Permutation> {
    if n == 0 {
        return Err(Error::InvalidSize);
    }
    let mut symbols: Vec<u32> = (1..=n as u32).collect();
    for i in (1..n).rev() {
        let j = rng.index(i + 1);
        symbols.swap(i, j);
    }
    Ok(Permutation { symbols })
}

/// `p` with the entries at `m.position` and `m.position + 1` exchanged.
pub fn apply_move(p: &Permutation, m: AdjacentMove) -> Result<Permutation> {
    let mut out = p.clone();
    out.try_swap_adjacent(m)?;
    Ok(out)
}

impl Permutation {
    pub fn identity(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidSize);
        }
        Ok(Self {
            symbols: (1..=n as u32).collect(),
        })
    }

    pub fn from_symbols(symbols: Vec<u32>) -> Result<Self> {
        if !is_valid(&symbols) {
            return Err(Error::InvalidPermutation {
                expected: symbols.len(),
            });
        }
        Ok(Self { symbols })
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        false // a constructed permutation always has n >= 1
    }

    pub fn symbols(&self) -> &[u32] {
        &self.symbols
    }

    /// Stop visited at 1-based route position `k`.
    pub fn stop_at(&self, k: usize) -> u32 {
        self.symbols[k - 1]
    }

    /// All `n-1` adjacent-transposition neighbors in ascending position
    /// order. Lazy; empty for n = 1.
    pub fn neighborhood(&self) -> impl Iterator<Item = Permutation> + '_ {
        (0..self.len().saturating_sub(1)).map(move |k| {
            let mut q = self.clone();
            q.swap_adjacent(AdjacentMove::new(k));
            q
        })
    }

    pub(crate) fn try_swap_adjacent(&mut self, m: AdjacentMove) -> Result<()> {
        if m.position + 1 >= self.symbols.len() {
            return Err(Error::MoveOutOfBounds {
                position: m.position,
                len: self.symbols.len(),
            });
        }
        self.symbols.swap(m.position, m.position + 1);
        Ok(())
    }

    /// In-place adjacent swap for solver hot loops. Applying the same move
    /// twice restores the original ordering.
    pub(crate) fn swap_adjacent(&mut self, m: AdjacentMove) {
        self.symbols.swap(m.position, m.position + 1);
    }
}

impl Serialize for Permutation {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.symbols.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Permutation {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let symbols = Vec::<u32>::deserialize(deserializer)?;
        Permutation::from_symbols(symbols)
            .map_err(|e| D::Error::custom(format!("invalid permutation: {e}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::{HashSet, VecDeque};

    fn perm(v: &[u32]) -> Permutation {
        Permutation::from_symbols(v.to_vec()).unwrap()
    }

    #[test]
    fn random_permutation_n1_is_singleton() {
        let mut rng = RandomStream::new(0);
        assert_eq!(random_permutation(1, &mut rng).unwrap().symbols(), &[1]);
    }

    #[test]
    fn random_permutation_rejects_n0() {
        let mut rng = RandomStream::new(0);
        assert!(matches!(
            random_permutation(0, &mut rng),
            Err(Error::InvalidSize)
        ));
    }

    #[test]
    fn random_permutation_same_seed_same_output() {
        for seed in [0u64, 1, 99] {
            let a = random_permutation(3, &mut RandomStream::new(seed)).unwrap();
            let b = random_permutation(3, &mut RandomStream::new(seed)).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn random_permutation_consumes_n_minus_1_decisions() {
        for n in [1usize, 2, 5, 12] {
            let mut rng = RandomStream::new(11);
            random_permutation(n, &mut rng).unwrap();
            assert_eq!(rng.decisions(), (n - 1) as u64);
        }
    }

    // Chi-squared goodness of fit against the exact uniform distribution on
    // S_n, with 1000 * n! samples and the 99% critical value for n!-1 dof.
    fn chi2_uniformity(n: usize, critical: f64, seed: u64) {
        let categories: usize = (1..=n).product();
        let samples = 1000 * categories;
        let mut counts = vec![0u64; categories];
        let mut rng = RandomStream::new(seed);
        for _ in 0..samples {
            let p = random_permutation(n, &mut rng).unwrap();
            counts[lex_rank(p.symbols())] += 1;
        }
        let expected = samples as f64 / categories as f64;
        let chi2: f64 = counts
            .iter()
            .map(|&c| {
                let d = c as f64 - expected;
                d * d / expected
            })
            .sum();
        assert!(
            chi2 < critical,
            "chi2 = {chi2} over {categories} categories exceeds {critical}"
        );
    }

    // Lexicographic rank of a permutation of 1..=n (factorial number system).
    fn lex_rank(symbols: &[u32]) -> usize {
        let n = symbols.len();
        let mut rank = 0usize;
        for i in 0..n {
            let smaller_later = symbols[i + 1..].iter().filter(|&&s| s < symbols[i]).count();
            rank = rank * (n - i) + smaller_later;
        }
        rank
    }

    #[test]
    fn uniformity_chi2_n3() {
        chi2_uniformity(3, 15.086_272_469_388_99, 2024);
    }

    #[test]
    fn uniformity_chi2_n4() {
        chi2_uniformity(4, 41.638_398_118_858_476, 2024);
    }

    #[test]
    fn uniformity_chi2_n5() {
        chi2_uniformity(5, 157.799_541_160_161_74, 2024);
    }

    #[test]
    fn apply_move_examples() {
        assert_eq!(
            apply_move(&perm(&[1, 2, 3, 4]), AdjacentMove::new(1))
                .unwrap()
                .symbols(),
            &[1, 3, 2, 4]
        );
        assert_eq!(
            apply_move(&perm(&[2, 1]), AdjacentMove::new(0))
                .unwrap()
                .symbols(),
            &[1, 2]
        );
    }

    #[test]
    fn apply_move_out_of_range() {
        assert!(matches!(
            apply_move(&perm(&[1, 2, 3]), AdjacentMove::new(2)),
            Err(Error::MoveOutOfBounds { position: 2, len: 3 })
        ));
    }

    #[test]
    fn neighborhood_s3() {
        let got: Vec<_> = perm(&[1, 2, 3]).neighborhood().collect();
        assert_eq!(got, vec![perm(&[2, 1, 3]), perm(&[1, 3, 2])]);
    }

    #[test]
    fn neighborhood_sizes() {
        let p = random_permutation(10, &mut RandomStream::new(1)).unwrap();
        assert_eq!(p.neighborhood().count(), 9);
        assert_eq!(perm(&[1]).neighborhood().count(), 0);
    }

    // Exhaustive BFS over the move graph: connected, n!-sized and
    // (n-1)-regular with no duplicate neighbors.
    fn traverse_move_graph(n: usize) {
        let factorial: usize = (1..=n).product();
        let start = Permutation::identity(n).unwrap();
        let mut seen = HashSet::new();
        let mut queue = VecDeque::new();
        seen.insert(start.clone());
        queue.push_back(start);
        while let Some(p) = queue.pop_front() {
            let neighbors: Vec<_> = p.neighborhood().collect();
            assert_eq!(neighbors.len(), n - 1);
            let distinct: HashSet<_> = neighbors.iter().collect();
            assert_eq!(distinct.len(), n - 1, "duplicate neighbor at {p:?}");
            for q in neighbors {
                if seen.insert(q.clone()) {
                    queue.push_back(q);
                }
            }
        }
        assert_eq!(seen.len(), factorial);
    }

    #[test]
    fn move_graph_connected_and_regular_s4_s5_s6() {
        traverse_move_graph(4);
        traverse_move_graph(5);
        traverse_move_graph(6);
    }

    #[test]
    fn is_valid_examples() {
        assert!(is_valid(&[3, 1, 2]));
        assert!(!is_valid(&[1, 1, 3]));
        assert!(!is_valid(&[]));
        assert!(!is_valid(&[2, 3, 4]));
        assert!(!is_valid(&[0, 1]));
    }

    #[test]
    fn deserialization_guards_validity() {
        assert!(serde_json::from_str::<Permutation>("[2,3,1]").is_ok());
        assert!(serde_json::from_str::<Permutation>("[1,1,3]").is_err());
        assert!(serde_json::from_str::<Permutation>("[]").is_err());
    }

    proptest! {
        #[test]
        fn random_permutation_is_valid(n in 1usize..30, seed in any::<u64>()) {
            let p = random_permutation(n, &mut RandomStream::new(seed)).unwrap();
            prop_assert!(is_valid(p.symbols()));
        }

        #[test]
        fn move_is_involution(n in 2usize..15, seed in any::<u64>(), kraw in any::<usize>()) {
            let p = random_permutation(n, &mut RandomStream::new(seed)).unwrap();
            let m = AdjacentMove::new(kraw % (n - 1));
            let q = apply_move(&apply_move(&p, m).unwrap(), m).unwrap();
            prop_assert_eq!(p, q);
        }
    }
}
