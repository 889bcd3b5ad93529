//! Set-function oracle abstraction with query and adaptive-round accounting.
//!
//! A [`SetFunction`] is a pure nonnegative set function over a dense ground
//! set `{0, .., n-1}`. Algorithms never call it directly; they go through an
//! [`Oracle`] (which supports restriction and shifting) and a [`QueryLedger`]
//! that meters total queries and adaptive rounds.
//!
//! Round accounting: [`evaluate_batch`] advances the round counter by exactly
//! one per batch. Bare [`evaluate`] calls accumulate into an implicit current
//! round, which is closed by [`QueryLedger::barrier`] (or by the next batch).

use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::Arc;

use crate::error::{Result, SubmaxError};

/// Ground set of `n` elements identified by `0..n-1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GroundSet {
    n: usize,
}

impl GroundSet {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(SubmaxError::InvalidInput("ground set must be nonempty".into()));
        }
        Ok(GroundSet { n })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn elements(&self) -> impl Iterator<Item = usize> {
        0..self.n
    }
}

/// A subset of a ground set of known size, with O(1) membership tests.
///
/// Keeps both a bitmask (for membership and equality) and a member list
/// (for iteration). Members are stored in insertion order.
#[derive(Clone, Debug)]
pub struct Subset {
    n: usize,
    mask: Vec<u64>,
    members: Vec<usize>,
}

impl Subset {
    pub fn empty(n: usize) -> Self {
        Subset { n, mask: vec![0; n.div_ceil(64)], members: Vec::new() }
    }

    pub fn full(n: usize) -> Self {
        let mut s = Subset::empty(n);
        for x in 0..n {
            s.insert(x);
        }
        s
    }

    pub fn from_elems<I: IntoIterator<Item = usize>>(n: usize, elems: I) -> Self {
        let mut s = Subset::empty(n);
        for x in elems {
            s.insert(x);
        }
        s
    }

    pub fn ground_size(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, x: usize) -> bool {
        x < self.n && self.mask[x / 64] >> (x % 64) & 1 == 1
    }

    /// Inserts `x`; returns false if already present. Panics if out of range.
    pub fn insert(&mut self, x: usize) -> bool {
        assert!(x < self.n, "element {} out of range for ground set of size {}", x, self.n);
        if self.contains(x) {
            return false;
        }
        self.mask[x / 64] |= 1 << (x % 64);
        self.members.push(x);
        true
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.members.iter().copied()
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn union(&self, other: &Subset) -> Subset {
        assert_eq!(self.n, other.n);
        let mut s = self.clone();
        for x in other.iter() {
            s.insert(x);
        }
        s
    }

    pub fn with(&self, x: usize) -> Subset {
        let mut s = self.clone();
        s.insert(x);
        s
    }

    /// Elements of the ground set not in `self`.
    pub fn complement(&self) -> Subset {
        Subset::from_elems(self.n, (0..self.n).filter(|&x| !self.contains(x)))
    }

    pub fn is_subset_of(&self, other: &Subset) -> bool {
        self.n == other.n
            && self.mask.iter().zip(other.mask.iter()).all(|(a, b)| a & !b == 0)
    }

    /// Bitmask key for memoization; only valid when the ground set fits a word.
    pub fn key_u64(&self) -> Option<u64> {
        if self.n <= 64 {
            Some(*self.mask.first().unwrap_or(&0))
        } else {
            None
        }
    }

    pub fn from_mask_u64(n: usize, mask: u64) -> Self {
        assert!(n <= 64);
        Subset::from_elems(n, (0..n).filter(|&x| mask >> x & 1 == 1))
    }

    /// Members in ascending order (for deterministic output).
    pub fn sorted_members(&self) -> Vec<usize> {
        let mut v = self.members.clone();
        v.sort_unstable();
        v
    }
}

impl PartialEq for Subset {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.mask == other.mask
    }
}

impl Eq for Subset {}

/// Counters for the paper's two efficiency metrics. Monotone nondecreasing;
/// shareable across threads.
#[derive(Debug, Default)]
pub struct QueryLedger {
    queries: AtomicU64,
    rounds: AtomicU64,
    pending: AtomicBool,
}

impl QueryLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn queries(&self) -> u64 {
        self.queries.load(Ordering::Relaxed)
    }

    pub fn rounds(&self) -> u64 {
        self.rounds.load(Ordering::Relaxed)
    }

    pub fn add_queries(&self, q: u64) {
        self.queries.fetch_add(q, Ordering::Relaxed);
    }

    pub fn add_rounds(&self, r: u64) {
        self.rounds.fetch_add(r, Ordering::Relaxed);
    }

    fn mark_pending(&self) {
        self.pending.store(true, Ordering::Relaxed);
    }

    /// Closes the implicit round formed by bare `evaluate` calls, if any.
    pub fn barrier(&self) {
        if self.pending.swap(false, Ordering::Relaxed) {
            self.rounds.fetch_add(1, Ordering::Relaxed);
        }
    }

    /// Merges child ledgers that ran as one logical parallel phase:
    /// queries add up, rounds advance by the maximum over the children.
    pub fn absorb_parallel<'a, I: IntoIterator<Item = &'a QueryLedger>>(&self, children: I) {
        let mut total = 0u64;
        let mut max_rounds = 0u64;
        for c in children {
            c.barrier();
            total += c.queries();
            max_rounds = max_rounds.max(c.rounds());
        }
        self.barrier();
        self.add_queries(total);
        self.add_rounds(max_rounds);
    }
}

/// An evaluable nonnegative set function over a dense ground set.
///
/// Implementations must be pure: the same subset always yields the same
/// value. Submodularity is assumed, not enforced; see [`check_submodular`].
pub trait SetFunction: Send + Sync {
    fn ground_size(&self) -> usize;
    fn value(&self, s: &Subset) -> f64;
}

/// A set-function oracle, composable by restriction and shifting.
///
/// `restrict` narrows the ground set to `R`; `shift` by `A` evaluates
/// `f(A ∪ ·)`. Both delegate to the same underlying function, so all
/// queries are counted against whatever ledger the caller supplies.
#[derive(Clone)]
pub struct Oracle {
    f: Arc<dyn SetFunction>,
    shift: Option<Subset>,
    allowed: Option<Subset>,
}

impl Oracle {
    pub fn new<F: SetFunction + 'static>(f: F) -> Self {
        Oracle { f: Arc::new(f), shift: None, allowed: None }
    }

    pub fn from_arc(f: Arc<dyn SetFunction>) -> Self {
        Oracle { f, shift: None, allowed: None }
    }

    /// Size of the underlying ground set (element ids stay stable under
    /// restriction).
    pub fn ground_size(&self) -> usize {
        self.f.ground_size()
    }

    /// Elements the oracle may be queried with, in ascending order.
    pub fn elements(&self) -> Vec<usize> {
        match &self.allowed {
            Some(a) => a.sorted_members(),
            None => (0..self.ground_size()).collect(),
        }
    }

    pub fn element_count(&self) -> usize {
        match &self.allowed {
            Some(a) => a.len(),
            None => self.ground_size(),
        }
    }

    pub fn is_allowed(&self, x: usize) -> bool {
        x < self.ground_size() && self.allowed.as_ref().is_none_or(|a| a.contains(x))
    }

    /// Oracle over subsets of `r` only; `g(S) = f(S)` for `S ⊆ r`.
    pub fn restrict(&self, r: &Subset) -> Oracle {
        let allowed = match &self.allowed {
            Some(a) => Subset::from_elems(r.ground_size(), r.iter().filter(|&x| a.contains(x))),
            None => r.clone(),
        };
        Oracle { f: self.f.clone(), shift: self.shift.clone(), allowed: Some(allowed) }
    }

    /// Oracle `g` with `g(S) = f(A ∪ S)`; ground set unchanged.
    pub fn shift(&self, a: &Subset) -> Oracle {
        let shift = match &self.shift {
            Some(s) => s.union(a),
            None => a.clone(),
        };
        Oracle { f: self.f.clone(), shift: Some(shift), allowed: self.allowed.clone() }
    }

    fn check(&self, s: &Subset) -> Result<()> {
        if s.ground_size() != self.ground_size() {
            return Err(SubmaxError::InvalidInput(format!(
                "subset over ground set of size {} queried against oracle of size {}",
                s.ground_size(),
                self.ground_size()
            )));
        }
        if let Some(a) = &self.allowed {
            if let Some(x) = s.iter().find(|&x| !a.contains(x)) {
                return Err(SubmaxError::OutsideRestriction(x));
            }
        }
        Ok(())
    }

    /// Raw evaluation without ledger accounting. Callers that use this
    /// (memoizing samplers) account queries explicitly.
    pub(crate) fn eval_uncounted(&self, s: &Subset) -> Result<f64> {
        self.check(s)?;
        let v = match &self.shift {
            Some(a) => self.f.value(&a.union(s)),
            None => self.f.value(s),
        };
        Ok(v)
    }
}

/// Evaluates `f(S)`, counting one query toward the implicit current round.
pub fn evaluate(oracle: &Oracle, s: &Subset, ledger: &QueryLedger) -> Result<f64> {
    let v = oracle.eval_uncounted(s)?;
    ledger.add_queries(1);
    ledger.mark_pending();
    Ok(v)
}

/// Evaluates every set of a batch, advancing the round counter by exactly one
/// (an empty batch is a no-op). Values match sequential `evaluate` calls.
pub fn evaluate_batch(oracle: &Oracle, sets: &[Subset], ledger: &QueryLedger) -> Result<Vec<f64>> {
    if sets.is_empty() {
        return Ok(Vec::new());
    }
    let mut out = Vec::with_capacity(sets.len());
    for s in sets {
        out.push(oracle.eval_uncounted(s)?);
    }
    ledger.barrier();
    ledger.add_queries(sets.len() as u64);
    ledger.add_rounds(1);
    Ok(out)
}

/// Marginal gain `f(S ∪ {x}) − f(S)`; consumes 2 queries.
pub fn marginal_gain(oracle: &Oracle, s: &Subset, x: usize, ledger: &QueryLedger) -> Result<f64> {
    let with_x = evaluate(oracle, &s.with(x), ledger)?;
    let base = evaluate(oracle, s, ledger)?;
    Ok(with_x - base)
}

/// Marginal gain when the caller already holds `f(S)`; consumes 1 query.
pub fn marginal_gain_cached(
    oracle: &Oracle,
    s: &Subset,
    s_value: f64,
    x: usize,
    ledger: &QueryLedger,
) -> Result<f64> {
    Ok(evaluate(oracle, &s.with(x), ledger)? - s_value)
}

/// A subset paired with its cached objective value.
#[derive(Clone, Debug)]
pub struct CandidateSet {
    pub members: Subset,
    pub value: f64,
}

impl CandidateSet {
    /// Builds the candidate with a fresh oracle evaluation (1 query).
    pub fn evaluated(oracle: &Oracle, members: Subset, ledger: &QueryLedger) -> Result<Self> {
        let value = evaluate(oracle, &members, ledger)?;
        Ok(CandidateSet { members, value })
    }
}

/// Exhaustively checks the diminishing-returns property on small ground sets
/// (`n ≤ 20` or so; cost is `4^n`-ish). Test helper.
pub fn check_submodular(f: &dyn SetFunction) -> bool {
    let n = f.ground_size();
    assert!(n <= 20, "submodularity check is exhaustive; keep n small");
    let mut vals = vec![0.0; 1usize << n];
    for (m, v) in vals.iter_mut().enumerate() {
        *v = f.value(&Subset::from_mask_u64(n, m as u64));
    }
    for a in 0u64..(1 << n) {
        // enumerate supersets b of a
        let rest = !a & ((1u64 << n) - 1);
        let mut b = rest;
        loop {
            let sup = a | b;
            if sup != a {
                for x in 0..n {
                    let bit = 1u64 << x;
                    if sup & bit == 0 {
                        let ga = vals[(a | bit) as usize] - vals[a as usize];
                        let gb = vals[(sup | bit) as usize] - vals[sup as usize];
                        if ga < gb - 1e-9 {
                            return false;
                        }
                    }
                }
            }
            if b == 0 {
                break;
            }
            b = (b - 1) & rest;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::{MaxCut, Modular};
    use crate::graph::Graph;

    fn triangle() -> Graph {
        Graph::new(3, vec![(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)]).unwrap()
    }

    #[test]
    fn evaluate_counts_queries() {
        let oracle = Oracle::new(MaxCut::new(triangle()));
        let ledger = QueryLedger::new();
        let n = 3;
        assert_eq!(evaluate(&oracle, &Subset::empty(n), &ledger).unwrap(), 0.0);
        assert_eq!(evaluate(&oracle, &Subset::from_elems(n, [0]), &ledger).unwrap(), 2.0);
        // determinism: same set, same value, queries advance
        let a = evaluate(&oracle, &Subset::from_elems(n, [0]), &ledger).unwrap();
        let b = evaluate(&oracle, &Subset::from_elems(n, [0]), &ledger).unwrap();
        assert_eq!(a, b);
        assert_eq!(ledger.queries(), 4);
    }

    #[test]
    fn out_of_range_subset_rejected() {
        let oracle = Oracle::new(MaxCut::new(triangle()));
        let ledger = QueryLedger::new();
        let bad = Subset::from_elems(5, [4]);
        assert!(evaluate(&oracle, &bad, &ledger).is_err());
    }

    #[test]
    fn batch_is_one_round() {
        let oracle = Oracle::new(Modular::unit(5));
        let ledger = QueryLedger::new();
        let sets: Vec<Subset> = vec![
            Subset::empty(5),
            Subset::from_elems(5, [0]),
            Subset::from_elems(5, [0, 1]),
            Subset::from_elems(5, [2]),
            Subset::from_elems(5, [3, 4]),
        ];
        let vals = evaluate_batch(&oracle, &sets, &ledger).unwrap();
        assert_eq!(vals, vec![0.0, 1.0, 2.0, 1.0, 2.0]);
        assert_eq!(ledger.queries(), 5);
        assert_eq!(ledger.rounds(), 1);
        // two singleton batches: two rounds
        evaluate_batch(&oracle, &sets[..1], &ledger).unwrap();
        evaluate_batch(&oracle, &sets[..1], &ledger).unwrap();
        assert_eq!(ledger.rounds(), 3);
        // empty batch: no-op
        evaluate_batch(&oracle, &[], &ledger).unwrap();
        assert_eq!(ledger.rounds(), 3);
        assert_eq!(ledger.queries(), 7);
    }

    #[test]
    fn marginal_gain_examples() {
        let n = 3;
        let oracle = Oracle::new(Modular::new(vec![1.0, 2.0, 3.0]));
        let ledger = QueryLedger::new();
        let s = Subset::from_elems(n, [0]);
        assert_eq!(marginal_gain(&oracle, &s, 2, &ledger).unwrap(), 3.0);
        // x already in S
        assert_eq!(marginal_gain(&oracle, &s, 0, &ledger).unwrap(), 0.0);
        // path 0-1-2, S={1}, x=0: f({0,1}) - f({1}) = 1 - 2 = -1
        let path = Graph::new(3, vec![(0, 1, 1.0), (1, 2, 1.0)]).unwrap();
        let cut = Oracle::new(MaxCut::new(path));
        let g = marginal_gain(&cut, &Subset::from_elems(3, [1]), 0, &ledger).unwrap();
        assert_eq!(g, -1.0);
    }

    #[test]
    fn restrict_and_shift_examples() {
        let oracle = Oracle::new(MaxCut::new(triangle()));
        let ledger = QueryLedger::new();
        let r = Subset::from_elems(3, [0, 1]);
        let restricted = oracle.restrict(&r);
        assert_eq!(
            evaluate(&restricted, &Subset::from_elems(3, [0]), &ledger).unwrap(),
            2.0
        );
        assert_eq!(evaluate(&restricted, &Subset::empty(3), &ledger).unwrap(), 0.0);
        // element outside R rejected
        assert!(evaluate(&restricted, &Subset::from_elems(3, [2]), &ledger).is_err());
        // restrict to full ground: behaviorally identical
        let full = oracle.restrict(&Subset::full(3));
        let s = Subset::from_elems(3, [1]);
        assert_eq!(
            evaluate(&full, &s, &ledger).unwrap(),
            evaluate(&oracle, &s, &ledger).unwrap()
        );

        // shift by {0}: g({1}) = f({0,1}) = 2; g(∅) = f({0}) = 2
        let shifted = oracle.shift(&Subset::from_elems(3, [0]));
        assert_eq!(evaluate(&shifted, &Subset::from_elems(3, [1]), &ledger).unwrap(), 2.0);
        assert_eq!(evaluate(&shifted, &Subset::empty(3), &ledger).unwrap(), 2.0);
        // shift by ∅: identical
        let id = oracle.shift(&Subset::empty(3));
        assert_eq!(
            evaluate(&id, &s, &ledger).unwrap(),
            evaluate(&oracle, &s, &ledger).unwrap()
        );
    }

    #[test]
    fn composition_soundness_exhaustive() {
        // restrict(shift(f, A), R)(S) = f(A ∪ S) for all S ⊆ R, small n
        let n = 6;
        let g = Graph::new(
            n,
            vec![(0, 1, 0.5), (1, 2, 1.5), (2, 3, 1.0), (3, 4, 2.0), (4, 5, 0.25), (0, 5, 1.0)],
        )
        .unwrap();
        let f = MaxCut::new(g);
        let oracle = Oracle::new(MaxCut::new(f.graph().clone()));
        let ledger = QueryLedger::new();
        for a_mask in 0u64..(1 << n) {
            let a = Subset::from_mask_u64(n, a_mask);
            let r = a.complement();
            let composed = oracle.shift(&a).restrict(&r);
            for s_mask in [0u64, 1, 3, a_mask ^ ((1 << n) - 1)] {
                let s_mask = s_mask & !a_mask & ((1 << n) - 1);
                let s = Subset::from_mask_u64(n, s_mask);
                let lhs = evaluate(&composed, &s, &ledger).unwrap();
                let rhs = f.value(&a.union(&s));
                assert!((lhs - rhs).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn ledger_barrier_closes_implicit_round() {
        let oracle = Oracle::new(Modular::unit(4));
        let ledger = QueryLedger::new();
        evaluate(&oracle, &Subset::empty(4), &ledger).unwrap();
        evaluate(&oracle, &Subset::empty(4), &ledger).unwrap();
        assert_eq!(ledger.rounds(), 0);
        ledger.barrier();
        assert_eq!(ledger.rounds(), 1);
        ledger.barrier();
        assert_eq!(ledger.rounds(), 1);
        assert!(ledger.rounds() <= ledger.queries());
    }

    #[test]
    fn absorb_parallel_takes_max_rounds() {
        let parent = QueryLedger::new();
        let a = QueryLedger::new();
        let b = QueryLedger::new();
        a.add_queries(10);
        a.add_rounds(3);
        b.add_queries(7);
        b.add_rounds(5);
        parent.absorb_parallel([&a, &b]);
        assert_eq!(parent.queries(), 17);
        assert_eq!(parent.rounds(), 5);
    }

    #[test]
    fn shipped_objectives_are_submodular() {
        let f = MaxCut::new(triangle());
        assert!(check_submodular(&f));
    }
}
