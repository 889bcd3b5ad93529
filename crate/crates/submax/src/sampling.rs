//! Low-adaptivity batch selection: the ReducedMean test and the threshold
//! sampling routine both constrained maximizers are built on.
//!
//! ThresholdSample repeatedly filters the surviving candidates by marginal
//! gain against a threshold, probes geometrically spaced batch sizes with
//! ReducedMean to find the largest batch whose random members still clear
//! the threshold on average, and adds a uniform random batch of that size.

use std::collections::{BTreeSet, HashMap};

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Result, SubmaxError};
use crate::oracle::{evaluate, evaluate_batch, CandidateSet, Oracle, QueryLedger, Subset};

/// Parameters for one `threshold_sample` call.
///
/// In `heuristic_mode` the input `eps`/`delta` are used directly instead of
/// the derived smaller internal values, and ReducedMean sample counts are
/// capped at `probe_sample_cap` (the guarantees no longer apply).
#[derive(Clone, Debug)]
pub struct ThresholdParams {
    pub k: usize,
    pub tau: f64,
    pub eps: f64,
    pub delta: f64,
    pub heuristic_mode: bool,
    pub probe_sample_cap: Option<usize>,
}

impl ThresholdParams {
    pub fn new(k: usize, tau: f64, eps: f64, delta: f64) -> Result<Self> {
        if !(0.0 < eps && eps < 1.0) || !(0.0 < delta && delta < 1.0) {
            return Err(SubmaxError::InvalidInput("eps and delta must lie in (0,1)".into()));
        }
        if tau < 0.0 || !tau.is_finite() {
            return Err(SubmaxError::InvalidInput("tau must be nonnegative".into()));
        }
        Ok(ThresholdParams { k, tau, eps, delta, heuristic_mode: false, probe_sample_cap: None })
    }

    pub fn heuristic(mut self, cap: usize) -> Self {
        self.heuristic_mode = true;
        self.probe_sample_cap = Some(cap);
        self
    }
}

/// One-shot Bernoulli source whose draws are issued in batches; each batch
/// of draws is one adaptive round for whatever ledger the sampler carries.
pub trait BernoulliSampler {
    fn draw_batch(&mut self, m: usize, rng: &mut dyn RngCore) -> Result<Vec<bool>>;
}

/// The Monte-Carlo mean test: draws `m = 16⌈log(2/δ)/ε²⌉` samples in one
/// batch and reports whether the sample mean fell to `1 − 1.5ε` or below.
pub fn reduced_mean<S: BernoulliSampler>(
    sampler: &mut S,
    eps: f64,
    delta: f64,
    sample_cap: Option<usize>,
    rng: &mut dyn RngCore,
) -> Result<bool> {
    if !(0.0 < eps && eps < 1.0) || !(0.0 < delta && delta < 1.0) {
        return Err(SubmaxError::InvalidInput("eps and delta must lie in (0,1)".into()));
    }
    let mut m = 16 * ((2.0 / delta).ln() / (eps * eps)).ceil() as usize;
    if let Some(cap) = sample_cap {
        m = m.min(cap.max(1));
    }
    let draws = sampler.draw_batch(m, rng)?;
    let mean = draws.iter().filter(|&&b| b).count() as f64 / m as f64;
    Ok(mean <= 1.0 - 1.5 * eps)
}

/// Sampler for the distribution over the indicator
/// `I_t = 1[f(S ∪ T ∪ {x}) − f(S ∪ T) ≥ τ]` with `T` uniform among
/// size-(t−1) subsets of the surviving candidates and `x` uniform outside `T`.
///
/// Each draw is accounted as 2 oracle queries; a batch of draws is one
/// adaptive round. Repeated subsets within a batch are evaluated once (the
/// oracle is pure) but still counted.
pub struct DtSampler<'a> {
    oracle: &'a Oracle,
    current: &'a Subset,
    candidates: &'a [usize],
    t: usize,
    tau: f64,
    ledger: &'a QueryLedger,
    memo: Option<&'a mut MemoTable>,
}

/// Evaluation cache keyed by subset bitmask: a flat table for tiny ground
/// sets, a hash map otherwise. Only usable when the ground set fits a word.
pub enum MemoTable {
    Dense(Vec<f64>),
    Sparse(HashMap<u64, f64>),
}

impl MemoTable {
    /// Dense for tiny ground sets (table of 2^n entries), sparse otherwise.
    pub fn for_ground(n: usize) -> Option<MemoTable> {
        if n <= 20 {
            Some(MemoTable::Dense(vec![f64::NAN; 1 << n]))
        } else if n <= 64 {
            Some(MemoTable::Sparse(HashMap::new()))
        } else {
            None
        }
    }

    fn get(&self, key: u64) -> Option<f64> {
        match self {
            MemoTable::Dense(t) => {
                let v = t[key as usize];
                if v.is_nan() {
                    None
                } else {
                    Some(v)
                }
            }
            MemoTable::Sparse(m) => m.get(&key).copied(),
        }
    }

    fn put(&mut self, key: u64, v: f64) {
        match self {
            MemoTable::Dense(t) => t[key as usize] = v,
            MemoTable::Sparse(m) => {
                m.insert(key, v);
            }
        }
    }
}

impl<'a> DtSampler<'a> {
    pub fn new(
        oracle: &'a Oracle,
        current: &'a Subset,
        candidates: &'a [usize],
        t: usize,
        tau: f64,
        ledger: &'a QueryLedger,
    ) -> Result<Self> {
        if t < 1 || t > candidates.len() {
            return Err(SubmaxError::InvalidInput(format!(
                "batch size t={t} outside 1..={}",
                candidates.len()
            )));
        }
        Ok(DtSampler { oracle, current, candidates, t, tau, ledger, memo: None })
    }

    pub fn with_memo(mut self, memo: &'a mut MemoTable) -> Self {
        self.memo = Some(memo);
        self
    }

    fn eval_key(&mut self, key: u64) -> Result<f64> {
        let memo = self.memo.as_deref_mut().expect("keyed eval requires a memo");
        if let Some(v) = memo.get(key) {
            return Ok(v);
        }
        let s = Subset::from_mask_u64(self.oracle.ground_size(), key);
        let v = self.oracle.eval_uncounted(&s)?;
        memo.put(key, v);
        Ok(v)
    }
}

impl BernoulliSampler for DtSampler<'_> {
    fn draw_batch(&mut self, m: usize, rng: &mut dyn RngCore) -> Result<Vec<bool>> {
        let mut buf = self.candidates.to_vec();
        let mut out = Vec::with_capacity(m);
        let keyed = self.memo.is_some() && self.current.key_u64().is_some();
        let s_key = self.current.key_u64().unwrap_or(0);
        for _ in 0..m {
            // partial Fisher-Yates: first t-1 entries become T, then x
            // is drawn uniformly from the remainder
            for i in 0..self.t - 1 {
                let j = i + (rng.next_u64() % (buf.len() - i) as u64) as usize;
                buf.swap(i, j);
            }
            let xi =
                self.t - 1 + (rng.next_u64() % (buf.len() - (self.t - 1)) as u64) as usize;
            let x = buf[xi];
            let gain = if keyed {
                let mut key = s_key;
                for &e in &buf[..self.t - 1] {
                    key |= 1 << e;
                }
                self.eval_key(key | 1 << x)? - self.eval_key(key)?
            } else {
                let mut with_t = self.current.clone();
                for &e in &buf[..self.t - 1] {
                    with_t.insert(e);
                }
                let base = self.oracle.eval_uncounted(&with_t)?;
                with_t.insert(x);
                self.oracle.eval_uncounted(&with_t)? - base
            };
            out.push(gain >= self.tau);
        }
        self.ledger.barrier();
        self.ledger.add_queries(2 * m as u64);
        self.ledger.add_rounds(1);
        Ok(out)
    }
}

/// One draw from the indicator distribution above (2 queries, serial).
pub fn sample_dt(
    oracle: &Oracle,
    current: &Subset,
    candidates: &[usize],
    t: usize,
    tau: f64,
    rng: &mut dyn RngCore,
    ledger: &QueryLedger,
) -> Result<bool> {
    if t < 1 || t > candidates.len() {
        return Err(SubmaxError::InvalidInput(format!(
            "batch size t={t} outside 1..={}",
            candidates.len()
        )));
    }
    let mut buf = candidates.to_vec();
    for i in 0..t - 1 {
        let j = i + (rng.next_u64() % (buf.len() - i) as u64) as usize;
        buf.swap(i, j);
    }
    let xi = t - 1 + (rng.next_u64() % (buf.len() - (t - 1)) as u64) as usize;
    let x = buf[xi];
    let mut with_t = current.clone();
    for &e in &buf[..t - 1] {
        with_t.insert(e);
    }
    let base = evaluate(oracle, &with_t, ledger)?;
    let with_x = evaluate(oracle, &with_t.with(x), ledger)?;
    Ok(with_x - base >= tau)
}

fn uniform_subset(pool: &[usize], take: usize, rng: &mut dyn RngCore) -> Vec<usize> {
    debug_assert!(take <= pool.len());
    let mut buf = pool.to_vec();
    for i in 0..take {
        let j = i + (rng.next_u64() % (buf.len() - i) as u64) as usize;
        buf.swap(i, j);
    }
    buf.truncate(take);
    buf
}

/// Threshold sampling: returns `S` with `|S| ≤ k` such that (w.h.p.) added
/// elements average marginal gain at least `(1−ε)τ`, and if `|S| < k` every
/// remaining marginal is below `τ`. Low adaptivity: each filter is one
/// round and each sweep of size probes is metered as one collective round.
pub fn threshold_sample(
    oracle: &Oracle,
    params: &ThresholdParams,
    rng: &mut ChaCha8Rng,
    ledger: &QueryLedger,
) -> Result<CandidateSet> {
    let n = oracle.element_count();
    if n == 0 {
        return Err(SubmaxError::InvalidInput("oracle ground set is empty".into()));
    }
    let mut s = Subset::empty(oracle.ground_size());
    if params.k == 0 {
        return CandidateSet::evaluated(oracle, s, ledger);
    }
    let eps_hat = if params.heuristic_mode { params.eps } else { params.eps / 3.0 };
    let rounds = ((2.0 * n as f64 / params.delta).ln() / -(1.0 - eps_hat).ln()).ceil() as usize;
    let rounds = rounds.max(1);
    let probes = ((params.k as f64).ln() / eps_hat).ceil() as usize;
    let delta_hat = if params.heuristic_mode {
        params.delta
    } else {
        params.delta / (2.0 * rounds as f64 * (probes + 1) as f64)
    };
    let mut surviving = oracle.elements();

    for _ in 0..rounds {
        // filter: one batch holding S itself plus S + x for every candidate
        let mut batch = Vec::with_capacity(surviving.len() + 1);
        batch.push(s.clone());
        for &x in &surviving {
            batch.push(s.with(x));
        }
        let vals = evaluate_batch(oracle, &batch, ledger)?;
        let s_val = vals[0];
        surviving = surviving
            .iter()
            .zip(&vals[1..])
            .filter(|&(_, &v)| v - s_val >= params.tau)
            .map(|(&x, _)| x)
            .collect();
        if surviving.is_empty() {
            break;
        }

        // probe geometrically spaced batch sizes (collectively one round)
        let mut sizes = BTreeSet::new();
        for i in 0..=probes {
            sizes.insert(((1.0 + eps_hat).powi(i as i32).floor() as usize).min(surviving.len()));
        }
        let mut memo = MemoTable::for_ground(oracle.ground_size());
        let mut first_true: Option<usize> = None;
        let mut largest = 1usize;
        let mut children = Vec::new();
        for &t in &sizes {
            largest = t;
            let child = QueryLedger::new();
            let mut probe_rng = ChaCha8Rng::seed_from_u64(rng.random::<u64>());
            let accept = {
                let mut sampler = DtSampler::new(oracle, &s, &surviving, t, params.tau, &child)?;
                if let Some(memo) = memo.as_mut() {
                    sampler = sampler.with_memo(memo);
                }
                reduced_mean(
                    &mut sampler,
                    eps_hat,
                    delta_hat,
                    if params.heuristic_mode { params.probe_sample_cap } else { None },
                    &mut probe_rng,
                )?
            };
            children.push(child);
            if accept && first_true.is_none() {
                first_true = Some(t);
            }
        }
        ledger.absorb_parallel(children.iter());
        // if no probe accepted, even the largest batch keeps per-element
        // gains at the threshold; take it
        let t_star = first_true.unwrap_or(largest);

        let take = t_star.min(params.k - s.len());
        for x in uniform_subset(&surviving, take, rng) {
            s.insert(x);
        }
        if s.len() == params.k {
            break;
        }
    }
    let out = CandidateSet::evaluated(oracle, s, ledger)?;
    ledger.barrier();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::{Coverage, Modular};

    struct ConstSampler(bool);
    impl BernoulliSampler for ConstSampler {
        fn draw_batch(&mut self, m: usize, _rng: &mut dyn RngCore) -> Result<Vec<bool>> {
            Ok(vec![self.0; m])
        }
    }

    struct BernoulliP(f64);
    impl BernoulliSampler for BernoulliP {
        fn draw_batch(&mut self, m: usize, rng: &mut dyn RngCore) -> Result<Vec<bool>> {
            Ok((0..m).map(|_| (rng.next_u64() as f64 / u64::MAX as f64) < self.0).collect())
        }
    }

    #[test]
    fn reduced_mean_degenerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(!reduced_mean(&mut ConstSampler(true), 0.2, 0.1, None, &mut rng).unwrap());
        assert!(reduced_mean(&mut ConstSampler(false), 0.2, 0.1, None, &mut rng).unwrap());
    }

    #[test]
    fn reduced_mean_chernoff_guarantee() {
        // p = 1 - 3eps is well below the 1 - 1.5eps cutoff: should accept
        // with frequency >= 1 - delta
        let eps = 0.2;
        let delta = 0.1;
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let trials = 500;
        let mut accepted = 0;
        for _ in 0..trials {
            if reduced_mean(&mut BernoulliP(1.0 - 3.0 * eps), eps, delta, None, &mut rng).unwrap()
            {
                accepted += 1;
            }
        }
        assert!(
            accepted as f64 >= (1.0 - delta) * trials as f64,
            "accepted {accepted}/{trials}"
        );
    }

    #[test]
    fn sample_dt_filtered_candidates_always_pass_at_t1() {
        // after filtering, every singleton marginal clears tau, so t=1 draws
        // are always 1
        let oracle = Oracle::new(Modular::new(vec![2.0, 3.0, 5.0]));
        let ledger = QueryLedger::new();
        let s = Subset::empty(3);
        let cands = vec![0, 1, 2];
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            assert!(sample_dt(&oracle, &s, &cands, 1, 2.0, &mut rng, &ledger).unwrap());
            // modular marginals are constant, so any t passes too
            assert!(sample_dt(&oracle, &s, &cands, 3, 2.0, &mut rng, &ledger).unwrap());
        }
        assert!(sample_dt(&oracle, &s, &cands, 4, 2.0, &mut rng, &ledger).is_err());
    }

    #[test]
    fn sample_dt_zero_joint_gain() {
        // two elements covering the same universe item: at t=2 the second
        // element never adds anything
        let oracle = Oracle::new(Coverage::new(1, vec![vec![0], vec![0]]));
        let ledger = QueryLedger::new();
        let s = Subset::empty(2);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            assert!(!sample_dt(&oracle, &s, &[0, 1], 2, 0.5, &mut rng, &ledger).unwrap());
        }
    }

    #[test]
    fn threshold_sample_tau_above_max_gain_returns_empty() {
        let oracle = Oracle::new(Modular::new(vec![1.0, 2.0, 3.0]));
        let ledger = QueryLedger::new();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let params = ThresholdParams::new(2, 100.0, 0.2, 0.2).unwrap();
        let out = threshold_sample(&oracle, &params, &mut rng, &ledger).unwrap();
        assert!(out.members.is_empty());
    }

    #[test]
    fn threshold_sample_modular_fills_budget() {
        let oracle = Oracle::new(Modular::unit(10));
        let ledger = QueryLedger::new();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let params = ThresholdParams::new(5, 1.0, 0.2, 0.2).unwrap();
        let out = threshold_sample(&oracle, &params, &mut rng, &ledger).unwrap();
        assert_eq!(out.members.len(), 5);
        assert_eq!(out.value, 5.0);
    }

    #[test]
    fn threshold_sample_takes_only_high_gain_element() {
        // gains {5, 0.1, 0.1}, tau = 1: only the 5-element survives the
        // filter, and afterwards all remaining marginals sit below tau
        let oracle = Oracle::new(Modular::new(vec![5.0, 0.1, 0.1]));
        let ledger = QueryLedger::new();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let params = ThresholdParams::new(2, 1.0, 0.2, 0.2).unwrap();
        let out = threshold_sample(&oracle, &params, &mut rng, &ledger).unwrap();
        assert_eq!(out.members.sorted_members(), vec![0]);
        assert_eq!(out.value, 5.0);
    }

    #[test]
    fn threshold_sample_budget_zero_contributes_nothing() {
        let oracle = Oracle::new(Modular::unit(4));
        let ledger = QueryLedger::new();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut params = ThresholdParams::new(1, 0.5, 0.2, 0.2).unwrap();
        params.k = 0;
        let out = threshold_sample(&oracle, &params, &mut rng, &ledger).unwrap();
        assert!(out.members.is_empty());
    }

    #[test]
    fn threshold_sample_deterministic_under_seed() {
        let oracle = Oracle::new(Modular::new((0..12).map(|i| 1.0 + i as f64 * 0.3).collect()));
        let params = ThresholdParams::new(4, 2.0, 0.2, 0.2).unwrap();
        let run = |seed: u64| {
            let ledger = QueryLedger::new();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let out = threshold_sample(&oracle, &params, &mut rng, &ledger).unwrap();
            (out.members.sorted_members(), out.value, ledger.queries(), ledger.rounds())
        };
        assert_eq!(run(11), run(11));
    }
}
