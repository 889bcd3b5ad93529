//! Constrained maximizers: the two low-adaptivity algorithms (adaptive
//! simple threshold and adaptive threshold greedy), the high-adaptivity
//! baselines (iterated greedy, threshold greedy), the random-set
//! unconstrained subroutine, and a brute-force optimum for verification.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Result, SubmaxError};
use crate::oracle::{evaluate, evaluate_batch, CandidateSet, Oracle, QueryLedger, Subset};
use crate::sampling::{threshold_sample, ThresholdParams};

/// Shared knobs for the randomized maximizers.
///
/// Non-heuristic mode uses the internally derived epsilon/delta values and
/// ReducedMean sample counts; heuristic mode passes `eps`/`delta` through
/// unchanged, caps expectation estimates at `expectation_samples` draws,
/// and optionally enables the sharp singleton bound and early termination.
#[derive(Clone, Debug)]
pub struct AlgorithmConfig {
    pub k: usize,
    pub eps: f64,
    pub delta: f64,
    /// approximation factor of the unconstrained subroutine; 4 for the
    /// random-set subroutine
    pub alpha: f64,
    pub heuristic_mode: bool,
    pub sharp_opt_bound: bool,
    pub early_termination: bool,
    pub expectation_samples: usize,
}

impl AlgorithmConfig {
    pub fn new(k: usize, eps: f64, delta: f64) -> Result<Self> {
        if k == 0 {
            return Err(SubmaxError::InvalidInput("k must be at least 1".into()));
        }
        if !(0.0 < eps && eps < 1.0) || !(0.0 < delta && delta < 1.0) {
            return Err(SubmaxError::InvalidInput("eps and delta must lie in (0,1)".into()));
        }
        Ok(AlgorithmConfig {
            k,
            eps,
            delta,
            alpha: 4.0,
            heuristic_mode: false,
            sharp_opt_bound: false,
            early_termination: false,
            expectation_samples: 100,
        })
    }

    pub fn heuristic(mut self) -> Self {
        self.heuristic_mode = true;
        self
    }

    fn probe_cap(&self) -> Option<usize> {
        if self.heuristic_mode {
            Some(self.expectation_samples)
        } else {
            None
        }
    }

    fn unconstrained_samples(&self) -> usize {
        if self.heuristic_mode {
            self.expectation_samples
        } else {
            1
        }
    }
}

/// Outcome of one maximizer run. `candidates` lists the labeled values the
/// final argmax chose between; `queries`/`rounds` are the ledger totals at
/// completion.
#[derive(Clone, Debug)]
pub struct RunResult {
    pub solution: CandidateSet,
    pub queries: u64,
    pub rounds: u64,
    pub candidates: Vec<(String, f64)>,
}

fn finish(
    ledger: &QueryLedger,
    solution: CandidateSet,
    candidates: Vec<(String, f64)>,
) -> RunResult {
    ledger.barrier();
    RunResult { solution, queries: ledger.queries(), rounds: ledger.rounds(), candidates }
}

fn singleton_values(oracle: &Oracle, ledger: &QueryLedger) -> Result<Vec<(usize, f64)>> {
    let elems = oracle.elements();
    let empty = Subset::empty(oracle.ground_size());
    let batch: Vec<Subset> = elems.iter().map(|&x| empty.with(x)).collect();
    let vals = evaluate_batch(oracle, &batch, ledger)?;
    Ok(elems.into_iter().zip(vals).collect())
}

/// Largest singleton value and its element, one batch of n queries; ties go
/// to the lowest element id.
pub fn max_singleton(oracle: &Oracle, ledger: &QueryLedger) -> Result<(usize, f64)> {
    let vals = singleton_values(oracle, ledger)?;
    let mut best = vals[0];
    for &(x, v) in &vals[1..] {
        if v > best.1 {
            best = (x, v);
        }
    }
    Ok(best)
}

fn topk_from_values(vals: &[(usize, f64)], k: usize) -> f64 {
    let mut v: Vec<f64> = vals.iter().map(|&(_, v)| v).collect();
    v.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let t = k.min(v.len());
    v[..t].iter().sum::<f64>() / t as f64
}

/// Mean of the k largest singleton values (all of them when k >= n), a
/// sharper stand-in for the OPT/k threshold scale than the max singleton.
pub fn topk_singleton_bound(oracle: &Oracle, k: usize, ledger: &QueryLedger) -> Result<f64> {
    if k == 0 {
        return Err(SubmaxError::InvalidInput("k must be at least 1".into()));
    }
    let vals = singleton_values(oracle, ledger)?;
    Ok(topk_from_values(&vals, k))
}

/// Random-set unconstrained maximization over the subsets of `universe`:
/// each element is kept independently with probability 1/2. With
/// `samples > 1` that many draws are evaluated in one batch and the best
/// kept (the 1/4-approximation in expectation holds only for a single draw).
pub fn unconstrained_random_set(
    oracle: &Oracle,
    universe: &Subset,
    samples: usize,
    rng: &mut dyn RngCore,
    ledger: &QueryLedger,
) -> Result<CandidateSet> {
    let samples = samples.max(1);
    let mut batch = Vec::with_capacity(samples);
    for _ in 0..samples {
        let mut s = Subset::empty(universe.ground_size());
        for x in universe.iter() {
            if rng.next_u64() & 1 == 1 {
                s.insert(x);
            }
        }
        batch.push(s);
    }
    let vals = evaluate_batch(oracle, &batch, ledger)?;
    let mut best = 0;
    for i in 1..samples {
        if vals[i] > vals[best] {
            best = i;
        }
    }
    Ok(CandidateSet { members: batch.swap_remove(best), value: vals[best] })
}

fn grid_len(c: f64, k: usize, eps: f64) -> usize {
    ((c * k as f64).ln() / -(1.0 - eps).ln()).ceil() as usize
}

fn argmax_candidate(cands: Vec<(String, CandidateSet)>) -> (CandidateSet, Vec<(String, f64)>) {
    let labeled: Vec<(String, f64)> = cands.iter().map(|(l, c)| (l.clone(), c.value)).collect();
    let mut best = 0;
    for i in 1..cands.len() {
        if cands[i].1.value > cands[best].1.value {
            best = i;
        }
    }
    let mut cands = cands;
    (cands.swap_remove(best).1, labeled)
}

/// Adaptive simple threshold. Runs one threshold-sample pair plus an
/// unconstrained draw for every threshold on a geometric grid descending
/// from the max singleton value; the grid iterations are independent, so
/// their queries sum but their rounds are metered as the max.
pub fn ast(
    oracle: &Oracle,
    cfg: &AlgorithmConfig,
    rng: &mut ChaCha8Rng,
    ledger: &QueryLedger,
) -> Result<RunResult> {
    let (_, m) = max_singleton(oracle, ledger)?;
    let c = 4.0 + cfg.alpha;
    let imax = grid_len(c, cfg.k, cfg.eps);
    let delta_pass = if cfg.heuristic_mode { cfg.delta } else { cfg.delta / 2.0 };
    let mut children = Vec::with_capacity(imax + 1);
    let mut per_iter: Vec<Vec<(String, CandidateSet)>> = Vec::with_capacity(imax + 1);
    for i in 0..=imax {
        let child = QueryLedger::new();
        let mut iter_rng = ChaCha8Rng::seed_from_u64(rng.random::<u64>());
        let tau = m * (1.0 - cfg.eps).powi(i as i32);
        let mut params = ThresholdParams::new(cfg.k, tau.max(0.0), cfg.eps, delta_pass)?;
        params.heuristic_mode = cfg.heuristic_mode;
        params.probe_sample_cap = cfg.probe_cap();

        let a = threshold_sample(oracle, &params, &mut iter_rng, &child)?;
        let rest = oracle.restrict(&a.members.complement());
        let b = threshold_sample(&rest, &params, &mut iter_rng, &child)?;
        let a_prime = unconstrained_random_set(
            oracle,
            &a.members,
            cfg.unconstrained_samples(),
            &mut iter_rng,
            &child,
        )?;
        per_iter.push(vec![
            (format!("A[{i}]"), a),
            (format!("A'[{i}]"), a_prime),
            (format!("B[{i}]"), b),
        ]);
        children.push(child);
    }
    ledger.absorb_parallel(children.iter());

    let mut best_iter = 0;
    let mut best_val = f64::NEG_INFINITY;
    for (i, cands) in per_iter.iter().enumerate() {
        let v = cands.iter().map(|(_, c)| c.value).fold(f64::NEG_INFINITY, f64::max);
        if v > best_val {
            best_val = v;
            best_iter = i;
        }
    }
    let (solution, labeled) = argmax_candidate(per_iter.swap_remove(best_iter));
    Ok(finish(ledger, solution, labeled))
}

/// Adaptive threshold greedy. Two sequential descending-threshold passes,
/// each growing its solution with threshold-sample calls on the shifted
/// (and for the second pass, restricted) oracle, then an unconstrained draw
/// inside the first solution; the best of the three is returned.
pub fn atg(
    oracle: &Oracle,
    cfg: &AlgorithmConfig,
    rng: &mut ChaCha8Rng,
    ledger: &QueryLedger,
) -> Result<RunResult> {
    let singles = singleton_values(oracle, ledger)?;
    let m = singles.iter().map(|&(_, v)| v).fold(f64::NEG_INFINITY, f64::max);
    let c = 8.0 / cfg.eps;
    let (eps_g, base_delta) = if cfg.heuristic_mode {
        (cfg.eps, cfg.delta)
    } else {
        let eps_prime = (1.0 - 1.0 / std::f64::consts::E) * cfg.eps / 8.0;
        let levels = grid_len(c, cfg.k, eps_prime) as f64;
        (eps_prime, cfg.delta / (2.0 * levels))
    };
    let levels = grid_len(c, cfg.k, eps_g);
    let start = if cfg.sharp_opt_bound { topk_from_values(&singles, cfg.k) } else { m };

    let mut lower_bound = m.max(0.0);
    let run_pass = |exclude: Option<&Subset>,
                    lb: &mut f64,
                    rng: &mut ChaCha8Rng|
     -> Result<CandidateSet> {
        let mut sol = Subset::empty(oracle.ground_size());
        let mut sol_val: Option<f64> = None;
        let base = match exclude {
            Some(ex) => oracle.restrict(&ex.complement()),
            None => oracle.clone(),
        };
        for i in 0..=levels {
            if sol.len() == cfg.k {
                break;
            }
            let tau = start * (1.0 - eps_g).powi(i as i32);
            if cfg.early_termination && tau < *lb * (1.0 - cfg.eps) / (c * cfg.k as f64) {
                break;
            }
            let shifted = base.shift(&sol);
            let mut params =
                ThresholdParams::new(cfg.k - sol.len(), tau.max(0.0), eps_g, base_delta)?;
            params.heuristic_mode = cfg.heuristic_mode;
            params.probe_sample_cap = cfg.probe_cap();
            let step = threshold_sample(&shifted, &params, rng, ledger)?;
            sol = sol.union(&step.members);
            sol_val = Some(step.value);
            if step.value > *lb {
                *lb = step.value;
            }
        }
        let value = match sol_val {
            Some(v) => v,
            None => evaluate(oracle, &sol, ledger)?,
        };
        Ok(CandidateSet { members: sol, value })
    };

    let a = run_pass(None, &mut lower_bound, rng)?;
    let b = run_pass(Some(&a.members), &mut lower_bound, rng)?;
    let a_prime = unconstrained_random_set(
        oracle,
        &a.members,
        cfg.unconstrained_samples(),
        rng,
        ledger,
    )?;
    let (solution, labeled) = argmax_candidate(vec![
        ("A".into(), a),
        ("A'".into(), a_prime),
        ("B".into(), b),
    ]);
    Ok(finish(ledger, solution, labeled))
}

/// Iterated greedy: two standard greedy passes (the second over the
/// complement of the first), always adding the best candidate even at
/// negative gain, plus an unconstrained draw inside the first solution.
pub fn iterated_greedy(
    oracle: &Oracle,
    k: usize,
    unconstrained_samples: usize,
    rng: &mut dyn RngCore,
    ledger: &QueryLedger,
) -> Result<RunResult> {
    if k == 0 || k > oracle.element_count() {
        return Err(SubmaxError::InvalidInput(format!(
            "k={k} outside 1..={}",
            oracle.element_count()
        )));
    }
    let elems = oracle.elements();
    let greedy_pass = |exclude: &Subset| -> Result<CandidateSet> {
        let mut sol = Subset::empty(oracle.ground_size());
        let mut sol_val = 0.0;
        let mut first = true;
        for _ in 0..k {
            let pool: Vec<usize> = elems
                .iter()
                .copied()
                .filter(|&x| !sol.contains(x) && !exclude.contains(x))
                .collect();
            if pool.is_empty() {
                if first {
                    sol_val = evaluate(oracle, &sol, ledger)?;
                    ledger.barrier();
                }
                break;
            }
            first = false;
            let batch: Vec<Subset> = pool.iter().map(|&x| sol.with(x)).collect();
            let vals = evaluate_batch(oracle, &batch, ledger)?;
            let mut best = 0;
            for i in 1..pool.len() {
                if vals[i] > vals[best] {
                    best = i;
                }
            }
            sol.insert(pool[best]);
            sol_val = vals[best];
        }
        Ok(CandidateSet { members: sol, value: sol_val })
    };

    let a = greedy_pass(&Subset::empty(oracle.ground_size()))?;
    let b = greedy_pass(&a.members)?;
    let a_prime =
        unconstrained_random_set(oracle, &a.members, unconstrained_samples, rng, ledger)?;
    let (solution, labeled) = argmax_candidate(vec![
        ("A".into(), a),
        ("A'".into(), a_prime),
        ("B".into(), b),
    ]);
    Ok(finish(ledger, solution, labeled))
}

/// Threshold greedy: sequentially scans elements at each threshold of a
/// geometric grid from the max singleton down to (1-eps)M/k, adding any
/// element whose marginal clears the current threshold. Fully sequential,
/// so rounds track queries.
pub fn threshold_greedy(
    oracle: &Oracle,
    k: usize,
    eps: f64,
    ledger: &QueryLedger,
) -> Result<RunResult> {
    if k == 0 || k > oracle.element_count() {
        return Err(SubmaxError::InvalidInput(format!(
            "k={k} outside 1..={}",
            oracle.element_count()
        )));
    }
    if !(0.0 < eps && eps < 1.0) {
        return Err(SubmaxError::InvalidInput("eps must lie in (0,1)".into()));
    }
    let (_, m) = max_singleton(oracle, ledger)?;
    let mut sol = Subset::empty(oracle.ground_size());
    let mut sol_val = 0.0;
    if m > 0.0 {
        let mut first = true;
        let mut tau = m;
        let floor = (1.0 - eps) * m / k as f64;
        'outer: while tau >= floor {
            for x in oracle.elements() {
                if sol.contains(x) {
                    continue;
                }
                if first {
                    sol_val = evaluate(oracle, &sol, ledger)?;
                    ledger.barrier();
                    first = false;
                }
                let cand = sol.with(x);
                let v = evaluate(oracle, &cand, ledger)?;
                ledger.barrier();
                if v - sol_val >= tau {
                    sol = cand;
                    sol_val = v;
                    if sol.len() == k {
                        break 'outer;
                    }
                }
            }
            tau *= 1.0 - eps;
        }
    }
    let solution = CandidateSet { members: sol, value: sol_val };
    let labeled = vec![("S".into(), solution.value)];
    Ok(finish(ledger, solution, labeled))
}

/// Exhaustive optimum over all subsets of size at most k (n <= 25 only).
/// Ties resolve to the first subset in size-then-lexicographic order. All
/// evaluations count as queries in a single collective round.
pub fn brute_force_opt(oracle: &Oracle, k: usize, ledger: &QueryLedger) -> Result<(Subset, f64)> {
    let n = oracle.element_count();
    if n > 25 {
        return Err(SubmaxError::InvalidInput(format!(
            "brute force limited to 25 elements, got {n}"
        )));
    }
    if k > n {
        return Err(SubmaxError::InvalidInput(format!("k={k} exceeds ground size {n}")));
    }
    let elems = oracle.elements();
    let mut best_set = Subset::empty(oracle.ground_size());
    let mut best_val = oracle.eval_uncounted(&best_set)?;
    let mut queries = 1u64;
    for size in 1..=k {
        let mut combo: Vec<usize> = (0..size).collect();
        loop {
            let mut s = Subset::empty(oracle.ground_size());
            for &i in &combo {
                s.insert(elems[i]);
            }
            let v = oracle.eval_uncounted(&s)?;
            queries += 1;
            if v > best_val {
                best_val = v;
                best_set = s;
            }
            // advance to the next combination in lexicographic order
            match (0..size).rev().find(|&i| combo[i] < i + n - size) {
                Some(i) => {
                    combo[i] += 1;
                    for j in i + 1..size {
                        combo[j] = combo[j - 1] + 1;
                    }
                }
                None => break,
            }
        }
    }
    ledger.barrier();
    ledger.add_queries(queries);
    ledger.add_rounds(1);
    Ok((best_set, best_val))
}

/// Exhaustive unconstrained optimum over all subsets of `universe`
/// (|universe| <= 20 only); used to sanity-check the random-set subroutine.
pub fn brute_force_unconstrained(
    oracle: &Oracle,
    universe: &Subset,
    ledger: &QueryLedger,
) -> Result<(Subset, f64)> {
    let members = universe.sorted_members();
    if members.len() > 20 {
        return Err(SubmaxError::InvalidInput(format!(
            "unconstrained brute force limited to 20 elements, got {}",
            members.len()
        )));
    }
    let mut best_set = Subset::empty(universe.ground_size());
    let mut best_val = oracle.eval_uncounted(&best_set)?;
    for mask in 1u64..(1u64 << members.len()) {
        let mut s = Subset::empty(universe.ground_size());
        for (i, &x) in members.iter().enumerate() {
            if mask >> i & 1 == 1 {
                s.insert(x);
            }
        }
        let v = oracle.eval_uncounted(&s)?;
        if v > best_val {
            best_val = v;
            best_set = s;
        }
    }
    ledger.barrier();
    ledger.add_queries(1 << members.len());
    ledger.add_rounds(1);
    Ok((best_set, best_val))
}
