//! Experiment sweep runner and CSV writer: runs every (algorithm, k,
//! repetition) cell with its own ledger and RNG substream, normalizes
//! values against an IteratedGreedy reference run per (instance, k), and
//! emits rows in deterministic order.

use std::fmt;
use std::fs::File;
use std::io::{BufReader, Write};
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

use rand_chacha::ChaCha8Rng;

use crate::error::{Result, SubmaxError};
use crate::graph::{build_revenue_model, generate_ba, parse_edge_list, Graph, RngSeed};
use crate::maximizers::{ast, atg, iterated_greedy, threshold_greedy, AlgorithmConfig, RunResult};
use crate::objectives::MaxCut;
use crate::oracle::{Oracle, QueryLedger};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Objective {
    MaxCut,
    Revenue,
}

impl FromStr for Objective {
    type Err = SubmaxError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "maxcut" => Ok(Objective::MaxCut),
            "revenue" => Ok(Objective::Revenue),
            other => Err(SubmaxError::InvalidInput(format!("unknown objective '{other}'"))),
        }
    }
}

impl fmt::Display for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Objective::MaxCut => "maxcut",
            Objective::Revenue => "revenue",
        })
    }
}

/// Where the instance graph comes from: an edge-list file, or a generated
/// Barabasi-Albert graph written as `ba:n,attach`.
#[derive(Clone, Debug)]
pub enum GraphSource {
    File(PathBuf),
    Ba { n: usize, attach: usize },
}

impl FromStr for GraphSource {
    type Err = SubmaxError;
    fn from_str(s: &str) -> Result<Self> {
        if let Some(rest) = s.strip_prefix("ba:") {
            let (n, attach) = rest
                .split_once(',')
                .ok_or_else(|| SubmaxError::InvalidInput(format!("bad ba spec '{s}'")))?;
            let n = n
                .trim()
                .parse()
                .map_err(|_| SubmaxError::InvalidInput(format!("bad ba node count in '{s}'")))?;
            let attach = attach
                .trim()
                .parse()
                .map_err(|_| SubmaxError::InvalidInput(format!("bad ba attach count in '{s}'")))?;
            Ok(GraphSource::Ba { n, attach })
        } else {
            Ok(GraphSource::File(PathBuf::from(s)))
        }
    }
}

impl GraphSource {
    pub fn instance_label(&self) -> String {
        match self {
            GraphSource::File(p) => p
                .file_name()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| p.display().to_string()),
            GraphSource::Ba { n, attach } => format!("ba-{n}-{attach}"),
        }
    }

    pub fn load(&self, seed: RngSeed) -> Result<Graph> {
        match self {
            GraphSource::File(p) => parse_edge_list(BufReader::new(File::open(p)?)),
            GraphSource::Ba { n, attach } => generate_ba(*n, *attach, seed),
        }
    }
}

/// A budget given either as an absolute size or a fraction of n (resolved
/// by flooring).
#[derive(Clone, Copy, Debug)]
pub enum KSpec {
    Absolute(usize),
    Fraction(f64),
}

impl FromStr for KSpec {
    type Err = SubmaxError;
    fn from_str(s: &str) -> Result<Self> {
        if let Some(pct) = s.strip_suffix('%') {
            let f: f64 = pct
                .trim()
                .parse()
                .map_err(|_| SubmaxError::InvalidInput(format!("bad k fraction '{s}'")))?;
            if !(0.0 < f && f <= 100.0) {
                return Err(SubmaxError::InvalidInput(format!("k fraction '{s}' out of range")));
            }
            Ok(KSpec::Fraction(f / 100.0))
        } else {
            let k = s
                .trim()
                .parse()
                .map_err(|_| SubmaxError::InvalidInput(format!("bad k value '{s}'")))?;
            Ok(KSpec::Absolute(k))
        }
    }
}

impl KSpec {
    pub fn resolve(&self, n: usize) -> usize {
        match *self {
            KSpec::Absolute(k) => k,
            KSpec::Fraction(f) => (f * n as f64).floor() as usize,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Algorithm {
    Ast,
    Atg,
    IteratedGreedy,
    ThresholdGreedy,
}

impl FromStr for Algorithm {
    type Err = SubmaxError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ast" => Ok(Algorithm::Ast),
            "atg" => Ok(Algorithm::Atg),
            "iterated_greedy" | "ig" => Ok(Algorithm::IteratedGreedy),
            "threshold_greedy" | "tg" => Ok(Algorithm::ThresholdGreedy),
            other => Err(SubmaxError::InvalidInput(format!("unknown algorithm '{other}'"))),
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Ast => "ast",
            Algorithm::Atg => "atg",
            Algorithm::IteratedGreedy => "iterated_greedy",
            Algorithm::ThresholdGreedy => "threshold_greedy",
        })
    }
}

/// Full description of one sweep. `timing` is off by default so that CSV
/// output is byte-deterministic; turning it on fills `wall_ms`.
#[derive(Clone, Debug)]
pub struct SweepConfig {
    pub objective: Objective,
    pub source: GraphSource,
    pub ks: Vec<KSpec>,
    pub eps: f64,
    pub delta: f64,
    pub repetitions: usize,
    pub seed: u64,
    pub algorithms: Vec<Algorithm>,
    pub heuristic_mode: bool,
    pub sharp_opt_bound: bool,
    pub early_termination: bool,
    pub expectation_samples: usize,
    pub timing: bool,
}

impl SweepConfig {
    pub fn new(objective: Objective, source: GraphSource, ks: Vec<KSpec>) -> Self {
        SweepConfig {
            objective,
            source,
            ks,
            eps: 0.1,
            delta: 0.1,
            repetitions: 20,
            seed: 0,
            algorithms: vec![Algorithm::Ast, Algorithm::Atg],
            heuristic_mode: true,
            sharp_opt_bound: true,
            early_termination: true,
            expectation_samples: 100,
            timing: false,
        }
    }
}

/// One run's metrics, in CSV column order.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentRecord {
    pub algorithm: String,
    pub objective: String,
    pub instance: String,
    pub n: usize,
    pub k: usize,
    pub epsilon: f64,
    pub delta: f64,
    pub repetition: usize,
    pub seed: u64,
    pub value: f64,
    pub value_normalized: f64,
    pub queries: u64,
    pub rounds: u64,
    pub wall_ms: f64,
}

fn cell_stream(algo: Algorithm, k_index: usize, repetition: usize) -> u64 {
    let a = match algo {
        Algorithm::Ast => 1u64,
        Algorithm::Atg => 2,
        Algorithm::IteratedGreedy => 3,
        Algorithm::ThresholdGreedy => 4,
    };
    (a << 48) | ((k_index as u64) << 24) | repetition as u64
}

fn run_cell(
    oracle: &Oracle,
    algo: Algorithm,
    k: usize,
    cfg: &SweepConfig,
    rng: &mut ChaCha8Rng,
) -> Result<RunResult> {
    let ledger = QueryLedger::new();
    let mut acfg = AlgorithmConfig::new(k, cfg.eps, cfg.delta)?;
    acfg.heuristic_mode = cfg.heuristic_mode;
    acfg.expectation_samples = cfg.expectation_samples;
    match algo {
        Algorithm::Ast => ast(oracle, &acfg, rng, &ledger),
        Algorithm::Atg => {
            acfg.sharp_opt_bound = cfg.sharp_opt_bound;
            acfg.early_termination = cfg.early_termination;
            atg(oracle, &acfg, rng, &ledger)
        }
        Algorithm::IteratedGreedy => {
            iterated_greedy(oracle, k, cfg.expectation_samples, rng, &ledger)
        }
        Algorithm::ThresholdGreedy => threshold_greedy(oracle, k, cfg.eps, &ledger),
    }
}

/// Runs every (algorithm, k, repetition) cell of the sweep. Each cell gets
/// its own ledger and an RNG substream keyed by the cell index, so cells
/// are independent of execution order. The IteratedGreedy run for
/// repetition 0 defines the normalizer for its (instance, k); its rows are
/// included even when IteratedGreedy is not in the algorithm list.
pub fn run_sweep(cfg: &SweepConfig) -> Result<Vec<ExperimentRecord>> {
    if cfg.repetitions == 0 {
        return Err(SubmaxError::InvalidInput("repetitions must be at least 1".into()));
    }
    let master = RngSeed::new(cfg.seed);
    let graph = cfg.source.load(master.child(u64::MAX))?;
    let n = graph.node_count();
    let instance = cfg.source.instance_label();
    let oracle = match cfg.objective {
        Objective::MaxCut => Oracle::new(MaxCut::new(graph)),
        Objective::Revenue => Oracle::new(build_revenue_model(&graph, master.child(u64::MAX - 1))),
    };

    let ks: Vec<usize> = cfg.ks.iter().map(|k| k.resolve(n)).collect();
    for &k in &ks {
        if k == 0 || k > n {
            return Err(SubmaxError::InvalidInput(format!("resolved k={k} outside 1..={n}")));
        }
    }

    let mut records = Vec::new();
    for (ki, &k) in ks.iter().enumerate() {
        // normalizer: IteratedGreedy with the repetition-0 substream
        let mut algos = cfg.algorithms.clone();
        if !algos.contains(&Algorithm::IteratedGreedy) {
            algos.push(Algorithm::IteratedGreedy);
        }
        let norm_stream = cell_stream(Algorithm::IteratedGreedy, ki, 0);
        let mut norm_rng = master.child(norm_stream).rng();
        let normalizer = run_cell(&oracle, Algorithm::IteratedGreedy, k, cfg, &mut norm_rng)?
            .solution
            .value;

        for &algo in &algos {
            let reps = if algo == Algorithm::IteratedGreedy
                && !cfg.algorithms.contains(&Algorithm::IteratedGreedy)
            {
                1
            } else {
                cfg.repetitions
            };
            for rep in 0..reps {
                let stream = cell_stream(algo, ki, rep);
                let mut rng = master.child(stream).rng();
                let start = Instant::now();
                let out = run_cell(&oracle, algo, k, cfg, &mut rng)?;
                let wall_ms = if cfg.timing {
                    start.elapsed().as_secs_f64() * 1e3
                } else {
                    0.0
                };
                records.push(ExperimentRecord {
                    algorithm: algo.to_string(),
                    objective: cfg.objective.to_string(),
                    instance: instance.clone(),
                    n,
                    k,
                    epsilon: cfg.eps,
                    delta: cfg.delta,
                    repetition: rep,
                    seed: stream,
                    value: out.solution.value,
                    value_normalized: if normalizer != 0.0 {
                        out.solution.value / normalizer
                    } else {
                        0.0
                    },
                    queries: out.queries,
                    rounds: out.rounds,
                    wall_ms,
                });
            }
        }
    }
    records.sort_by(|a, b| {
        (&a.algorithm, a.k, a.repetition).cmp(&(&b.algorithm, b.k, b.repetition))
    });
    Ok(records)
}

pub const CSV_HEADER: &str =
    "algorithm,objective,instance,n,k,epsilon,delta,repetition,seed,value,value_normalized,queries,rounds,wall_ms";

fn fmt_real(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    // 6 significant digits
    format!("{v:.5e}")
}

/// Writes records with the fixed header, one row per record, reals with 6
/// significant digits. Callers sort via `run_sweep`; rows are written in
/// the order given.
pub fn write_csv<W: Write>(records: &[ExperimentRecord], sink: &mut W) -> Result<()> {
    writeln!(sink, "{CSV_HEADER}")?;
    for r in records {
        writeln!(
            sink,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.algorithm,
            r.objective,
            r.instance,
            r.n,
            r.k,
            fmt_real(r.epsilon),
            fmt_real(r.delta),
            r.repetition,
            r.seed,
            fmt_real(r.value),
            fmt_real(r.value_normalized),
            r.queries,
            r.rounds,
            fmt_real(r.wall_ms),
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_cfg() -> SweepConfig {
        let mut cfg = SweepConfig::new(
            Objective::MaxCut,
            GraphSource::Ba { n: 40, attach: 3 },
            vec![KSpec::Absolute(4)],
        );
        cfg.repetitions = 2;
        cfg.seed = 5;
        cfg.algorithms = vec![Algorithm::Ast, Algorithm::Atg];
        cfg
    }

    #[test]
    fn sweep_cardinality_and_normalizer_rows() {
        let mut cfg = small_cfg();
        cfg.ks = vec![KSpec::Absolute(4), KSpec::Absolute(8)];
        let records = run_sweep(&cfg).unwrap();
        // 2 algorithms x 2 ks x 2 reps + one normalizer row per k
        assert_eq!(records.len(), 2 * 2 * 2 + 2);
        let ig: Vec<_> =
            records.iter().filter(|r| r.algorithm == "iterated_greedy").collect();
        assert_eq!(ig.len(), 2);
        for r in &ig {
            assert!((r.value_normalized - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn sweep_normalization_consistency() {
        let records = run_sweep(&small_cfg()).unwrap();
        let norm = records
            .iter()
            .find(|r| r.algorithm == "iterated_greedy" && r.repetition == 0)
            .unwrap()
            .value;
        for r in &records {
            assert!((r.value_normalized * norm - r.value).abs() <= 1e-9 * r.value.abs().max(1.0));
        }
    }

    #[test]
    fn csv_deterministic_and_round_trips() {
        let cfg = small_cfg();
        let mut a = Vec::new();
        write_csv(&run_sweep(&cfg).unwrap(), &mut a).unwrap();
        let mut b = Vec::new();
        write_csv(&run_sweep(&cfg).unwrap(), &mut b).unwrap();
        assert_eq!(a, b);
        let text = String::from_utf8(a).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), CSV_HEADER);
        for line in lines {
            assert_eq!(line.split(',').count(), 14);
        }
    }

    #[test]
    fn csv_empty_and_single() {
        let mut out = Vec::new();
        write_csv(&[], &mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap().lines().count(), 1);
        let rec = ExperimentRecord {
            algorithm: "ast".into(),
            objective: "maxcut".into(),
            instance: "ba-10-2".into(),
            n: 10,
            k: 2,
            epsilon: 0.1,
            delta: 0.1,
            repetition: 0,
            seed: 7,
            value: 12.5,
            value_normalized: 0.9,
            queries: 100,
            rounds: 4,
            wall_ms: 0.0,
        };
        let mut out = Vec::new();
        write_csv(&[rec], &mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap().lines().count(), 2);
    }

    #[test]
    fn kspec_parsing() {
        assert_eq!("50".parse::<KSpec>().unwrap().resolve(968), 50);
        assert_eq!("10%".parse::<KSpec>().unwrap().resolve(968), 96);
        assert_eq!("25%".parse::<KSpec>().unwrap().resolve(968), 242);
        assert!("abc".parse::<KSpec>().is_err());
    }

    #[test]
    fn k_out_of_range_rejected() {
        let mut cfg = small_cfg();
        cfg.ks = vec![KSpec::Absolute(100)];
        assert!(run_sweep(&cfg).is_err());
    }
}
