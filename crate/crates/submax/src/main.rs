use std::fs;
use std::io::Write;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use submax::bench::{
    run_sweep, write_csv, GraphSource, KSpec, Objective, SweepConfig,
};
use submax::graph::{generate_ba, RngSeed};
use submax::maximizers::{brute_force_opt, AlgorithmConfig};
use submax::objectives::MaxCut;
use submax::oracle::{Oracle, QueryLedger};
use submax::{ast, atg};

#[derive(Parser)]
#[command(name = "submax", about = "Submodular maximization benchmark runner", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a single algorithm on a single instance and print one record
    Run(SweepArgs),
    /// Run a full sweep and write CSV
    Sweep(SweepArgs),
    /// Run the built-in brute-force ratio suites and print pass/fail
    Verify,
}

#[derive(Args, Default)]
struct SweepArgs {
    /// Objective: maxcut or revenue
    #[arg(long, default_value = "maxcut")]
    objective: String,
    /// Graph source: an edge-list file path or ba:n,attach
    #[arg(long)]
    graph: Option<String>,
    /// Budgets: comma list; suffix % for fraction of n
    #[arg(long)]
    k: Option<String>,
    #[arg(long, default_value_t = 0.1)]
    eps: f64,
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    #[arg(long, default_value_t = 20)]
    reps: usize,
    /// Master seed (defaults to SUBMAX_SEED, then 0)
    #[arg(long)]
    seed: Option<u64>,
    /// Algorithms: comma list of ast, atg, iterated_greedy, threshold_greedy
    #[arg(long)]
    algos: Option<String>,
    #[arg(long, overrides_with = "no_heuristic")]
    heuristic: bool,
    #[arg(long, overrides_with = "heuristic")]
    no_heuristic: bool,
    /// Record wall-clock times (makes CSV output non-deterministic)
    #[arg(long)]
    timing: bool,
    /// Output CSV path (stdout when omitted)
    #[arg(long)]
    out: Option<String>,
    /// Flat key=value config file mirroring the flags
    #[arg(long)]
    config: Option<String>,
}

fn parse_list<T: FromStr>(s: &str) -> Result<Vec<T>, T::Err> {
    s.split(',').map(|p| p.trim().parse()).collect()
}

fn build_config(args: &SweepArgs) -> Result<SweepConfig, String> {
    let mut objective = args.objective.clone();
    let mut graph = args.graph.clone();
    let mut k = args.k.clone();
    let mut eps = args.eps;
    let mut delta = args.delta;
    let mut reps = args.reps;
    let mut seed = args.seed;
    let mut algos = args.algos.clone();
    let mut heuristic = if args.no_heuristic {
        Some(false)
    } else if args.heuristic {
        Some(true)
    } else {
        None
    };
    let mut timing = args.timing;

    if let Some(path) = &args.config {
        let text = fs::read_to_string(path).map_err(|e| format!("config {path}: {e}"))?;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| format!("config {path}:{}: expected key=value", lineno + 1))?;
            let (key, value) = (key.trim(), value.trim().to_string());
            let bad = |e: String| format!("config {path}:{}: {e}", lineno + 1);
            match key {
                "objective" => objective = value,
                "graph" => graph = Some(value),
                "k" => k = Some(value),
                "eps" => eps = value.parse().map_err(|_| bad("bad eps".into()))?,
                "delta" => delta = value.parse().map_err(|_| bad("bad delta".into()))?,
                "reps" => reps = value.parse().map_err(|_| bad("bad reps".into()))?,
                "seed" => {
                    seed = Some(value.parse().map_err(|_| bad("bad seed".into()))?)
                }
                "algos" => algos = Some(value),
                "heuristic" => {
                    heuristic =
                        Some(value.parse().map_err(|_| bad("bad heuristic flag".into()))?)
                }
                "timing" => {
                    timing = value.parse().map_err(|_| bad("bad timing flag".into()))?
                }
                other => return Err(bad(format!("unknown key '{other}'"))),
            }
        }
    }

    let objective: Objective = objective.parse().map_err(|e| format!("{e}"))?;
    let source: GraphSource = graph
        .as_deref()
        .ok_or("missing --graph")?
        .parse()
        .map_err(|e| format!("{e}"))?;
    let ks: Vec<KSpec> =
        parse_list(k.as_deref().ok_or("missing --k")?).map_err(|e| format!("{e}"))?;
    if ks.is_empty() {
        return Err("empty --k list".into());
    }

    let mut cfg = SweepConfig::new(objective, source, ks);
    cfg.eps = eps;
    cfg.delta = delta;
    cfg.repetitions = reps.max(1);
    cfg.seed = seed
        .or_else(|| std::env::var("SUBMAX_SEED").ok().and_then(|s| s.parse().ok()))
        .unwrap_or(0);
    if let Some(a) = &algos {
        cfg.algorithms = parse_list(a).map_err(|e| format!("{e}"))?;
        if cfg.algorithms.is_empty() {
            return Err("empty --algos list".into());
        }
    }
    if let Some(h) = heuristic.take() {
        cfg.heuristic_mode = h;
        cfg.sharp_opt_bound = h;
        cfg.early_termination = h;
    }
    cfg.timing = timing;
    Ok(cfg)
}

fn emit(records: &[submax::bench::ExperimentRecord], out: Option<&str>) -> Result<(), String> {
    let mut buf = Vec::new();
    write_csv(records, &mut buf).map_err(|e| format!("{e}"))?;
    match out {
        Some(path) => fs::write(path, buf).map_err(|e| format!("{path}: {e}"))?,
        None => std::io::stdout().write_all(&buf).map_err(|e| format!("{e}"))?,
    }
    Ok(())
}

fn cmd_run(args: &SweepArgs) -> Result<(), String> {
    let mut cfg = build_config(args)?;
    cfg.repetitions = 1;
    if cfg.algorithms.len() != 1 {
        return Err("run takes exactly one --algos entry".into());
    }
    if cfg.ks.len() != 1 {
        return Err("run takes exactly one --k value".into());
    }
    let records = run_sweep(&cfg).map_err(|e| format!("{e}"))?;
    let algo = cfg.algorithms[0].to_string();
    let selected: Vec<_> =
        records.into_iter().filter(|r| r.algorithm == algo).collect();
    emit(&selected, args.out.as_deref())
}

fn cmd_sweep(args: &SweepArgs) -> Result<(), String> {
    let cfg = build_config(args)?;
    let records = run_sweep(&cfg).map_err(|e| format!("{e}"))?;
    emit(&records, args.out.as_deref())
}

/// Small built-in suites comparing the adaptive algorithms against the
/// brute-force optimum on generated instances.
fn cmd_verify() -> bool {
    let mut all_ok = true;
    let mut check = |name: &str, ok: bool| {
        println!("{}: {}", name, if ok { "pass" } else { "FAIL" });
        all_ok &= ok;
    };

    let instances = 5;
    let runs = 20;
    let (n, k) = (12, 3);
    for (algo_name, is_ast) in [("ast", true), ("atg", false)] {
        let mut worst: f64 = 1.0;
        let mut ok = true;
        for inst in 0..instances {
            let seed = RngSeed::new(1000 + inst);
            let g = match generate_ba(n, 3, seed.child(0)) {
                Ok(g) => g,
                Err(_) => {
                    ok = false;
                    break;
                }
            };
            let oracle = Oracle::new(MaxCut::new(g));
            let ledger = QueryLedger::new();
            let opt = match brute_force_opt(&oracle, k, &ledger) {
                Ok((_, v)) => v,
                Err(_) => {
                    ok = false;
                    break;
                }
            };
            let cfg = AlgorithmConfig::new(k, 0.1, 0.1).unwrap().heuristic();
            let mut total = 0.0;
            for rep in 0..runs {
                let mut rng = seed.child(1 + rep).rng();
                let out = if is_ast {
                    ast(&oracle, &cfg, &mut rng, &ledger)
                } else {
                    atg(&oracle, &cfg, &mut rng, &ledger)
                };
                match out {
                    Ok(r) => total += r.solution.value,
                    Err(_) => {
                        ok = false;
                        break;
                    }
                }
            }
            let ratio = total / runs as f64 / opt;
            worst = worst.min(ratio);
        }
        check(&format!("{algo_name} mean ratio vs brute force >= 0.5 (worst {worst:.3})"),
            ok && worst >= 0.5);
    }
    all_ok
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            eprint!("{e}");
            return ExitCode::from(1);
        }
    };
    match cli.command {
        Command::Run(args) => match cmd_run(&args) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(1)
            }
        },
        Command::Sweep(args) => match cmd_sweep(&args) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(1)
            }
        },
        Command::Verify => {
            if cmd_verify() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            }
        }
    }
}
