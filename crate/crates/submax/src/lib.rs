//! Low-adaptivity maximization of non-monotone submodular functions under a
//! cardinality constraint, with exact accounting of oracle queries and
//! adaptive rounds, benchmark objectives, and a sweep runner.

pub mod bench;
pub mod error;
pub mod graph;
pub mod maximizers;
pub mod objectives;
pub mod oracle;
pub mod sampling;

pub use error::{Result, SubmaxError};
pub use graph::{generate_ba, parse_edge_list, Graph, RngSeed};
pub use maximizers::{
    ast, atg, brute_force_opt, iterated_greedy, threshold_greedy, unconstrained_random_set,
    AlgorithmConfig, RunResult,
};
pub use objectives::{MaxCut, RevenueModel};
pub use oracle::{
    evaluate, evaluate_batch, CandidateSet, Oracle, QueryLedger, SetFunction, Subset,
};
pub use sampling::{threshold_sample, ThresholdParams};
