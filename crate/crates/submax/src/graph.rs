//! Graph ingestion and generation: SNAP-style edge lists, Barabási–Albert
//! random graphs, and seeded randomization for the revenue model.

use std::collections::HashMap;
use std::io::BufRead;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Result, SubmaxError};
use crate::objectives::RevenueModel;

/// Undirected weighted graph with dense node ids `0..n-1`. Each unordered
/// pair is stored once, canonically as `(min, max)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize, f64)>,
}

impl Graph {
    /// Builds a graph, canonicalizing edges and merging parallel edges by
    /// summing their weights. Self-loops and negative weights are rejected.
    pub fn new(n: usize, edges: Vec<(usize, usize, f64)>) -> Result<Self> {
        let mut merged: HashMap<(usize, usize), f64> = HashMap::new();
        for (u, v, w) in edges {
            if u == v {
                return Err(SubmaxError::InvalidInput(format!("self-loop on node {u}")));
            }
            if u >= n || v >= n {
                return Err(SubmaxError::ElementOutOfRange { element: u.max(v), n });
            }
            if w < 0.0 || !w.is_finite() {
                return Err(SubmaxError::InvalidInput(format!("bad edge weight {w}")));
            }
            let key = (u.min(v), u.max(v));
            *merged.entry(key).or_insert(0.0) += w;
        }
        let mut edges: Vec<_> = merged.into_iter().map(|((u, v), w)| (u, v, w)).collect();
        edges.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        Ok(Graph { n, edges })
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Edges in canonical `(u, v, w)` order with `u < v`.
    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    /// Adjacency lists `(neighbor, weight)`.
    pub fn adjacency(&self) -> Vec<Vec<(usize, f64)>> {
        let mut adj = vec![Vec::new(); self.n];
        for &(u, v, w) in &self.edges {
            adj[u].push((v, w));
            adj[v].push((u, w));
        }
        adj
    }

    /// Replaces all edge weights (same topology).
    pub fn with_weights(&self, weights: &[f64]) -> Result<Graph> {
        if weights.len() != self.edges.len() {
            return Err(SubmaxError::InvalidInput("weight count mismatch".into()));
        }
        let edges = self
            .edges
            .iter()
            .zip(weights)
            .map(|(&(u, v, _), &w)| (u, v, w))
            .collect();
        Graph::new(self.n, edges)
    }

    /// Edge-list text that `parse_edge_list` reads back to an identical graph.
    pub fn to_edge_list_text(&self) -> String {
        let mut out = String::new();
        for &(u, v, w) in &self.edges {
            out.push_str(&format!("{u} {v} {w:?}\n"));
        }
        out
    }
}

/// Parses a SNAP-style edge list: `#` comment lines, otherwise
/// whitespace-separated `u v` or `u v w`. Node ids are compacted to
/// `0..n-1` in first-appearance order; self-loops are dropped.
///
/// Unweighted duplicate and reverse edges are deduplicated (a directed pair
/// listed both ways is one undirected unit edge); weighted parallel edges
/// are merged by summing.
pub fn parse_edge_list<R: BufRead>(reader: R) -> Result<Graph> {
    let mut ids: HashMap<u64, usize> = HashMap::new();
    let mut raw: Vec<(usize, usize, Option<f64>)> = Vec::new();
    let compact = |raw_id: u64, ids: &mut HashMap<u64, usize>| -> usize {
        let next = ids.len();
        *ids.entry(raw_id).or_insert(next)
    };
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() < 2 {
            return Err(SubmaxError::Parse {
                line: lineno + 1,
                msg: format!("expected `u v [w]`, got {} token(s)", toks.len()),
            });
        }
        let parse_id = |t: &str| -> Result<u64> {
            t.parse::<u64>().map_err(|_| SubmaxError::Parse {
                line: lineno + 1,
                msg: format!("non-integer node id `{t}`"),
            })
        };
        let u = compact(parse_id(toks[0])?, &mut ids);
        let v = compact(parse_id(toks[1])?, &mut ids);
        let w = if toks.len() >= 3 {
            Some(toks[2].parse::<f64>().map_err(|_| SubmaxError::Parse {
                line: lineno + 1,
                msg: format!("bad weight `{}`", toks[2]),
            })?)
        } else {
            None
        };
        if u != v {
            raw.push((u, v, w));
        }
    }
    let n = ids.len();
    let weighted = raw.iter().any(|e| e.2.is_some());
    let edges = if weighted {
        raw.iter().map(|&(u, v, w)| (u, v, w.unwrap_or(1.0))).collect()
    } else {
        // Dedupe unweighted pairs: u->v and v->u are one undirected edge.
        let mut seen = HashMap::new();
        for &(u, v, _) in &raw {
            seen.entry((u.min(v), u.max(v))).or_insert(1.0);
        }
        seen.into_iter().map(|((u, v), w)| (u, v, w)).collect()
    };
    Graph::new(n, edges)
}

/// Reproducible RNG stream id: `(master_seed, stream_id)` fully determines
/// every draw.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RngSeed {
    pub master: u64,
    pub stream: u64,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d049bb133111eb);
    x ^ (x >> 31)
}

impl RngSeed {
    pub fn new(master: u64) -> Self {
        RngSeed { master, stream: 0 }
    }

    /// Derives an independent substream; distinct `i` give distinct streams.
    pub fn child(&self, i: u64) -> Self {
        RngSeed { master: self.master, stream: splitmix64(self.stream ^ splitmix64(i.wrapping_add(1))) }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut r = ChaCha8Rng::seed_from_u64(self.master);
        r.set_stream(self.stream);
        r
    }
}

/// Uniform draw from the open interval (0,1); endpoint hits are resampled.
pub(crate) fn open_unit<R: Rng>(rng: &mut R) -> f64 {
    loop {
        let x: f64 = rng.random();
        if x > 0.0 && x < 1.0 {
            return x;
        }
    }
}

/// Barabási–Albert preferential-attachment graph. Starts from `attach`
/// isolated seed nodes; every later node attaches to `attach` distinct
/// existing nodes with probability proportional to degree (uniformly while
/// all degrees are zero). Simple graph; edge count is `(n - attach) * attach`.
pub fn generate_ba(n: usize, attach: usize, seed: RngSeed) -> Result<Graph> {
    if attach < 1 || n <= attach {
        return Err(SubmaxError::InvalidInput(format!(
            "need n > attach >= 1, got n={n} attach={attach}"
        )));
    }
    let mut rng = seed.rng();
    let mut endpoints: Vec<usize> = Vec::with_capacity(2 * n * attach);
    let mut edges = Vec::with_capacity((n - attach) * attach);
    let mut picked = vec![false; n];
    for v in attach..n {
        let mut targets = Vec::with_capacity(attach);
        while targets.len() < attach {
            let t = if endpoints.is_empty() {
                rng.random_range(0..v)
            } else {
                endpoints[rng.random_range(0..endpoints.len())]
            };
            if t != v && !picked[t] {
                picked[t] = true;
                targets.push(t);
            }
        }
        for &t in &targets {
            picked[t] = false;
            edges.push((t, v, 1.0));
            endpoints.push(t);
            endpoints.push(v);
        }
    }
    Graph::new(n, edges)
}

/// Randomizes a revenue-model instance on `g`: edge weights and per-node
/// exponents i.i.d. uniform on the open interval (0,1), from the seeded
/// stream (edge draws in canonical edge order, then node draws).
pub fn build_revenue_model(g: &Graph, seed: RngSeed) -> RevenueModel {
    let mut rng = seed.rng();
    let weights: Vec<f64> = (0..g.edge_count()).map(|_| open_unit(&mut rng)).collect();
    let alphas: Vec<f64> = (0..g.node_count()).map(|_| open_unit(&mut rng)).collect();
    let weighted = g.with_weights(&weights).expect("same topology");
    RevenueModel::new(weighted, alphas).expect("weights and exponents in (0,1)")
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    #[test]
    fn parse_basic() {
        let g = parse_edge_list(Cursor::new("# c\n0 1\n1 2\n")).unwrap();
        assert_eq!(g.node_count(), 3);
        assert_eq!(g.edge_count(), 2);
        assert!(g.edges().iter().all(|e| e.2 == 1.0));
    }

    #[test]
    fn parse_reverse_dedup() {
        let g = parse_edge_list(Cursor::new("5 7\n7 5\n")).unwrap();
        assert_eq!(g.node_count(), 2);
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.edges()[0].2, 1.0);
    }

    #[test]
    fn parse_drops_self_loops() {
        let g = parse_edge_list(Cursor::new("0 0\n0 1\n")).unwrap();
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.node_count(), 2);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = parse_edge_list(Cursor::new("0 1\nx 2\n")).unwrap_err();
        assert!(matches!(err, SubmaxError::Parse { line: 2, .. }));
        let err = parse_edge_list(Cursor::new("0\n")).unwrap_err();
        assert!(matches!(err, SubmaxError::Parse { line: 1, .. }));
    }

    #[test]
    fn parse_weighted_sums_parallel_edges() {
        let g = parse_edge_list(Cursor::new("0 1 0.5\n1 0 0.25\n")).unwrap();
        assert_eq!(g.edge_count(), 1);
        assert!((g.edges()[0].2 - 0.75).abs() < 1e-12);
    }

    #[test]
    fn round_trip() {
        let g = parse_edge_list(Cursor::new("0 1 0.125\n1 2 3.5\n0 2 1\n")).unwrap();
        let text = g.to_edge_list_text();
        let g2 = parse_edge_list(Cursor::new(text)).unwrap();
        assert_eq!(g, g2);
    }

    #[test]
    fn ba_small_tree() {
        let g = generate_ba(3, 1, RngSeed::new(1)).unwrap();
        assert_eq!(g.edge_count(), 2);
    }

    #[test]
    fn ba_deterministic() {
        let a = generate_ba(50, 3, RngSeed::new(42)).unwrap();
        let b = generate_ba(50, 3, RngSeed::new(42)).unwrap();
        assert_eq!(a, b);
        let c = generate_ba(50, 3, RngSeed::new(43)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn ba_paper_density() {
        let g = generate_ba(968, 6, RngSeed::new(7)).unwrap();
        assert_eq!(g.edge_count(), (968 - 6) * 6); // 5772
        let target = 5708.0;
        let rel = (g.edge_count() as f64 - target).abs() / target;
        assert!(rel < 0.02, "edge count {} not within 2% of {}", g.edge_count(), target);
    }

    #[test]
    fn ba_rejects_bad_params() {
        assert!(generate_ba(3, 3, RngSeed::new(0)).is_err());
        assert!(generate_ba(5, 0, RngSeed::new(0)).is_err());
    }

    #[test]
    fn revenue_model_deterministic_and_open_interval() {
        let g = generate_ba(100, 4, RngSeed::new(3)).unwrap();
        let m1 = build_revenue_model(&g, RngSeed::new(9));
        let m2 = build_revenue_model(&g, RngSeed::new(9));
        assert_eq!(m1.graph(), m2.graph());
        assert_eq!(m1.exponents(), m2.exponents());
        assert!(m1.graph().edges().iter().all(|e| e.2 > 0.0 && e.2 < 1.0));
        assert!(m1.exponents().iter().all(|&a| a > 0.0 && a < 1.0));
    }

    #[test]
    fn uniform_weights_mean_half() {
        // law-of-large-numbers check on the weight stream
        let mut rng = RngSeed::new(11).rng();
        let n = 100_000;
        let mean: f64 = (0..n).map(|_| open_unit(&mut rng)).sum::<f64>() / n as f64;
        assert!((mean - 0.5).abs() < 0.01, "mean {mean}");
    }

    #[test]
    fn seed_children_are_distinct() {
        let s = RngSeed::new(5);
        let a = s.child(0);
        let b = s.child(1);
        assert_ne!(a, b);
        assert_ne!(a.rng().random::<u64>(), b.rng().random::<u64>());
    }
}
