//! Benchmark objectives: cardinality-constrained max-cut and concave-graph
//! revenue, plus the multilinear-extension oracles for max-cut and a few
//! synthetic functions used by the verification suites.

use rand::Rng;

use crate::error::{Result, SubmaxError};
use crate::graph::Graph;
use crate::oracle::{evaluate_batch, Oracle, QueryLedger, SetFunction, Subset};

/// Weighted max-cut: `f(S)` is the total weight of edges with exactly one
/// endpoint in `S`. Non-monotone and submodular.
pub struct MaxCut {
    graph: Graph,
    adj: Vec<Vec<(usize, f64)>>,
    wdeg: Vec<f64>,
}

impl MaxCut {
    pub fn new(graph: Graph) -> Self {
        let adj = graph.adjacency();
        let wdeg = adj.iter().map(|a| a.iter().map(|e| e.1).sum()).collect();
        MaxCut { graph, adj, wdeg }
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }
}

impl SetFunction for MaxCut {
    fn ground_size(&self) -> usize {
        self.graph.node_count()
    }

    // Sum of weighted degrees in S minus twice the weight inside S;
    // cost O(sum of degrees over S).
    fn value(&self, s: &Subset) -> f64 {
        let mut total = 0.0;
        let mut internal_twice = 0.0;
        for u in s.iter() {
            total += self.wdeg[u];
            for &(v, w) in &self.adj[u] {
                if s.contains(v) {
                    internal_twice += w;
                }
            }
        }
        total - internal_twice
    }
}

/// Convenience wrapper for callers holding a bare graph.
pub fn maxcut_value(g: &Graph, s: &Subset) -> f64 {
    MaxCut::new(g.clone()).value(s)
}

/// Concave-graph revenue model: a seeded set `S` yields
/// `f(S) = Σ_{i ∉ S} (Σ_{j ∈ S} w_ij)^{α_i}` with per-node exponents
/// `α_i ∈ (0,1)` and edge weights in `(0,1)`.
pub struct RevenueModel {
    graph: Graph,
    adj: Vec<Vec<(usize, f64)>>,
    alphas: Vec<f64>,
}

impl RevenueModel {
    pub fn new(graph: Graph, alphas: Vec<f64>) -> Result<Self> {
        if alphas.len() != graph.node_count() {
            return Err(SubmaxError::InvalidInput("one exponent per node required".into()));
        }
        if alphas.iter().any(|&a| !(0.0 < a && a < 1.0)) {
            return Err(SubmaxError::InvalidInput("exponents must lie in (0,1)".into()));
        }
        if graph.edges().iter().any(|e| !(0.0 < e.2 && e.2 < 1.0)) {
            return Err(SubmaxError::InvalidInput("edge weights must lie in (0,1)".into()));
        }
        let adj = graph.adjacency();
        Ok(RevenueModel { graph, adj, alphas })
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn exponents(&self) -> &[f64] {
        &self.alphas
    }
}

impl SetFunction for RevenueModel {
    fn ground_size(&self) -> usize {
        self.graph.node_count()
    }

    fn value(&self, s: &Subset) -> f64 {
        // Accumulate incident seed weight per outside node, then apply the
        // concave per-node exponent. Empty inner sums contribute 0.
        let mut load = vec![0.0f64; self.graph.node_count()];
        let mut touched = Vec::new();
        for j in s.iter() {
            for &(i, w) in &self.adj[j] {
                if !s.contains(i) {
                    if load[i] == 0.0 {
                        touched.push(i);
                    }
                    load[i] += w;
                }
            }
        }
        touched.iter().map(|&i| load[i].powf(self.alphas[i])).sum()
    }
}

pub fn revenue_value(model: &RevenueModel, s: &Subset) -> f64 {
    model.value(s)
}

/// Modular (additive) function `f(S) = offset + Σ_{i∈S} w_i`. Test objective.
pub struct Modular {
    weights: Vec<f64>,
    offset: f64,
}

impl Modular {
    pub fn new(weights: Vec<f64>) -> Self {
        Modular { weights, offset: 0.0 }
    }

    pub fn with_offset(weights: Vec<f64>, offset: f64) -> Self {
        Modular { weights, offset }
    }

    pub fn unit(n: usize) -> Self {
        Modular::new(vec![1.0; n])
    }
}

impl SetFunction for Modular {
    fn ground_size(&self) -> usize {
        self.weights.len()
    }

    fn value(&self, s: &Subset) -> f64 {
        self.offset + s.iter().map(|i| self.weights[i]).sum::<f64>()
    }
}

/// Weighted coverage: element `i` covers a subset of a universe;
/// `f(S)` is the number of universe items covered. Monotone submodular.
pub struct Coverage {
    covers: Vec<Vec<usize>>,
    universe: usize,
}

impl Coverage {
    pub fn new(universe: usize, covers: Vec<Vec<usize>>) -> Self {
        Coverage { covers, universe }
    }
}

impl SetFunction for Coverage {
    fn ground_size(&self) -> usize {
        self.covers.len()
    }

    fn value(&self, s: &Subset) -> f64 {
        let mut hit = vec![false; self.universe];
        let mut count = 0usize;
        for i in s.iter() {
            for &u in &self.covers[i] {
                if !hit[u] {
                    hit[u] = true;
                    count += 1;
                }
            }
        }
        count as f64
    }
}

/// A point of the solvable relaxation: `x ∈ [0,1]^n`.
#[derive(Clone, Debug, PartialEq)]
pub struct FractionalPoint {
    x: Vec<f64>,
}

impl FractionalPoint {
    pub fn new(x: Vec<f64>) -> Result<Self> {
        if let Some(bad) = x.iter().find(|&&v| !(0.0..=1.0).contains(&v)) {
            return Err(SubmaxError::InvalidInput(format!("coordinate {bad} outside [0,1]")));
        }
        Ok(FractionalPoint { x })
    }

    pub fn indicator(s: &Subset) -> Self {
        let mut x = vec![0.0; s.ground_size()];
        for i in s.iter() {
            x[i] = 1.0;
        }
        FractionalPoint { x }
    }

    pub fn coords(&self) -> &[f64] {
        &self.x
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
}

/// Closed-form multilinear extension of weighted max-cut:
/// each edge contributes `w · (x_u(1−x_v) + x_v(1−x_u))`.
pub fn multilinear_maxcut(g: &Graph, x: &FractionalPoint) -> Result<f64> {
    if x.len() != g.node_count() {
        return Err(SubmaxError::InvalidInput("dimension mismatch".into()));
    }
    let x = x.coords();
    Ok(g.edges()
        .iter()
        .map(|&(u, v, w)| w * (x[u] * (1.0 - x[v]) + x[v] * (1.0 - x[u])))
        .sum())
}

/// Closed-form gradient: `(∇F)_u = Σ_{v∈N(u)} w_uv (1 − 2 x_v)`.
pub fn multilinear_maxcut_grad(g: &Graph, x: &FractionalPoint) -> Result<Vec<f64>> {
    if x.len() != g.node_count() {
        return Err(SubmaxError::InvalidInput("dimension mismatch".into()));
    }
    let xs = x.coords();
    let mut grad = vec![0.0; g.node_count()];
    for &(u, v, w) in g.edges() {
        grad[u] += w * (1.0 - 2.0 * xs[v]);
        grad[v] += w * (1.0 - 2.0 * xs[u]);
    }
    Ok(grad)
}

/// Monte-Carlo estimate of the multilinear extension: mean of `f` over
/// `samples` random sets including `i` independently with probability `x_i`.
/// Consumes `samples` queries in one adaptive round.
pub fn multilinear_estimate<R: Rng>(
    oracle: &Oracle,
    x: &FractionalPoint,
    samples: usize,
    rng: &mut R,
    ledger: &QueryLedger,
) -> Result<f64> {
    if samples == 0 {
        return Err(SubmaxError::InvalidInput("samples must be >= 1".into()));
    }
    let n = x.len();
    let mut sets = Vec::with_capacity(samples);
    for _ in 0..samples {
        let mut s = Subset::empty(n);
        for (i, &p) in x.coords().iter().enumerate() {
            if rng.random::<f64>() < p {
                s.insert(i);
            }
        }
        sets.push(s);
    }
    let vals = evaluate_batch(oracle, &sets, ledger)?;
    Ok(vals.iter().sum::<f64>() / samples as f64)
}

/// Per-coordinate central difference of `f` with step `gamma`, falling back
/// to a one-sided difference when `x_i ± gamma/2` would leave `[0,1]`.
pub fn grad_central_difference<F>(f: F, x: &FractionalPoint, gamma: f64) -> Result<Vec<f64>>
where
    F: Fn(&FractionalPoint) -> Result<f64>,
{
    if gamma <= 0.0 {
        return Err(SubmaxError::InvalidInput("gamma must be positive".into()));
    }
    let mut grad = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        let xi = x.coords()[i];
        let (lo, hi) = if xi - gamma / 2.0 < 0.0 {
            (xi, (xi + gamma).min(1.0))
        } else if xi + gamma / 2.0 > 1.0 {
            ((xi - gamma).max(0.0), xi)
        } else {
            (xi - gamma / 2.0, xi + gamma / 2.0)
        };
        let at = |v: f64| -> Result<f64> {
            let mut coords = x.coords().to_vec();
            coords[i] = v;
            f(&FractionalPoint::new(coords)?)
        };
        grad.push((at(hi)? - at(lo)?) / (hi - lo));
    }
    Ok(grad)
}
