//! Model parameters, community assignments, hypergraphs and the sampler.

use std::fmt;

use rayon::prelude::*;

use crate::error::{HsbmError, Result};
use crate::relations::{binomial, RelationTable};
use crate::seed::stream_uniform;

/// Default cap on the number of candidate subsets the sampler enumerates.
pub const DEFAULT_SAMPLE_BUDGET: u128 = 100_000_000;

/// Parameters of a d-uniform hypergraph stochastic block model.
///
/// `p[i]` is the edge probability of relation `i` of the `(d, k)` relation
/// table. Probabilities are only required to lie in `[0, 1]` here;
/// [`validate_params`] reports the stricter modelling conditions.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub n: usize,
    pub k: usize,
    pub d: usize,
    pub eta: f64,
    pub p: Vec<f64>,
}

impl ModelParams {
    pub fn new(n: usize, k: usize, d: usize, eta: f64, p: Vec<f64>) -> Result<Self> {
        let table = RelationTable::new(d, k)?;
        if n < k {
            return Err(HsbmError::invalid(format!("need n >= k (n = {n}, k = {k})")));
        }
        if p.len() != table.len() {
            return Err(HsbmError::invalid(format!(
                "expected {} probabilities for d = {d}, k = {k}, got {}",
                table.len(),
                p.len()
            )));
        }
        if let Some(bad) = p.iter().find(|x| !(0.0..=1.0).contains(*x)) {
            return Err(HsbmError::invalid(format!("probability {bad} is not in [0, 1]")));
        }
        if !eta.is_finite() || eta < 0.0 {
            return Err(HsbmError::invalid(format!("eta must be a non-negative number (got {eta})")));
        }
        Ok(Self { n, k, d, eta, p })
    }

    /// Probabilities `a_i / n^(d-1)`.
    pub fn from_scaled(n: usize, k: usize, d: usize, eta: f64, a: &[f64]) -> Result<Self> {
        let scale = (n as f64).powi(d as i32 - 1);
        Self::new(n, k, d, eta, a.iter().map(|x| x / scale).collect())
    }

    pub fn table(&self) -> Result<RelationTable> {
        RelationTable::new(self.d, self.k)
    }

    /// Typical community size `⌊n/k⌋`.
    pub fn base_size(&self) -> usize {
        self.n / self.k
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    ProbabilityOutOfRange { index: usize, value: f64 },
    EtaTooSmall { eta: f64, min: f64 },
    NotMonotone { i: usize, j: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::ProbabilityOutOfRange { index, value } => {
                write!(f, "probability outside (0,1): p[{}] = {value}", index + 1)
            }
            Violation::EtaTooSmall { eta, min } => {
                write!(f, "eta = {eta} is below 1/floor(n/k) = {min}")
            }
            Violation::NotMonotone { i, j } => {
                write!(f, "monotonicity: p[{}] < p[{}]", i + 1, j + 1)
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Diagnostics {
    pub violations: Vec<Violation>,
}

impl Diagnostics {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Reports modelling-condition violations. Never fails.
pub fn validate_params(params: &ModelParams, strict_monotone: bool) -> Diagnostics {
    let mut violations = Vec::new();
    for (index, &value) in params.p.iter().enumerate() {
        if !(value > 0.0 && value < 1.0) {
            violations.push(Violation::ProbabilityOutOfRange { index, value });
        }
    }
    let base = params.base_size();
    let min = if base == 0 { f64::INFINITY } else { 1.0 / base as f64 };
    if params.eta < min {
        violations.push(Violation::EtaTooSmall { eta: params.eta, min });
    }
    if strict_monotone {
        for i in 0..params.p.len() {
            for j in i + 1..params.p.len() {
                if params.p[i] < params.p[j] {
                    violations.push(Violation::NotMonotone { i, j });
                }
            }
        }
    }
    Diagnostics { violations }
}

/// A labelling of `n` nodes with communities `0..k`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Assignment {
    labels: Vec<usize>,
    k: usize,
}

impl Assignment {
    pub fn new(labels: Vec<usize>, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(HsbmError::invalid("k must be positive"));
        }
        if let Some(&l) = labels.iter().find(|&&l| l >= k) {
            return Err(HsbmError::invalid(format!("label {l} out of range for k = {k}")));
        }
        Ok(Self { labels, k })
    }

    pub(crate) fn new_unchecked(labels: Vec<usize>, k: usize) -> Self {
        debug_assert!(labels.iter().all(|&l| l < k));
        Self { labels, k }
    }

    /// All nodes in community 0.
    pub fn uniform(n: usize, k: usize) -> Self {
        Self { labels: vec![0; n], k }
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn label(&self, v: usize) -> usize {
        self.labels[v]
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }

    /// Whether every community size lies in `[(1-η)n', (1+η)n']`.
    pub fn is_balanced(&self, eta: f64) -> bool {
        let base = (self.len() / self.k) as f64;
        let (lo, hi) = ((1.0 - eta) * base, (1.0 + eta) * base);
        self.sizes().iter().all(|&s| (s as f64) >= lo && (s as f64) <= hi)
    }

    /// Applies a label permutation: node `v` gets `perm[label(v)]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.k {
            return Err(HsbmError::invalid("permutation length must equal k"));
        }
        Self::new(self.labels.iter().map(|&l| perm[l]).collect(), self.k)
    }

    pub fn into_labels(self) -> Vec<usize> {
        self.labels
    }
}

/// Round-robin labelling `v mod k`: sizes are `⌊n/k⌋` or `⌊n/k⌋ + 1`, with
/// the larger communities on the lowest labels.
pub fn balanced_assignment(n: usize, k: usize) -> Result<Assignment> {
    if k == 0 || n < k {
        return Err(HsbmError::invalid(format!("need n >= k >= 1 (n = {n}, k = {k})")));
    }
    Ok(Assignment::new_unchecked((0..n).map(|v| v % k).collect(), k))
}

/// A d-uniform hypergraph stored as a flat, lexicographically sorted list of
/// strictly increasing node tuples.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Hypergraph {
    n: usize,
    d: usize,
    nodes: Vec<u32>,
}

impl Hypergraph {
    /// Builds a hypergraph from edges given in any order. Each edge is
    /// sorted; repeated nodes, out-of-range ids and duplicate edges are
    /// rejected.
    pub fn new(n: usize, d: usize, edges: impl IntoIterator<Item = Vec<usize>>) -> Result<Self> {
        if d == 0 {
            return Err(HsbmError::invalid("hyperedge order must be positive"));
        }
        if n > u32::MAX as usize {
            return Err(HsbmError::invalid("too many nodes"));
        }
        let mut list: Vec<Vec<u32>> = Vec::new();
        for mut e in edges {
            if e.len() != d {
                return Err(HsbmError::invalid(format!(
                    "edge {e:?} has {} nodes, expected {d}",
                    e.len()
                )));
            }
            e.sort_unstable();
            if e.windows(2).any(|w| w[0] == w[1]) {
                return Err(HsbmError::invalid(format!("edge {e:?} repeats a node")));
            }
            if e[d - 1] >= n {
                return Err(HsbmError::invalid(format!("edge {e:?} has a node id >= n = {n}")));
            }
            list.push(e.into_iter().map(|v| v as u32).collect());
        }
        list.sort_unstable();
        if list.windows(2).any(|w| w[0] == w[1]) {
            return Err(HsbmError::invalid("duplicate edge"));
        }
        Ok(Self {
            n,
            d,
            nodes: list.concat(),
        })
    }

    pub fn empty(n: usize, d: usize) -> Self {
        Self { n, d, nodes: Vec::new() }
    }

    /// Flat edge data that is already canonical (sorted tuples, sorted list,
    /// no duplicates).
    pub(crate) fn from_canonical(n: usize, d: usize, nodes: Vec<u32>) -> Self {
        debug_assert_eq!(nodes.len() % d, 0);
        Self { n, d, nodes }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn edge_count(&self) -> usize {
        self.nodes.len() / self.d
    }

    pub fn edge(&self, i: usize) -> &[u32] {
        &self.nodes[i * self.d..(i + 1) * self.d]
    }

    pub fn edges(&self) -> impl ExactSizeIterator<Item = &[u32]> + '_ {
        self.nodes.chunks_exact(self.d)
    }

    /// Edge ids incident to each node.
    pub fn incidence(&self) -> Vec<Vec<usize>> {
        let mut inc = vec![Vec::new(); self.n];
        for (i, e) in self.edges().enumerate() {
            for &v in e {
                inc[v as usize].push(i);
            }
        }
        inc
    }
}

/// Probability that the given `d` distinct nodes form an edge.
pub fn edge_probability(
    nodes: &[usize],
    assignment: &Assignment,
    params: &ModelParams,
    table: &RelationTable,
) -> Result<f64> {
    for (i, v) in nodes.iter().enumerate() {
        if *v >= assignment.len() {
            return Err(HsbmError::invalid(format!("node {v} out of range")));
        }
        if nodes[..i].contains(v) {
            return Err(HsbmError::invalid(format!("node {v} repeated")));
        }
    }
    let labels: Vec<usize> = nodes.iter().map(|&v| assignment.label(v)).collect();
    Ok(params.p[table.relation_of(&labels)?])
}

/// Draws one hypergraph: an independent Bernoulli trial for every `d`-subset.
///
/// The trial for the subset with colexicographic rank `r` uses
/// `stream_uniform(seed, r)`, so the result does not depend on how the work
/// is split across threads. Fails if `C(n, d)` exceeds `budget`.
pub fn sample_hypergraph(
    params: &ModelParams,
    assignment: &Assignment,
    seed: u64,
    budget: u128,
) -> Result<Hypergraph> {
    let (n, d) = (params.n, params.d);
    if assignment.len() != n || assignment.k() != params.k {
        return Err(HsbmError::invalid("assignment does not match model parameters"));
    }
    let table = params.table()?;
    if params.p.len() != table.len() {
        return Err(HsbmError::invalid("probability vector length does not match relation count"));
    }
    let total = binomial(n as u64, d as u64);
    if total > budget {
        return Err(HsbmError::BudgetExceeded {
            what: "hypergraph sampling",
            needed: total,
            limit: budget,
        });
    }
    if n < d {
        return Ok(Hypergraph::empty(n, d));
    }
    let p_max = params.p.iter().copied().fold(0.0, f64::max);
    let labels = assignment.labels();

    // Subsets whose largest element is `top` occupy the colex ranks
    // [C(top, d), C(top + 1, d)).
    let blocks: Vec<Vec<u32>> = (d - 1..n)
        .into_par_iter()
        .map(|top| {
            let mut out = Vec::new();
            let mut rank = binomial(top as u64, d as u64) as u64;
            let mut rest: Vec<usize> = (0..d - 1).collect();
            let mut tuple = vec![0usize; d];
            loop {
                let u = stream_uniform(seed, rank);
                if u < p_max {
                    for (slot, &v) in tuple.iter_mut().zip(rest.iter().chain(Some(&top))) {
                        *slot = labels[v];
                    }
                    if u < params.p[table.relation_of_unchecked(&tuple)] {
                        out.extend(rest.iter().map(|&v| v as u32));
                        out.push(top as u32);
                    }
                }
                rank += 1;
                if !next_colex(&mut rest, top) {
                    break;
                }
            }
            out
        })
        .collect();

    let mut edges: Vec<&[u32]> = blocks.iter().flat_map(|b| b.chunks_exact(d)).collect();
    edges.sort_unstable();
    let nodes = edges.concat();
    Ok(Hypergraph::from_canonical(n, d, nodes))
}

/// Advances a strictly increasing tuple over `[0, bound)` to its colex
/// successor. Returns false after the last tuple.
fn next_colex(c: &mut [usize], bound: usize) -> bool {
    let r = c.len();
    for i in 0..r {
        let limit = if i + 1 < r { c[i + 1] } else { bound };
        if c[i] + 1 < limit {
            c[i] += 1;
            for (j, x) in c[..i].iter_mut().enumerate() {
                *x = j;
            }
            return true;
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn balanced_sizes_examples() {
        assert_eq!(balanced_assignment(10, 2).unwrap().sizes(), vec![5, 5]);
        assert_eq!(balanced_assignment(10, 3).unwrap().sizes(), vec![4, 3, 3]);
        assert_eq!(balanced_assignment(7, 7).unwrap().sizes(), vec![1; 7]);
        assert!(balanced_assignment(3, 4).is_err());
    }

    #[test]
    fn validation_reports() {
        let ok = ModelParams::new(10, 2, 2, 0.5, vec![0.5, 0.1]).unwrap();
        assert!(validate_params(&ok, true).is_clean());

        let zero = ModelParams::new(10, 2, 2, 0.5, vec![0.0, 0.1]).unwrap();
        let diag = validate_params(&zero, false);
        assert_eq!(diag.violations.len(), 1);
        assert!(diag.violations[0].to_string().contains("probability outside (0,1)"));

        let flipped = ModelParams::new(10, 2, 2, 0.5, vec![0.1, 0.5]).unwrap();
        assert!(validate_params(&flipped, false).is_clean());
        assert_eq!(
            validate_params(&flipped, true).violations,
            vec![Violation::NotMonotone { i: 0, j: 1 }]
        );

        let tight = ModelParams::new(10, 2, 2, 0.1, vec![0.5, 0.1]).unwrap();
        assert!(matches!(
            validate_params(&tight, false).violations[0],
            Violation::EtaTooSmall { .. }
        ));
    }

    #[test]
    fn params_reject_wrong_length() {
        assert!(ModelParams::new(10, 2, 3, 0.5, vec![0.5, 0.1, 0.1]).is_err());
        assert!(ModelParams::new(10, 2, 3, 0.5, vec![1.5, 0.1]).is_err());
    }

    #[test]
    fn edge_probability_examples() {
        let params = ModelParams::new(8, 4, 4, 0.5, vec![0.5, 0.4, 0.3, 0.2, 0.1]).unwrap();
        let table = params.table().unwrap();
        let a = Assignment::new(vec![0, 0, 0, 0, 1, 1, 2, 3], 4).unwrap();
        assert_eq!(edge_probability(&[0, 1, 2, 3], &a, &params, &table).unwrap(), 0.5);
        assert_eq!(edge_probability(&[0, 4, 6, 7], &a, &params, &table).unwrap(), 0.1);
        assert_eq!(edge_probability(&[0, 1, 4, 5], &a, &params, &table).unwrap(), 0.3);
        assert!(edge_probability(&[0, 1, 1, 5], &a, &params, &table).is_err());
    }

    #[test]
    fn hypergraph_canonicalises() {
        let h = Hypergraph::new(5, 3, vec![vec![4, 2, 1], vec![0, 1, 2]]).unwrap();
        assert_eq!(h.edge(0), &[0, 1, 2]);
        assert_eq!(h.edge(1), &[1, 2, 4]);
        assert!(Hypergraph::new(5, 3, vec![vec![0, 1, 2], vec![2, 1, 0]]).is_err());
        assert!(Hypergraph::new(5, 3, vec![vec![0, 1, 1]]).is_err());
        assert!(Hypergraph::new(5, 3, vec![vec![0, 1, 5]]).is_err());
    }

    #[test]
    fn colex_walk_visits_every_subset_once() {
        let mut c = vec![0, 1];
        let mut seen = vec![c.clone()];
        while next_colex(&mut c, 5) {
            seen.push(c.clone());
        }
        assert_eq!(seen.len(), 10);
        assert_eq!(seen[..4], [vec![0, 1], vec![0, 2], vec![1, 2], vec![0, 3]]);
    }

    #[test]
    fn degenerate_probabilities() {
        let a = balanced_assignment(12, 2).unwrap();
        let none = ModelParams::new(12, 2, 3, 0.5, vec![0.0, 0.0]).unwrap();
        assert_eq!(sample_hypergraph(&none, &a, 1, DEFAULT_SAMPLE_BUDGET).unwrap().edge_count(), 0);
        let all = ModelParams::new(12, 2, 3, 0.5, vec![1.0, 1.0]).unwrap();
        let h = sample_hypergraph(&all, &a, 1, DEFAULT_SAMPLE_BUDGET).unwrap();
        assert_eq!(h.edge_count(), 220);
        assert!(h.edges().all(|e| e.windows(2).all(|w| w[0] < w[1])));
    }

    #[test]
    fn sampler_respects_budget() {
        let a = balanced_assignment(100, 2).unwrap();
        let params = ModelParams::new(100, 2, 3, 0.5, vec![0.1, 0.1]).unwrap();
        assert!(matches!(
            sample_hypergraph(&params, &a, 0, 1000),
            Err(HsbmError::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn sampling_is_deterministic() {
        let a = balanced_assignment(30, 3).unwrap();
        let params = ModelParams::new(30, 3, 3, 0.5, vec![0.3, 0.1, 0.05]).unwrap();
        let h1 = sample_hypergraph(&params, &a, 99, DEFAULT_SAMPLE_BUDGET).unwrap();
        let h2 = sample_hypergraph(&params, &a, 99, DEFAULT_SAMPLE_BUDGET).unwrap();
        assert_eq!(h1, h2);
        let h3 = sample_hypergraph(&params, &a, 100, DEFAULT_SAMPLE_BUDGET).unwrap();
        assert_ne!(h1, h3);
    }
}
