//! Local maximum-likelihood refinement and consensus.

use rayon::prelude::*;

use crate::error::{HsbmError, Result};
use crate::model::{Assignment, Hypergraph};
use crate::relations::{binomial, RelationTable};
use crate::spectral::{spectral_init, SpectralConfig};

/// Relative tolerance under which two log-likelihoods count as tied.
const TIE_TOLERANCE: f64 = 1e-12;

/// Default probability floor `1 / (2 n^(d-1))`.
pub fn default_clamp(n: usize, d: usize) -> f64 {
    0.5 / (n.max(1) as f64).powi(d as i32 - 1)
}

/// Sample-mean estimates of the relation probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatedParams {
    pub p_hat: Vec<f64>,
    /// Present edges per relation.
    pub present: Vec<u64>,
    /// Candidate `d`-subsets per relation.
    pub total: Vec<u128>,
    pub eps: f64,
}

/// Estimates `p_i` as (edges of relation `i`) / (subsets of relation `i`)
/// under the labelling `a`, clamped to `[eps, 1 - eps]`. Relations with no
/// subsets fall back to the global edge density.
pub fn estimate_params(
    h: &Hypergraph,
    a: &Assignment,
    table: &RelationTable,
    eps: Option<f64>,
) -> Result<EstimatedParams> {
    if a.len() != h.n() {
        return Err(HsbmError::invalid("assignment length differs from node count"));
    }
    if a.k() != table.communities() || h.d() != table.order() {
        return Err(HsbmError::invalid("relation table does not match assignment/hypergraph"));
    }
    let eps = eps.unwrap_or_else(|| default_clamp(h.n(), h.d()));
    let total = table.context_counts(&a.sizes(), &[]);
    let mut present = vec![0u64; table.len()];
    let mut tuple = vec![0usize; h.d()];
    for e in h.edges() {
        for (slot, &v) in tuple.iter_mut().zip(e) {
            *slot = a.label(v as usize);
        }
        present[table.relation_of_unchecked(&tuple)] += 1;
    }
    let all = binomial(h.n() as u64, h.d() as u64);
    let density = if all == 0 {
        0.0
    } else {
        h.edge_count() as f64 / all as f64
    };
    let clamp = |x: f64| x.max(eps).min(1.0 - eps);
    let p_hat = present
        .iter()
        .zip(&total)
        .map(|(&c, &t)| {
            if t == 0 {
                clamp(density)
            } else {
                clamp(c as f64 / t as f64)
            }
        })
        .collect();
    Ok(EstimatedParams {
        p_hat,
        present,
        total,
        eps,
    })
}

/// Global log-likelihood `L(σ; A)` in nats.
pub fn global_log_likelihood(
    h: &Hypergraph,
    a: &Assignment,
    table: &RelationTable,
    p: &[f64],
) -> f64 {
    let total = table.context_counts(&a.sizes(), &[]);
    let mut present = vec![0u128; table.len()];
    let mut tuple = vec![0usize; h.d()];
    for e in h.edges() {
        for (slot, &v) in tuple.iter_mut().zip(e) {
            *slot = a.label(v as usize);
        }
        present[table.relation_of_unchecked(&tuple)] += 1;
    }
    likelihood_from_counts(&present, &total, p)
}

fn likelihood_from_counts(present: &[u128], total: &[u128], p: &[f64]) -> f64 {
    present
        .iter()
        .zip(total)
        .zip(p)
        .map(|((&c, &t), &q)| {
            let absent = t - c;
            let mut s = 0.0;
            if c > 0 {
                s += c as f64 * q.ln();
            }
            if absent > 0 {
                s += absent as f64 * (1.0 - q).ln();
            }
            s
        })
        .sum()
}

/// Evaluates node-local log-likelihoods `L_u(σ, t; A)` for a fixed
/// labelling. Absent-edge mass comes from per-relation subset counts, so
/// only the edges incident to `u` are visited.
pub struct LocalLikelihood<'a> {
    h: &'a Hypergraph,
    a: &'a Assignment,
    table: &'a RelationTable,
    p: &'a [f64],
    incident: Vec<Vec<usize>>,
    /// `context[s][t]`: relation counts of `(d-1)`-subsets of the other
    /// nodes when the node's own community is `s` and it is labelled `t`.
    context: Vec<Vec<Vec<u128>>>,
}

impl<'a> LocalLikelihood<'a> {
    pub fn new(
        h: &'a Hypergraph,
        a: &'a Assignment,
        table: &'a RelationTable,
        p: &'a [f64],
    ) -> Result<Self> {
        if a.len() != h.n() {
            return Err(HsbmError::invalid("assignment length differs from node count"));
        }
        if a.k() != table.communities() || h.d() != table.order() {
            return Err(HsbmError::invalid("relation table does not match assignment/hypergraph"));
        }
        if p.len() != table.len() {
            return Err(HsbmError::invalid("probability vector length does not match relation count"));
        }
        let k = a.k();
        let sizes = a.sizes();
        let context = (0..k)
            .map(|s| {
                if sizes[s] == 0 {
                    return Vec::new();
                }
                let mut others = sizes.clone();
                others[s] -= 1;
                (0..k).map(|t| table.context_counts(&others, &[t])).collect()
            })
            .collect();
        Ok(Self {
            h,
            a,
            table,
            p,
            incident: h.incidence(),
            context,
        })
    }

    pub fn value(&self, u: usize, t: usize) -> Result<f64> {
        if u >= self.h.n() {
            return Err(HsbmError::invalid(format!("node {u} out of range")));
        }
        if t >= self.a.k() {
            return Err(HsbmError::invalid(format!("label {t} out of range")));
        }
        Ok(self.value_unchecked(u, t))
    }

    fn value_unchecked(&self, u: usize, t: usize) -> f64 {
        let mut present = vec![0u128; self.table.len()];
        let mut tuple = Vec::with_capacity(self.h.d());
        for &ei in &self.incident[u] {
            tuple.clear();
            tuple.push(t);
            tuple.extend(
                self.h
                    .edge(ei)
                    .iter()
                    .filter(|&&v| v as usize != u)
                    .map(|&v| self.a.label(v as usize)),
            );
            present[self.table.relation_of_unchecked(&tuple)] += 1;
        }
        likelihood_from_counts(&present, &self.context[self.a.label(u)][t], self.p)
    }

    /// Label maximising the local likelihood; ties keep the current label,
    /// then take the lowest.
    pub fn best_label(&self, u: usize) -> usize {
        let current = self.a.label(u);
        let values: Vec<f64> = (0..self.a.k()).map(|t| self.value_unchecked(u, t)).collect();
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let tied = |x: f64| (max - x) <= TIE_TOLERANCE * max.abs().max(1.0);
        if tied(values[current]) {
            return current;
        }
        values.iter().position(|&x| tied(x)).unwrap_or(current)
    }
}

pub fn local_log_likelihood(
    h: &Hypergraph,
    a: &Assignment,
    u: usize,
    t: usize,
    table: &RelationTable,
    p: &[f64],
) -> Result<f64> {
    LocalLikelihood::new(h, a, table, p)?.value(u, t)
}

pub fn local_mle(
    h: &Hypergraph,
    a: &Assignment,
    u: usize,
    table: &RelationTable,
    p: &[f64],
) -> Result<usize> {
    if u >= h.n() {
        return Err(HsbmError::invalid(format!("node {u} out of range")));
    }
    Ok(LocalLikelihood::new(h, a, table, p)?.best_label(u))
}

/// Removes node `u` and every edge through it. Surviving ids are compacted
/// in order; the returned map sends new ids to original ids.
pub fn hypergraph_minus_node(h: &Hypergraph, u: usize) -> Result<(Hypergraph, Vec<usize>)> {
    if u >= h.n() {
        return Err(HsbmError::invalid(format!("node {u} out of range")));
    }
    let map: Vec<usize> = (0..h.n()).filter(|&v| v != u).collect();
    let u32_u = u as u32;
    let nodes: Vec<u32> = h
        .edges()
        .filter(|e| !e.contains(&u32_u))
        .flatten()
        .map(|&v| if v > u32_u { v - 1 } else { v })
        .collect();
    Ok((Hypergraph::from_canonical(h.n() - 1, h.d(), nodes), map))
}

/// Aligns `n` leave-one-out labellings: node 0 keeps its label from the
/// first labelling; node `u` takes the community of the first labelling
/// that overlaps most with `u`'s own community in labelling `u`.
pub fn consensus(assignments: &[Assignment]) -> Result<Assignment> {
    let n = assignments.len();
    if n == 0 {
        return Err(HsbmError::invalid("consensus needs at least one assignment"));
    }
    let k = assignments[0].k();
    if assignments.iter().any(|a| a.len() != n || a.k() != k) {
        return Err(HsbmError::invalid("consensus needs n assignments over the same n nodes and k"));
    }
    let reference = assignments[0].labels();
    let mut labels = vec![0usize; n];
    labels[0] = reference[0];
    for u in 1..n {
        let own = assignments[u].labels();
        let mut overlap = vec![0usize; k];
        for v in 0..n {
            if own[v] == own[u] {
                overlap[reference[v]] += 1;
            }
        }
        let mut best = 0;
        for t in 1..k {
            if overlap[t] > overlap[best] {
                best = t;
            }
        }
        labels[u] = best;
    }
    Ok(Assignment::new_unchecked(labels, k))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    /// One spectral initialisation and one synchronous refinement sweep.
    #[default]
    Simplified,
    /// Leave-one-out initialisation per node followed by consensus.
    Full,
}

impl std::str::FromStr for Mode {
    type Err = HsbmError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "simplified" => Ok(Mode::Simplified),
            "full" => Ok(Mode::Full),
            other => Err(HsbmError::invalid(format!("unknown mode {other:?}"))),
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Simplified => "simplified",
            Mode::Full => "full",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DetectConfig {
    pub mode: Mode,
    pub spectral: SpectralConfig,
    /// Probability floor; `None` uses [`default_clamp`].
    pub eps: Option<f64>,
}

/// One synchronous refinement sweep against a frozen labelling, with
/// parameters estimated from that labelling.
pub fn refine_sweep(
    h: &Hypergraph,
    init: &Assignment,
    table: &RelationTable,
    eps: Option<f64>,
) -> Result<Assignment> {
    let est = estimate_params(h, init, table, eps)?;
    let ll = LocalLikelihood::new(h, init, table, &est.p_hat)?;
    let labels = (0..h.n()).into_par_iter().map(|u| ll.best_label(u)).collect();
    Ok(Assignment::new_unchecked(labels, init.k()))
}

/// Full two-step community detection.
pub fn detect(h: &Hypergraph, k: usize, cfg: &DetectConfig) -> Result<Assignment> {
    if k < 2 {
        return Err(HsbmError::invalid(format!("detection needs k >= 2 (got {k})")));
    }
    let table = RelationTable::new(h.d(), k)?;
    match cfg.mode {
        Mode::Simplified => {
            let init = spectral_init(h, k, &cfg.spectral)?;
            refine_sweep(h, &init, &table, cfg.eps)
        }
        Mode::Full => {
            let n = h.n();
            if n <= k {
                return Err(HsbmError::invalid(format!("full mode needs n > k (n = {n}, k = {k})")));
            }
            let per_node: Vec<Assignment> = (0..n)
                .into_par_iter()
                .map(|u| -> Result<Assignment> {
                    let (sub, map) = hypergraph_minus_node(h, u)?;
                    let init = spectral_init(&sub, k, &cfg.spectral)?;
                    let est = estimate_params(&sub, &init, &table, cfg.eps)?;
                    let mut labels = vec![0usize; n];
                    for (new, &old) in map.iter().enumerate() {
                        labels[old] = init.label(new);
                    }
                    // u's provisional label only matters for the tie rule
                    let provisional = Assignment::new_unchecked(labels, k);
                    let own = LocalLikelihood::new(h, &provisional, &table, &est.p_hat)?.best_label(u);
                    let mut labels = provisional.into_labels();
                    labels[u] = own;
                    Ok(Assignment::new_unchecked(labels, k))
                })
                .collect::<Result<_>>()?;
            consensus(&per_node)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{balanced_assignment, sample_hypergraph, ModelParams, DEFAULT_SAMPLE_BUDGET};

    #[test]
    fn empty_hypergraph_estimates_floor() {
        let h = Hypergraph::empty(10, 3);
        let a = balanced_assignment(10, 2).unwrap();
        let t = RelationTable::new(3, 2).unwrap();
        let est = estimate_params(&h, &a, &t, None).unwrap();
        assert!(est.p_hat.iter().all(|&p| p == est.eps));
        assert_eq!(est.eps, 1.0 / 200.0);
    }

    #[test]
    fn degenerate_labelling_uses_density() {
        let h = Hypergraph::new(6, 3, vec![vec![0, 1, 2], vec![3, 4, 5]]).unwrap();
        let a = Assignment::uniform(6, 2);
        let t = RelationTable::new(3, 2).unwrap();
        let est = estimate_params(&h, &a, &t, Some(1e-6)).unwrap();
        assert_eq!(est.total, vec![20, 0]);
        assert_eq!(est.p_hat[0], 2.0 / 20.0);
        assert_eq!(est.p_hat[1], 2.0 / 20.0);
    }

    #[test]
    fn exact_sample_mean_when_unclamped() {
        let a = balanced_assignment(20, 2).unwrap();
        let params = ModelParams::new(20, 2, 3, 0.5, vec![0.3, 0.1]).unwrap();
        let h = sample_hypergraph(&params, &a, 5, DEFAULT_SAMPLE_BUDGET).unwrap();
        let t = params.table().unwrap();
        let est = estimate_params(&h, &a, &t, None).unwrap();
        for i in 0..2 {
            assert_eq!(est.p_hat[i], est.present[i] as f64 / est.total[i] as f64);
        }
        assert_eq!(est.present.iter().sum::<u64>() as usize, h.edge_count());
    }

    #[test]
    fn half_probability_single_candidate() {
        // n = 3, d = 3: node 0 has exactly one candidate edge
        let t = RelationTable::new(3, 2).unwrap();
        let a = Assignment::new(vec![0, 0, 1], 2).unwrap();
        let p = [0.5, 0.5];
        for h in [Hypergraph::empty(3, 3), Hypergraph::new(3, 3, vec![vec![0, 1, 2]]).unwrap()] {
            let v = local_log_likelihood(&h, &a, 0, 0, &t, &p).unwrap();
            assert!((v - 0.5f64.ln()).abs() < 1e-15);
        }
    }

    #[test]
    fn argument_errors() {
        let t = RelationTable::new(3, 2).unwrap();
        let h = Hypergraph::empty(5, 3);
        let a = Assignment::uniform(5, 2);
        assert!(local_log_likelihood(&h, &a, 5, 0, &t, &[0.5, 0.5]).is_err());
        assert!(local_log_likelihood(&h, &a, 0, 2, &t, &[0.5, 0.5]).is_err());
        assert!(hypergraph_minus_node(&h, 7).is_err());
    }

    #[test]
    fn isolated_node_keeps_label() {
        let t = RelationTable::new(3, 2).unwrap();
        let h = Hypergraph::new(9, 3, vec![vec![1, 2, 3]]).unwrap();
        let a = Assignment::new(vec![1, 0, 0, 0, 0, 1, 1, 1, 1], 2).unwrap();
        // sizes excluding node 0 are (4, 4): both candidate labels are symmetric
        assert_eq!(local_mle(&h, &a, 0, &t, &[0.2, 0.05]).unwrap(), 1);
    }

    #[test]
    fn minus_node_examples() {
        let h = Hypergraph::new(5, 3, vec![vec![1, 2, 3], vec![2, 3, 4]]).unwrap();
        let (s, map) = hypergraph_minus_node(&h, 0).unwrap();
        assert_eq!(s.n(), 4);
        assert_eq!(s.edges().collect::<Vec<_>>(), vec![&[0, 1, 2][..], &[1, 2, 3][..]]);
        assert_eq!(map, vec![1, 2, 3, 4]);

        let (s, _) = hypergraph_minus_node(&h, 2).unwrap();
        assert_eq!(s.edge_count(), 0);

        let h = Hypergraph::new(4, 3, vec![vec![0, 1, 2], vec![1, 2, 3]]).unwrap();
        let (s, map) = hypergraph_minus_node(&h, 0).unwrap();
        assert_eq!(s.edges().collect::<Vec<_>>(), vec![&[0, 1, 2][..]]);
        assert_eq!(map, vec![1, 2, 3]);
    }

    #[test]
    fn consensus_examples() {
        let base = balanced_assignment(12, 3).unwrap();
        let same = vec![base.clone(); 12];
        assert_eq!(consensus(&same).unwrap(), base);

        let perms = [[0, 1, 2], [1, 2, 0], [2, 0, 1], [0, 2, 1], [1, 0, 2], [2, 1, 0]];
        let copies: Vec<Assignment> = (0..12)
            .map(|u| base.permuted(&perms[(u * 5 + 1) % 6]).unwrap())
            .collect();
        let want = base.permuted(&perms[1]).unwrap();
        assert_eq!(consensus(&copies).unwrap(), want);

        let ones = vec![Assignment::uniform(4, 1); 4];
        assert_eq!(consensus(&ones).unwrap().labels(), &[0; 4]);
    }

    #[test]
    fn no_signal_still_labels() {
        let a = balanced_assignment(40, 2).unwrap();
        let params = ModelParams::new(40, 2, 3, 0.5, vec![0.05, 0.05]).unwrap();
        let h = sample_hypergraph(&params, &a, 3, DEFAULT_SAMPLE_BUDGET).unwrap();
        for mode in [Mode::Simplified, Mode::Full] {
            let cfg = DetectConfig {
                mode,
                ..Default::default()
            };
            let est = detect(&h, 2, &cfg).unwrap();
            assert_eq!(est.len(), 40);
            assert!(est.labels().iter().all(|&l| l < 2));
        }
    }
}
