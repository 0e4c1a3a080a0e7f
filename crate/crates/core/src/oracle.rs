//! Brute-force references for checking the main algorithms.
//!
//! Everything here is written against first definitions and shares no
//! helpers with the code it checks: subsets, histograms, permutations and
//! binomial laws are all enumerated locally. Each routine is guarded by a
//! hard budget so it cannot be run at experiment scale by accident.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use crate::error::{HsbmError, Result};
use crate::model::{Assignment, Hypergraph, ModelParams};
use crate::relations::{ConfusionCoefficients, Histogram, NeighborPairs, PairCoefficient, RelationTable};

pub const MLE_BUDGET: u128 = 10_000_000;
pub const PERMUTATION_BUDGET: u128 = 1_000_000;
pub const SUBSET_BUDGET: u128 = 10_000_000;
pub const TESTING_BUDGET: u128 = 10_000;
pub const SUPPORT_BUDGET: usize = 10_000_000;

fn budget(what: &'static str, needed: u128, limit: u128) -> Result<()> {
    if needed > limit {
        Err(HsbmError::BudgetExceeded { what, needed, limit })
    } else {
        Ok(())
    }
}

/// All `r`-subsets of `pool`, in lexicographic order.
fn subsets(pool: &[usize], r: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(r);
    fn rec(pool: &[usize], start: usize, r: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == r {
            out.push(cur.clone());
            return;
        }
        for i in start..pool.len() {
            if pool.len() - i < r - cur.len() {
                break;
            }
            cur.push(pool[i]);
            rec(pool, i + 1, r, cur, out);
            cur.pop();
        }
    }
    rec(pool, 0, r, &mut cur, &mut out);
    out
}

fn sorted_histogram(labels: &[usize]) -> Vec<usize> {
    let mut counts = vec![0usize; labels.iter().max().map_or(0, |m| m + 1)];
    for &l in labels {
        counts[l] += 1;
    }
    counts.retain(|&c| c > 0);
    counts.sort_unstable_by(|a, b| b.cmp(a));
    counts.resize(labels.len(), 0);
    counts
}

fn index_in(table: &RelationTable, hist: &[usize]) -> usize {
    table
        .histograms()
        .iter()
        .position(|h| h.parts() == hist)
        .expect("histogram missing from relation table")
}

fn subset_count(n: u128, r: u128) -> u128 {
    if r > n {
        return 0;
    }
    (0..r).fold(1u128, |acc, i| acc.saturating_mul(n - i) / (i + 1))
}

/// Global maximum-likelihood labelling by scanning all `k^n` labellings.
/// Ties go to the lexicographically smallest labelling.
pub fn exhaustive_mle(h: &Hypergraph, k: usize, table: &RelationTable, p: &[f64]) -> Result<Assignment> {
    let n = h.n();
    let count = (k as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    budget("exhaustive MLE", count, MLE_BUDGET)?;
    if p.len() != table.len() {
        return Err(HsbmError::invalid("probability vector length does not match relation count"));
    }
    let edges: HashSet<Vec<usize>> = h
        .edges()
        .map(|e| e.iter().map(|&v| v as usize).collect())
        .collect();
    let all: Vec<usize> = (0..n).collect();
    let candidates = subsets(&all, h.d());
    let present: Vec<bool> = candidates.iter().map(|s| edges.contains(s)).collect();

    let mut labels = vec![0usize; n];
    let mut best: Option<(f64, Vec<usize>)> = None;
    for _ in 0..count {
        let mut ll = 0.0;
        for (s, &on) in candidates.iter().zip(&present) {
            let tuple: Vec<usize> = s.iter().map(|&v| labels[v]).collect();
            let q = p[index_in(table, &sorted_histogram(&tuple))];
            ll += if on { q.ln() } else { (1.0 - q).ln() };
        }
        let better = match &best {
            None => true,
            Some((b, _)) => ll > *b + 1e-12 * b.abs().max(1.0),
        };
        if better {
            best = Some((ll, labels.clone()));
        }
        // next labelling in lexicographic order (node 0 most significant)
        for v in (0..n).rev() {
            labels[v] += 1;
            if labels[v] < k {
                break;
            }
            labels[v] = 0;
        }
    }
    Assignment::new(best.map(|b| b.1).unwrap_or_default(), k)
}

/// Mismatch ratio by scanning every label permutation.
pub fn exhaustive_permutation_loss(est: &Assignment, truth: &Assignment) -> Result<f64> {
    if est.len() != truth.len() || est.k() != truth.k() {
        return Err(HsbmError::invalid("assignments are not comparable"));
    }
    let k = est.k();
    let fact = (1..=k as u128).fold(1u128, |a, b| a.saturating_mul(b));
    budget("permutation scan", fact, PERMUTATION_BUDGET)?;
    let n = est.len();
    if n == 0 {
        return Ok(0.0);
    }
    let mut perm: Vec<usize> = (0..k).collect();
    let mut best = usize::MAX;
    loop {
        let wrong = est
            .labels()
            .iter()
            .zip(truth.labels())
            .filter(|(&s, &t)| perm[s] != t)
            .count();
        best = best.min(wrong);
        // next permutation in lexicographic order
        let Some(i) = (0..k.saturating_sub(1)).rev().find(|&i| perm[i] < perm[i + 1]) else {
            break;
        };
        let j = (i + 1..k).rev().find(|&j| perm[j] > perm[i]).unwrap();
        perm.swap(i, j);
        perm[i + 1..].reverse();
    }
    Ok(best as f64 / n as f64)
}

/// Neighbor pairs by relabelling every coordinate of every tuple in `[k]^d`.
pub fn brute_force_neighbor_pairs(table: &RelationTable) -> NeighborPairs {
    let (d, k) = (table.order(), table.communities());
    let mut pairs = BTreeSet::new();
    let mut tuple = vec![0usize; d];
    loop {
        let here = index_in(table, &sorted_histogram(&tuple));
        for pos in 0..d {
            let keep = tuple[pos];
            for l in 0..k {
                tuple[pos] = l;
                let there = index_in(table, &sorted_histogram(&tuple));
                if there != here {
                    pairs.insert((here.min(there), here.max(there)));
                }
            }
            tuple[pos] = keep;
        }
        let mut carry = true;
        for x in tuple.iter_mut().rev() {
            *x += 1;
            if *x < k {
                carry = false;
                break;
            }
            *x = 0;
        }
        if carry {
            break;
        }
    }
    NeighborPairs::from_pairs(pairs)
}

/// Confusion coefficients by enumerating every `(d-1)`-subset around node 0
/// of the round-robin labelling `v mod k`, relabelled from 0 to 1.
pub fn brute_force_m(table: &RelationTable, n: usize) -> Result<ConfusionCoefficients> {
    let (d, k) = (table.order(), table.communities());
    if n < d * k {
        return Err(HsbmError::invalid("need n >= d*k"));
    }
    budget(
        "subset enumeration",
        subset_count(n as u128 - 1, d as u128 - 1),
        SUBSET_BUDGET,
    )?;
    let labels: Vec<usize> = (0..n).map(|v| v % k).collect();
    let others: Vec<usize> = (1..n).collect();
    let mut directional: BTreeMap<(usize, usize), u128> = BTreeMap::new();
    for s in subsets(&others, d - 1) {
        let mut truth: Vec<usize> = s.iter().map(|&v| labels[v]).collect();
        truth.push(0);
        let mut flipped = truth.clone();
        *flipped.last_mut().unwrap() = 1;
        let i = index_in(table, &sorted_histogram(&truth));
        let j = index_in(table, &sorted_histogram(&flipped));
        if i != j {
            *directional.entry((i, j)).or_default() += 1;
        }
    }
    let mut pairs: BTreeSet<(usize, usize)> = BTreeSet::new();
    for &(i, j) in directional.keys() {
        pairs.insert((i.min(j), i.max(j)));
    }
    let entries = pairs
        .into_iter()
        .map(|(i, j)| {
            let forward = directional.get(&(i, j)).copied().unwrap_or(0);
            let backward = directional.get(&(j, i)).copied().unwrap_or(0);
            PairCoefficient {
                pair: (i, j),
                forward,
                backward,
                m: forward.min(backward),
            }
        })
        .collect();
    Ok(ConfusionCoefficients::from_entries(n, k, d, entries))
}

fn binomial_pmf(m: u64, p: f64) -> Vec<f64> {
    let mut log_choose = 0.0f64;
    let (lp, lq) = (p.ln(), (1.0 - p).ln());
    (0..=m)
        .map(|a| {
            if a > 0 {
                log_choose += ((m - a + 1) as f64).ln() - (a as f64).ln();
            }
            let mut lv = log_choose;
            if a > 0 {
                lv += a as f64 * lp;
            }
            if a < m {
                lv += (m - a) as f64 * lq;
            }
            lv.exp()
        })
        .collect()
}

/// Exact `Pr{ Σ_pairs C_ij (N_j - N_i) ≥ 0 }` where `N_j ~ Bin(m, p_j)`,
/// `N_i ~ Bin(m, p_i)` are independent, computed by convolving the finite
/// distribution of the weighted sum.
pub fn exact_testing_probability(params: &ModelParams, coeffs: &ConfusionCoefficients) -> Result<f64> {
    let total: u128 = coeffs.entries().iter().map(|e| e.m).sum();
    budget("testing-problem convolution", total, TESTING_BUDGET)?;

    let mut dist: Vec<(f64, f64)> = vec![(0.0, 1.0)];
    let mut scale = 0.0;
    for e in coeffs.entries() {
        let (pi, pj) = (params.p[e.pair.0], params.p[e.pair.1]);
        if e.m == 0 {
            continue;
        }
        let m = e.m as u64;
        let weight = ((pi / (1.0 - pi)) / (pj / (1.0 - pj))).ln();
        scale += weight.abs() * m as f64;
        let fj = binomial_pmf(m, pj);
        let fi = binomial_pmf(m, pi);
        // D = N_j - N_i on [-m, m]
        let mut diff = vec![0.0f64; 2 * m as usize + 1];
        for (a, &x) in fj.iter().enumerate() {
            for (b, &y) in fi.iter().enumerate() {
                diff[a + m as usize - b] += x * y;
            }
        }
        let mut next: BTreeMap<i64, (f64, f64)> = BTreeMap::new();
        for &(v, pv) in &dist {
            for (idx, &pd) in diff.iter().enumerate() {
                if pd == 0.0 {
                    continue;
                }
                let value = v + weight * (idx as f64 - m as f64);
                // merge sums that agree to 1e-12 relative to the running scale
                let key = (value / (1e-12 * scale.max(1.0))).round() as i64;
                let slot = next.entry(key).or_insert((value, 0.0));
                slot.1 += pv * pd;
            }
        }
        if next.len() > SUPPORT_BUDGET {
            return Err(HsbmError::BudgetExceeded {
                what: "testing-problem support",
                needed: next.len() as u128,
                limit: SUPPORT_BUDGET as u128,
            });
        }
        dist = next.into_values().collect();
    }
    let slack = 1e-9 * scale;
    Ok(dist.iter().filter(|(v, _)| *v >= -slack).map(|(_, p)| p).sum::<f64>().min(1.0))
}

/// Sorted histogram of a label tuple, exposed for cross-checks.
pub fn histogram_of(labels: &[usize]) -> Histogram {
    Histogram::from_counts(&sorted_histogram(labels), labels.len()).expect("counts sum to d")
}
