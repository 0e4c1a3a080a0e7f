//! Community relations among the `d` nodes of a hyperedge.
//!
//! A relation is the sorted histogram of community labels inside a
//! hyperedge. The table of all achievable relations for a given `(d, k)` is
//! kept in majorization order: `(d, 0, …, 0)` (all nodes in one community)
//! comes first and `(1, …, 1)` (all different) comes last.
//!
//! Relation indices are 0-based in this API; text output adds one.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use crate::error::{HsbmError, Result};

/// Largest supported hyperedge order (profile keys must fit in a `u64`).
pub const MAX_ORDER: usize = 15;

/// Per-community label counts of a hyperedge, sorted in non-increasing order
/// and padded with zeros to length `d`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Histogram(Vec<usize>);

impl Histogram {
    /// Histogram of a tuple of labels. Labels may be arbitrary integers.
    pub fn from_labels(labels: &[usize]) -> Self {
        let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
        for &l in labels {
            *counts.entry(l).or_default() += 1;
        }
        let mut parts: Vec<usize> = counts.into_values().collect();
        parts.sort_unstable_by(|a, b| b.cmp(a));
        parts.resize(labels.len(), 0);
        Histogram(parts)
    }

    /// Builds a histogram from raw counts (any order, any number of zeros),
    /// padding or truncating zeros to length `d`.
    pub fn from_counts(counts: &[usize], d: usize) -> Result<Self> {
        let mut parts: Vec<usize> = counts.iter().copied().filter(|&c| c > 0).collect();
        if parts.iter().sum::<usize>() != d {
            return Err(HsbmError::invalid(format!(
                "counts {counts:?} do not sum to d = {d}"
            )));
        }
        parts.sort_unstable_by(|a, b| b.cmp(a));
        parts.resize(d, 0);
        Ok(Histogram(parts))
    }

    pub fn parts(&self) -> &[usize] {
        &self.0
    }

    pub fn order(&self) -> usize {
        self.0.len()
    }

    pub fn nonzero_parts(&self) -> usize {
        self.0.iter().take_while(|&&c| c > 0).count()
    }

    /// Prefix-sum dominance. Both histograms must have the same order.
    pub fn majorizes(&self, other: &Histogram) -> bool {
        if self.0.len() != other.0.len() {
            return false;
        }
        let (mut a, mut b) = (0, 0);
        for (x, y) in self.0.iter().zip(&other.0) {
            a += x;
            b += y;
            if a < b {
                return false;
            }
        }
        a == b
    }

    fn profile_key(&self) -> u64 {
        profile_key_of_counts(&self.0, self.0.len())
    }
}

impl fmt::Display for Histogram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, p) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{p}")?;
        }
        write!(f, ")")
    }
}

/// Order-independent key of a count vector: `Σ (d+1)^(c-1)` over nonzero
/// counts `c`. Two count vectors share a key iff they share a histogram.
#[inline]
fn profile_key_of_counts(counts: &[usize], d: usize) -> u64 {
    let base = (d + 1) as u64;
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| base.pow((c - 1) as u32))
        .sum()
}

/// The catalogue of community relations for a `(d, k)` model.
#[derive(Debug, Clone)]
pub struct RelationTable {
    d: usize,
    k: usize,
    histograms: Vec<Histogram>,
    index: HashMap<u64, usize>,
    powers: Vec<u64>,
}

impl RelationTable {
    /// Enumerates every histogram achievable by a tuple in `[k]^d`.
    ///
    /// Entries are sorted in descending lexicographic order, which is a
    /// linear extension of majorization: if `a` strictly majorizes `b`, the
    /// first coordinate where they differ has `a_i > b_i`.
    pub fn new(d: usize, k: usize) -> Result<Self> {
        if d < 2 || k < 2 {
            return Err(HsbmError::invalid(format!(
                "relations need d >= 2 and k >= 2 (got d = {d}, k = {k})"
            )));
        }
        if d > MAX_ORDER {
            return Err(HsbmError::invalid(format!(
                "hyperedge order {d} exceeds the supported maximum {MAX_ORDER}"
            )));
        }
        let max_parts = d.min(k);
        let mut partitions = Vec::new();
        let mut current = Vec::with_capacity(d);
        partitions_into(d, d, max_parts, &mut current, &mut partitions);
        let mut histograms: Vec<Histogram> = partitions
            .into_iter()
            .map(|mut p| {
                p.resize(d, 0);
                Histogram(p)
            })
            .collect();
        histograms.sort_unstable_by(|a, b| b.cmp(a));
        let index = histograms
            .iter()
            .enumerate()
            .map(|(i, h)| (h.profile_key(), i))
            .collect();
        let base = (d + 1) as u64;
        let powers = (0..d).map(|e| base.pow(e as u32)).collect();
        Ok(Self {
            d,
            k,
            histograms,
            index,
            powers,
        })
    }

    pub fn order(&self) -> usize {
        self.d
    }

    pub fn communities(&self) -> usize {
        self.k
    }

    /// Number of relations (κ_d restricted to `k` communities).
    pub fn len(&self) -> usize {
        self.histograms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.histograms.is_empty()
    }

    pub fn histograms(&self) -> &[Histogram] {
        &self.histograms
    }

    pub fn histogram(&self, i: usize) -> &Histogram {
        &self.histograms[i]
    }

    pub fn index_of(&self, h: &Histogram) -> Option<usize> {
        if h.order() != self.d {
            return None;
        }
        self.index.get(&h.profile_key()).copied()
    }

    /// Relation index of a `d`-tuple of 0-based labels in `[0, k)`.
    pub fn relation_of(&self, labels: &[usize]) -> Result<usize> {
        if labels.len() != self.d {
            return Err(HsbmError::invalid(format!(
                "expected {} labels, got {}",
                self.d,
                labels.len()
            )));
        }
        if let Some(&l) = labels.iter().find(|&&l| l >= self.k) {
            return Err(HsbmError::invalid(format!(
                "label {l} out of range for k = {}",
                self.k
            )));
        }
        Ok(self.relation_of_unchecked(labels))
    }

    /// Like [`relation_of`](Self::relation_of) without range checks.
    #[inline]
    pub fn relation_of_unchecked(&self, labels: &[usize]) -> usize {
        let mut key = 0u64;
        for (i, &l) in labels.iter().enumerate() {
            if labels[..i].contains(&l) {
                continue;
            }
            let c = labels[i..].iter().filter(|&&x| x == l).count();
            key += self.powers[c - 1];
        }
        self.index[&key]
    }

    /// Relation index of a per-community count vector summing to `d`.
    #[inline]
    pub fn relation_of_counts(&self, counts: &[usize]) -> Option<usize> {
        let mut key = 0u64;
        for &c in counts {
            if c > 0 {
                key += *self.powers.get(c - 1)?;
            }
        }
        self.index.get(&key).copied()
    }

    /// For a population with per-community `sizes`, counts the
    /// `(d - fixed.len())`-subsets whose labels, together with the labels in
    /// `fixed`, form each relation.
    pub fn context_counts(&self, sizes: &[usize], fixed: &[usize]) -> Vec<u128> {
        assert_eq!(sizes.len(), self.k, "sizes must have one entry per community");
        assert!(fixed.len() <= self.d);
        let mut counts = vec![0usize; self.k];
        for &l in fixed {
            counts[l] += 1;
        }
        let mut out = vec![0u128; self.len()];
        for_each_composition(sizes, self.d - fixed.len(), &mut counts, |counts, weight| {
            if let Some(r) = self.relation_of_counts(counts) {
                out[r] += weight;
            }
        });
        out
    }
}

fn partitions_into(
    remaining: usize,
    max_part: usize,
    max_parts: usize,
    current: &mut Vec<usize>,
    out: &mut Vec<Vec<usize>>,
) {
    if remaining == 0 {
        out.push(current.clone());
        return;
    }
    if current.len() == max_parts {
        return;
    }
    for part in (1..=max_part.min(remaining)).rev() {
        current.push(part);
        partitions_into(remaining - part, part, max_parts, current, out);
        current.pop();
    }
}

/// Visits every way of drawing `r` nodes from communities of the given
/// sizes, grouped by per-community counts. `counts` holds any pre-placed
/// labels; the callback receives the combined counts and the number of
/// node subsets realising the draw.
pub(crate) fn for_each_composition<F>(sizes: &[usize], r: usize, counts: &mut [usize], mut f: F)
where
    F: FnMut(&[usize], u128),
{
    fn rec<F: FnMut(&[usize], u128)>(
        sizes: &[usize],
        pos: usize,
        remaining: usize,
        weight: u128,
        counts: &mut [usize],
        f: &mut F,
    ) {
        if remaining == 0 {
            f(counts, weight);
            return;
        }
        if pos == sizes.len() {
            return;
        }
        let top = remaining.min(sizes[pos]);
        for c in 0..=top {
            let w = weight * binomial(sizes[pos] as u64, c as u64);
            if w == 0 {
                continue;
            }
            counts[pos] += c;
            rec(sizes, pos + 1, remaining - c, w, counts, f);
            counts[pos] -= c;
        }
    }
    rec(sizes, 0, r, 1, counts, &mut f);
}

/// Exact binomial coefficient. Saturates at `u128::MAX`.
pub fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// Unordered relation pairs `(i, j)`, `i < j`, that a single relabelled node
/// can turn into one another.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NeighborPairs {
    pairs: Vec<(usize, usize)>,
}

impl NeighborPairs {
    pub fn from_pairs(pairs: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let set: BTreeSet<(usize, usize)> = pairs
            .into_iter()
            .filter(|(i, j)| i != j)
            .map(|(i, j)| (i.min(j), i.max(j)))
            .collect();
        Self {
            pairs: set.into_iter().collect(),
        }
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.pairs.binary_search(&(i.min(j), i.max(j))).is_ok()
    }
}

/// Confusing relation pairs, derived by moving one unit of a histogram into
/// another community.
pub fn neighbor_pairs(table: &RelationTable) -> NeighborPairs {
    let d = table.order();
    let k = table.communities();
    let mut found = Vec::new();
    for (i, h) in table.histograms().iter().enumerate() {
        let parts = h.parts();
        let used = h.nonzero_parts();
        // a slot past the used parts stands for any absent community
        let slots = if used < k { used + 1 } else { used };
        for from in 0..used {
            for to in 0..slots.min(d) {
                if to == from {
                    continue;
                }
                let mut moved = parts.to_vec();
                moved[from] -= 1;
                moved[to] += 1;
                let j = table
                    .relation_of_counts(&moved)
                    .expect("moving one label keeps the histogram achievable");
                if i != j {
                    found.push((i, j));
                }
            }
        }
    }
    NeighborPairs::from_pairs(found)
}

/// Directional context counts and the matched-pair coefficient for one
/// neighbor pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairCoefficient {
    pub pair: (usize, usize),
    /// Contexts with relation `pair.0` under the truth and `pair.1` after the flip.
    pub forward: u128,
    /// Contexts with relation `pair.1` under the truth and `pair.0` after the flip.
    pub backward: u128,
    pub m: u128,
}

/// The coefficients `m` weighting each divergence term of the error exponent.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfusionCoefficients {
    pub n: usize,
    pub k: usize,
    pub d: usize,
    entries: Vec<PairCoefficient>,
}

impl ConfusionCoefficients {
    /// Builds coefficients from explicit values (both directional counts are
    /// set to `m`). Intended for tests and what-if computations.
    pub fn from_values(
        n: usize,
        k: usize,
        d: usize,
        values: impl IntoIterator<Item = ((usize, usize), u128)>,
    ) -> Self {
        let mut entries: Vec<PairCoefficient> = values
            .into_iter()
            .map(|(pair, m)| PairCoefficient {
                pair,
                forward: m,
                backward: m,
                m,
            })
            .collect();
        entries.sort_by_key(|e| e.pair);
        Self { n, k, d, entries }
    }

    pub(crate) fn from_entries(n: usize, k: usize, d: usize, mut entries: Vec<PairCoefficient>) -> Self {
        entries.sort_by_key(|e| e.pair);
        Self { n, k, d, entries }
    }

    pub fn entries(&self) -> &[PairCoefficient] {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> Option<u128> {
        let key = (i.min(j), i.max(j));
        self.entries.iter().find(|e| e.pair == key).map(|e| e.m)
    }

    pub fn pairs(&self) -> NeighborPairs {
        NeighborPairs::from_pairs(self.entries.iter().map(|e| e.pair))
    }
}

/// Community sizes of the canonical balanced assignment: `⌊n/k⌋` each, with
/// the remainder given one-per-community to the lowest labels.
pub fn balanced_sizes(n: usize, k: usize) -> Vec<usize> {
    let base = n / k;
    let extra = n % k;
    (0..k).map(|t| base + usize::from(t < extra)).collect()
}

/// Counts, for a node of community 0 relabelled to community 1, the
/// `(d-1)`-node contexts whose relation switches between the two members of
/// each neighbor pair, and takes `m = min(forward, backward)`.
pub fn confusion_coefficients(
    table: &RelationTable,
    pairs: &NeighborPairs,
    n: usize,
) -> Result<ConfusionCoefficients> {
    let d = table.order();
    let k = table.communities();
    if n < d * k {
        return Err(HsbmError::invalid(format!(
            "confusion coefficients need n >= d*k = {} (got n = {n})",
            d * k
        )));
    }
    let mut others = balanced_sizes(n, k);
    others[0] -= 1;

    let mut directional: HashMap<(usize, usize), u128> = HashMap::new();
    let mut counts = vec![0usize; k];
    for_each_composition(&others, d - 1, &mut counts, |ctx, weight| {
        let mut truth = ctx.to_vec();
        truth[0] += 1;
        let mut flipped = ctx.to_vec();
        flipped[1] += 1;
        let (Some(i), Some(j)) = (table.relation_of_counts(&truth), table.relation_of_counts(&flipped))
        else {
            return;
        };
        if i != j {
            *directional.entry((i, j)).or_default() += weight;
        }
    });

    let entries = pairs
        .pairs()
        .iter()
        .map(|&(i, j)| {
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

#[cfg(test)]
mod tests {
    use super::*;

    fn h(parts: &[usize]) -> Histogram {
        Histogram(parts.to_vec())
    }

    #[test]
    fn order_four_table() {
        let t = RelationTable::new(4, 4).unwrap();
        let want = [
            [4, 0, 0, 0],
            [3, 1, 0, 0],
            [2, 2, 0, 0],
            [2, 1, 1, 0],
            [1, 1, 1, 1],
        ];
        assert_eq!(t.len(), 5);
        for (got, want) in t.histograms().iter().zip(want) {
            assert_eq!(got.parts(), &want);
        }
    }

    #[test]
    fn small_tables() {
        let t = RelationTable::new(2, 2).unwrap();
        assert_eq!(t.histograms(), &[h(&[2, 0]), h(&[1, 1])]);
        let t = RelationTable::new(3, 2).unwrap();
        assert_eq!(t.histograms(), &[h(&[3, 0, 0]), h(&[2, 1, 0])]);
    }

    #[test]
    fn rejects_small_arguments() {
        assert!(RelationTable::new(1, 3).is_err());
        assert!(RelationTable::new(3, 1).is_err());
    }

    #[test]
    fn relation_lookup_examples() {
        let t = RelationTable::new(4, 4).unwrap();
        assert_eq!(t.relation_of(&[0, 0, 0, 0]).unwrap(), 0);
        assert_eq!(t.relation_of(&[0, 0, 1, 2]).unwrap(), 3);
        assert_eq!(t.relation_of(&[0, 1, 0, 1]).unwrap(), 2);
        assert!(t.relation_of(&[0, 1, 4, 1]).is_err());
        assert!(t.relation_of(&[0, 1, 1]).is_err());
    }

    #[test]
    fn majorization_order_is_respected() {
        for d in 2..=9 {
            let t = RelationTable::new(d, d).unwrap();
            for i in 0..t.len() {
                for j in 0..t.len() {
                    if i != j && t.histogram(i).majorizes(t.histogram(j)) {
                        assert!(i < j, "d={d}: {} before {}", t.histogram(j), t.histogram(i));
                    }
                }
            }
        }
    }

    #[test]
    fn incomparable_histograms_exist_from_order_six() {
        let t = RelationTable::new(6, 6).unwrap();
        let a = t.index_of(&h(&[3, 1, 1, 1, 0, 0])).unwrap();
        let b = t.index_of(&h(&[2, 2, 2, 0, 0, 0])).unwrap();
        assert!(!t.histogram(a).majorizes(t.histogram(b)));
        assert!(!t.histogram(b).majorizes(t.histogram(a)));
        assert!(a < b);
    }

    #[test]
    fn neighbor_pair_examples() {
        let t = RelationTable::new(2, 2).unwrap();
        assert_eq!(neighbor_pairs(&t).pairs(), &[(0, 1)]);
        let t = RelationTable::new(3, 3).unwrap();
        assert_eq!(neighbor_pairs(&t).pairs(), &[(0, 1), (1, 2)]);
        let t = RelationTable::new(4, 4).unwrap();
        assert_eq!(
            neighbor_pairs(&t).pairs(),
            &[(0, 1), (1, 2), (1, 3), (2, 3), (3, 4)]
        );
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(10, 3), 120);
        assert_eq!(binomial(5, 0), 1);
        assert_eq!(binomial(3, 5), 0);
        assert_eq!(binomial(300, 4), 330_791_175);
    }

    #[test]
    fn graph_coefficient_example() {
        let t = RelationTable::new(2, 2).unwrap();
        let pairs = neighbor_pairs(&t);
        let c = confusion_coefficients(&t, &pairs, 10).unwrap();
        let e = c.entries()[0];
        assert_eq!((e.forward, e.backward, e.m), (4, 5, 4));
        assert!(confusion_coefficients(&t, &pairs, 3).is_err());
    }

    #[test]
    fn three_community_graph_coefficient() {
        let t = RelationTable::new(2, 3).unwrap();
        let pairs = neighbor_pairs(&t);
        let c = confusion_coefficients(&t, &pairs, 9).unwrap();
        assert_eq!(c.get(0, 1), Some(2));
    }

    #[test]
    fn context_counts_cover_all_subsets() {
        let t = RelationTable::new(3, 3).unwrap();
        let sizes = [4, 3, 5];
        let total: u128 = t.context_counts(&sizes, &[]).iter().sum();
        assert_eq!(total, binomial(12, 3));
        let total: u128 = t.context_counts(&sizes, &[1]).iter().sum();
        assert_eq!(total, binomial(12, 2));
    }
}
