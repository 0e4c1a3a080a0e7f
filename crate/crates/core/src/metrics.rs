//! Mismatch ratio under the best label permutation.

use crate::error::{HsbmError, Result};
use crate::model::Assignment;

/// `counts[s][t]` = number of nodes with estimated label `s` and true label `t`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    pub k: usize,
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn new(est: &Assignment, truth: &Assignment) -> Result<Self> {
        check_compatible(est, truth)?;
        let k = est.k();
        let mut counts = vec![vec![0u64; k]; k];
        for (&s, &t) in est.labels().iter().zip(truth.labels()) {
            counts[s][t] += 1;
        }
        Ok(Self { k, counts })
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }
}

fn check_compatible(est: &Assignment, truth: &Assignment) -> Result<()> {
    if est.len() != truth.len() {
        return Err(HsbmError::invalid(format!(
            "assignments have different lengths ({} vs {})",
            est.len(),
            truth.len()
        )));
    }
    if est.k() != truth.k() {
        return Err(HsbmError::invalid(format!(
            "assignments have different k ({} vs {})",
            est.k(),
            truth.k()
        )));
    }
    Ok(())
}

/// Hamming distance divided by `n`.
pub fn unpermuted_loss(a: &Assignment, b: &Assignment) -> Result<f64> {
    if a.len() != b.len() {
        return Err(HsbmError::invalid("assignments have different lengths"));
    }
    if a.is_empty() {
        return Ok(0.0);
    }
    let diff = a.labels().iter().zip(b.labels()).filter(|(x, y)| x != y).count();
    Ok(diff as f64 / a.len() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mismatch {
    pub ratio: f64,
    pub misclassified: u64,
    /// `permutation[s]` is the true label matched to estimated label `s`.
    pub permutation: Vec<usize>,
}

/// Exact minimum of the unpermuted loss over all label permutations.
///
/// The optimum comes from a maximum-weight assignment on the confusion
/// matrix. Among optimal permutations the lexicographically smallest is
/// returned, found by fixing positions greedily and re-solving the reduced
/// assignment problem.
pub fn mismatch_ratio(est: &Assignment, truth: &Assignment) -> Result<Mismatch> {
    let cm = ConfusionMatrix::new(est, truth)?;
    let k = cm.k;
    let n = est.len() as u64;
    let weights: Vec<Vec<i64>> = cm
        .counts
        .iter()
        .map(|row| row.iter().map(|&c| c as i64).collect())
        .collect();
    let best = max_weight_assignment(&weights).0;

    let mut fixed: Vec<usize> = Vec::with_capacity(k);
    let mut used = vec![false; k];
    let mut gained = 0i64;
    for s in 0..k {
        for t in 0..k {
            if used[t] {
                continue;
            }
            let rows: Vec<usize> = (s + 1..k).collect();
            let cols: Vec<usize> = (0..k).filter(|&c| !used[c] && c != t).collect();
            let sub: Vec<Vec<i64>> = rows
                .iter()
                .map(|&r| cols.iter().map(|&c| weights[r][c]).collect())
                .collect();
            let rest = if sub.is_empty() { 0 } else { max_weight_assignment(&sub).0 };
            if gained + weights[s][t] + rest == best {
                fixed.push(t);
                used[t] = true;
                gained += weights[s][t];
                break;
            }
        }
    }
    debug_assert_eq!(gained, best);
    let misclassified = n - best as u64;
    let ratio = if n == 0 { 0.0 } else { misclassified as f64 / n as f64 };
    Ok(Mismatch {
        ratio,
        misclassified,
        permutation: fixed,
    })
}

/// Maximum-weight perfect matching on a square matrix (Hungarian method with
/// potentials, O(k³)). Returns the optimal weight and `assign[row] = col`.
pub fn max_weight_assignment(weights: &[Vec<i64>]) -> (i64, Vec<usize>) {
    let n = weights.len();
    if n == 0 {
        return (0, Vec::new());
    }
    let max = weights.iter().flatten().copied().max().unwrap_or(0);
    // minimise cost = max - w, 1-based arrays with a virtual column 0
    let cost = |i: usize, j: usize| max - weights[i - 1][j - 1];
    let inf = i64::MAX / 4;
    let mut u = vec![0i64; n + 1];
    let mut v = vec![0i64; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost(i0, j) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assign = vec![0usize; n];
    for j in 1..=n {
        assign[p[j] - 1] = j - 1;
    }
    let total = assign.iter().enumerate().map(|(i, &j)| weights[i][j]).sum();
    (total, assign)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn asg(labels: &[usize], k: usize) -> Assignment {
        Assignment::new(labels.to_vec(), k).unwrap()
    }

    #[test]
    fn unpermuted_examples() {
        let a = asg(&[0, 1, 0, 1], 2);
        assert_eq!(unpermuted_loss(&a, &a).unwrap(), 0.0);
        assert_eq!(unpermuted_loss(&a, &asg(&[1, 0, 1, 0], 2)).unwrap(), 1.0);
        assert_eq!(unpermuted_loss(&a, &asg(&[0, 1, 1, 1], 2)).unwrap(), 0.25);
        assert!(unpermuted_loss(&a, &asg(&[0, 1], 2)).is_err());
    }

    #[test]
    fn permuted_copy_has_zero_mismatch() {
        let truth = asg(&[0, 1, 2, 0, 1, 2, 2], 3);
        let est = truth.permuted(&[2, 0, 1]).unwrap();
        let m = mismatch_ratio(&est, &truth).unwrap();
        assert_eq!(m.ratio, 0.0);
        assert_eq!(m.permutation, vec![1, 2, 0]);
    }

    #[test]
    fn three_of_ten_flipped() {
        let truth = asg(&[0, 0, 0, 0, 0, 1, 1, 1, 1, 1], 2);
        let est = asg(&[1, 1, 1, 0, 0, 1, 1, 1, 1, 1], 2);
        let m = mismatch_ratio(&est, &truth).unwrap();
        assert!((m.ratio - 0.3).abs() < 1e-15);
        assert_eq!(m.permutation, vec![0, 1]);
        let swapped = est.permuted(&[1, 0]).unwrap();
        assert!((unpermuted_loss(&swapped, &truth).unwrap() - 0.7).abs() < 1e-15);
    }

    #[test]
    fn ties_pick_smallest_permutation() {
        // every permutation agrees on exactly one node
        let truth = asg(&[0, 1], 2);
        let est = asg(&[0, 0], 2);
        let m = mismatch_ratio(&est, &truth).unwrap();
        assert_eq!(m.permutation, vec![0, 1]);
        assert_eq!(m.ratio, 0.5);
    }

    #[test]
    fn mismatched_k_rejected() {
        assert!(mismatch_ratio(&asg(&[0, 1], 2), &asg(&[0, 1], 3)).is_err());
    }

    #[test]
    fn hungarian_small() {
        let w = vec![vec![1, 5, 3], vec![4, 2, 6], vec![7, 0, 1]];
        let (total, assign) = max_weight_assignment(&w);
        assert_eq!(total, 5 + 6 + 7);
        assert_eq!(assign, vec![1, 2, 0]);
    }
}
