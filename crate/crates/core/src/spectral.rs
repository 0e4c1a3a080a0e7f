//! Spectral initialisation: co-degree Laplacian, degree trimming, top-k
//! singular subspace and greedy ball covering.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{HsbmError, Result};
use crate::model::{Assignment, Hypergraph};

/// Symmetric node co-degree matrix `HHᵀ - D`: entry `(u, v)` counts the
/// edges containing both `u` and `v`; the diagonal is zero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoDegreeMatrix {
    n: usize,
    data: Vec<u32>,
}

impl CoDegreeMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, u: usize, v: usize) -> u32 {
        self.data[u * self.n + v]
    }

    pub fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |u, v| self.get(u, v) as f64)
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&x| x == 0)
    }
}

pub fn laplacian(h: &Hypergraph) -> CoDegreeMatrix {
    let n = h.n();
    let mut data = vec![0u32; n * n];
    for e in h.edges() {
        for (i, &u) in e.iter().enumerate() {
            for &v in &e[i + 1..] {
                let (u, v) = (u as usize, v as usize);
                data[u * n + v] += 1;
                data[v * n + u] += 1;
            }
        }
    }
    CoDegreeMatrix { n, data }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Degrees {
    pub per_node: Vec<usize>,
    pub mean: f64,
}

pub fn degrees(h: &Hypergraph) -> Degrees {
    let mut per_node = vec![0usize; h.n()];
    for e in h.edges() {
        for &v in e {
            per_node[v as usize] += 1;
        }
    }
    let mean = if h.n() == 0 {
        0.0
    } else {
        per_node.iter().sum::<usize>() as f64 / h.n() as f64
    };
    Degrees { per_node, mean }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrimReport {
    pub threshold: f64,
    pub trimmed: Vec<usize>,
    pub mean_degree: f64,
}

/// Removes every edge incident to a node of degree `>= tau`.
pub fn trim(h: &Hypergraph, tau: f64) -> Result<(Hypergraph, TrimReport)> {
    if tau.is_nan() || tau <= 0.0 {
        return Err(HsbmError::invalid(format!("trim threshold must be positive (got {tau})")));
    }
    let deg = degrees(h);
    let heavy: Vec<bool> = deg.per_node.iter().map(|&x| x as f64 >= tau).collect();
    let trimmed = (0..h.n()).filter(|&u| heavy[u]).collect();
    let nodes: Vec<u32> = h
        .edges()
        .filter(|e| !e.iter().any(|&v| heavy[v as usize]))
        .flatten()
        .copied()
        .collect();
    Ok((
        Hypergraph::from_canonical(h.n(), h.d(), nodes),
        TrimReport {
            threshold: tau,
            trimmed,
            mean_degree: deg.mean,
        },
    ))
}

/// Rows are node embeddings; columns are the leading singular vectors.
#[derive(Debug, Clone)]
pub struct SpectralEmbedding {
    pub vectors: DMatrix<f64>,
    pub singular_values: Vec<f64>,
}

impl SpectralEmbedding {
    pub fn n(&self) -> usize {
        self.vectors.nrows()
    }

    pub fn row(&self, u: usize) -> Vec<f64> {
        self.vectors.row(u).iter().copied().collect()
    }
}

const EIGEN_MAX_ITERATIONS: usize = 10_000;

/// Top-`k` singular subspace of a symmetric matrix.
///
/// For a symmetric matrix the singular vectors are eigenvectors ordered by
/// `|λ|`; ties keep the solver's order. Each column is flipped so its first
/// entry with magnitude above `1e-12` is positive. Fails if the solver does
/// not converge or any column misses `‖Mv − λv‖ ≤ tol·‖M‖_F`.
pub fn top_k_subspace(m: &DMatrix<f64>, k: usize, tol: f64) -> Result<SpectralEmbedding> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(HsbmError::invalid("matrix must be square"));
    }
    if k == 0 || k > n {
        return Err(HsbmError::invalid(format!("need 1 <= k <= n (k = {k}, n = {n})")));
    }
    let eig = SymmetricEigen::try_new(m.clone(), f64::EPSILON, EIGEN_MAX_ITERATIONS)
        .ok_or(HsbmError::Convergence { residual: f64::NAN })?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .abs()
            .partial_cmp(&eig.eigenvalues[a].abs())
            .unwrap_or(std::cmp::Ordering::Equal)
    });

    let norm = m.norm();
    let mut vectors = DMatrix::zeros(n, k);
    let mut singular_values = Vec::with_capacity(k);
    for (col, &src) in order.iter().take(k).enumerate() {
        let mut v = eig.eigenvectors.column(src).into_owned();
        if let Some(first) = v.iter().find(|x| x.abs() > 1e-12) {
            if *first < 0.0 {
                v.neg_mut();
            }
        }
        let lambda = eig.eigenvalues[src];
        let residual = (m * &v - &v * lambda).norm();
        if residual > tol * norm {
            return Err(HsbmError::Convergence { residual });
        }
        vectors.set_column(col, &v);
        singular_values.push(lambda.abs());
    }
    Ok(SpectralEmbedding {
        vectors,
        singular_values,
    })
}

/// Greedy ball covering with radius `μ·sqrt(k/n)`, followed by
/// nearest-mean cleanup of the uncovered nodes. Ties go to the lowest node
/// id or label.
pub fn ball_cover_cluster(e: &SpectralEmbedding, k: usize, mu: f64) -> Result<Assignment> {
    if mu.is_nan() || mu <= 0.0 {
        return Err(HsbmError::invalid(format!("mu must be positive (got {mu})")));
    }
    if k == 0 {
        return Err(HsbmError::invalid("k must be positive"));
    }
    let n = e.n();
    let radius = mu * (k as f64 / n as f64).sqrt();
    let rows: Vec<Vec<f64>> = (0..n).map(|u| e.row(u)).collect();
    let mut dist = vec![0.0f64; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let dd = rows[i]
                .iter()
                .zip(&rows[j])
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            dist[i * n + j] = dd;
            dist[j * n + i] = dd;
        }
    }

    let mut label: Vec<Option<usize>> = vec![None; n];
    let mut clusters: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (t, cluster) in clusters.iter_mut().enumerate() {
        let remaining: Vec<usize> = (0..n).filter(|&i| label[i].is_none()).collect();
        if remaining.is_empty() {
            break;
        }
        let mut best = (0usize, remaining[0]);
        for &i in &remaining {
            let covered = remaining.iter().filter(|&&j| dist[i * n + j] < radius).count();
            if covered > best.0 {
                best = (covered, i);
            }
        }
        let centre = best.1;
        for &j in &remaining {
            if dist[centre * n + j] < radius {
                label[j] = Some(t);
                cluster.push(j);
            }
        }
    }

    let mut labels = vec![0usize; n];
    for i in 0..n {
        labels[i] = match label[i] {
            Some(t) => t,
            None => {
                let mut best: Option<(f64, usize)> = None;
                for (t, c) in clusters.iter().enumerate() {
                    if c.is_empty() {
                        continue;
                    }
                    let mean = c.iter().map(|&j| dist[i * n + j]).sum::<f64>() / c.len() as f64;
                    if best.is_none_or(|(b, _)| mean < b) {
                        best = Some((mean, t));
                    }
                }
                best.map(|(_, t)| t).unwrap_or(0)
            }
        };
    }
    Ok(Assignment::new_unchecked(labels, k))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralConfig {
    /// Ball radius multiplier.
    pub mu: f64,
    /// Trimming threshold as a multiple of the mean degree.
    pub tau_factor: f64,
    /// Relative residual tolerance for the eigen-solver.
    pub tol: f64,
}

impl Default for SpectralConfig {
    fn default() -> Self {
        Self {
            mu: 0.5,
            tau_factor: 3.0,
            tol: 1e-8,
        }
    }
}

/// Trim at `tau_factor` times the mean degree, embed, and ball-cover.
/// A hypergraph with no edges yields the all-zero labelling.
pub fn spectral_init(h: &Hypergraph, k: usize, cfg: &SpectralConfig) -> Result<Assignment> {
    if k < 2 {
        return Err(HsbmError::invalid(format!("spectral init needs k >= 2 (got {k})")));
    }
    if k > h.n() {
        return Err(HsbmError::invalid(format!("k = {k} exceeds n = {}", h.n())));
    }
    let mean = degrees(h).mean;
    if mean == 0.0 {
        return Ok(Assignment::uniform(h.n(), k));
    }
    let (trimmed, _) = trim(h, cfg.tau_factor * mean)?;
    let lap = laplacian(&trimmed).to_dmatrix();
    let embedding = top_k_subspace(&lap, k, cfg.tol)?;
    ball_cover_cluster(&embedding, k, cfg.mu)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn embedding(rows: &[&[f64]]) -> SpectralEmbedding {
        let k = rows[0].len();
        SpectralEmbedding {
            vectors: DMatrix::from_fn(rows.len(), k, |i, j| rows[i][j]),
            singular_values: vec![1.0; k],
        }
    }

    #[test]
    fn laplacian_examples() {
        let empty = Hypergraph::empty(4, 3);
        assert!(laplacian(&empty).is_zero());

        let h = Hypergraph::new(4, 3, vec![vec![0, 1, 2]]).unwrap();
        let l = laplacian(&h);
        assert_eq!((l.get(0, 1), l.get(0, 2), l.get(1, 2)), (1, 1, 1));
        assert_eq!((l.get(0, 3), l.get(3, 3), l.get(0, 0)), (0, 0, 0));

        let h = Hypergraph::new(4, 3, vec![vec![0, 1, 2], vec![0, 1, 3]]).unwrap();
        let l = laplacian(&h);
        assert_eq!(l.get(0, 1), 2);
        assert_eq!([l.get(0, 2), l.get(1, 2), l.get(0, 3), l.get(1, 3)], [1; 4]);
        assert_eq!(l.get(2, 3), 0);
        assert_eq!(l.get(3, 2), 0);
    }

    #[test]
    fn degree_examples() {
        let d = degrees(&Hypergraph::empty(3, 2));
        assert_eq!((d.per_node, d.mean), (vec![0, 0, 0], 0.0));
        let h = Hypergraph::new(5, 3, vec![vec![0, 1, 2]]).unwrap();
        let d = degrees(&h);
        assert_eq!(d.per_node, vec![1, 1, 1, 0, 0]);
        assert!((d.mean - 0.6).abs() < 1e-15);
    }

    #[test]
    fn trim_examples() {
        let h = Hypergraph::new(5, 3, vec![vec![0, 1, 2], vec![1, 2, 3]]).unwrap();
        let (same, rep) = trim(&h, 10.0).unwrap();
        assert_eq!(same, h);
        assert!(rep.trimmed.is_empty());
        let (none, rep) = trim(&h, 1.0).unwrap();
        assert_eq!(none.edge_count(), 0);
        assert_eq!(rep.trimmed, vec![0, 1, 2, 3]);
        assert!(trim(&h, 0.0).is_err());
    }

    #[test]
    fn star_trim() {
        // node 0 lies in five edges; every other node in at most two
        let h = Hypergraph::new(
            12,
            3,
            vec![
                vec![0, 1, 2],
                vec![0, 3, 4],
                vec![0, 5, 6],
                vec![0, 7, 8],
                vec![0, 9, 10],
                vec![1, 3, 11],
                vec![2, 4, 11],
            ],
        )
        .unwrap();
        let (t, rep) = trim(&h, 3.0).unwrap();
        assert_eq!(rep.trimmed, vec![0]);
        assert_eq!(t.edge_count(), 2);
        assert!(t.edges().all(|e| !e.contains(&0)));
    }

    #[test]
    fn block_matrix_subspace() {
        let mut m = DMatrix::zeros(6, 6);
        for b in 0..2 {
            for i in 0..3 {
                for j in 0..3 {
                    if i != j {
                        m[(3 * b + i, 3 * b + j)] = 1.0;
                    }
                }
            }
        }
        let e = top_k_subspace(&m, 2, 1e-8).unwrap();
        assert!((e.singular_values[0] - 2.0).abs() < 1e-10);
        assert!((e.singular_values[1] - 2.0).abs() < 1e-10);
        for b in 0..2 {
            for i in 1..3 {
                let (r0, ri) = (e.row(3 * b), e.row(3 * b + i));
                for (x, y) in r0.iter().zip(&ri) {
                    assert!((x - y).abs() < 1e-10);
                }
            }
        }
        let gram = e.vectors.transpose() * &e.vectors;
        assert!((gram - DMatrix::identity(2, 2)).norm() < 1e-8);
    }

    #[test]
    fn zero_matrix_subspace() {
        let e = top_k_subspace(&DMatrix::zeros(4, 4), 2, 1e-8).unwrap();
        assert_eq!(e.singular_values, vec![0.0, 0.0]);
    }

    #[test]
    fn rank_one_minus_diagonal() {
        let x = [1.0, 2.0, -1.0, 0.5, 3.0];
        let m = DMatrix::from_fn(5, 5, |i, j| if i == j { 0.0 } else { x[i] * x[j] });
        let e = top_k_subspace(&m, 2, 1e-8).unwrap();
        assert!(e.singular_values[0] >= e.singular_values[1]);
        for c in 0..2 {
            let first = e.vectors.column(c).iter().copied().find(|v| v.abs() > 1e-12).unwrap();
            assert!(first > 0.0);
        }
    }

    #[test]
    fn separated_point_clusters() {
        let pts: Vec<&[f64]> = vec![
            &[1.0, 0.0],
            &[1.01, 0.0],
            &[0.99, 0.01],
            &[0.0, 1.0],
            &[0.0, 1.01],
            &[-1.0, -1.0],
            &[-1.0, -1.01],
        ];
        let a = ball_cover_cluster(&embedding(&pts), 3, 0.5).unwrap();
        let l = a.labels();
        assert_eq!(l[0], l[1]);
        assert_eq!(l[0], l[2]);
        assert_eq!(l[3], l[4]);
        assert_eq!(l[5], l[6]);
        assert!(l[0] != l[3] && l[0] != l[5] && l[3] != l[5]);
    }

    #[test]
    fn identical_rows() {
        let pts: Vec<&[f64]> = vec![&[0.3, 0.3]; 5];
        let a = ball_cover_cluster(&embedding(&pts), 3, 0.5).unwrap();
        assert_eq!(a.labels(), &[0; 5]);
    }

    #[test]
    fn outlier_goes_to_nearer_cluster() {
        // n = 7, k = 2, mu = 0.5 -> r ≈ 0.267
        let r = 0.5 * (2.0f64 / 7.0).sqrt();
        let pts: Vec<Vec<f64>> = vec![
            vec![0.0, 0.0],
            vec![0.01, 0.0],
            vec![0.0, 0.01],
            vec![1.0, 0.0],
            vec![1.01, 0.0],
            vec![1.0, 0.01],
            vec![1.0 + 10.0 * r, 0.0],
        ];
        let refs: Vec<&[f64]> = pts.iter().map(|p| p.as_slice()).collect();
        let a = ball_cover_cluster(&embedding(&refs), 2, 0.5).unwrap();
        let l = a.labels();
        assert_eq!(l[0], l[1]);
        assert_eq!(l[3], l[4]);
        assert_ne!(l[0], l[3]);
        assert_eq!(l[6], l[3]);
    }

    #[test]
    fn empty_hypergraph_init() {
        let a = spectral_init(&Hypergraph::empty(10, 3), 2, &SpectralConfig::default()).unwrap();
        assert_eq!(a.labels(), &[0; 10]);
        assert!(spectral_init(&Hypergraph::empty(10, 3), 1, &SpectralConfig::default()).is_err());
    }
}
