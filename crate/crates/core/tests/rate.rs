use hypersbm_core::metrics::mismatch_ratio;
use hypersbm_core::model::{balanced_assignment, sample_hypergraph, Assignment, Hypergraph, ModelParams};
use hypersbm_core::oracle::exact_testing_probability;
use hypersbm_core::rate::{minimax_exponent, renyi_half};
use hypersbm_core::relations::{confusion_coefficients, neighbor_pairs};
use hypersbm_core::spectral::{spectral_init, SpectralConfig};

/// Largest `(-ln P - E) / (1 + sqrt E)` over the grid below, fitted once
/// (0.6506) and rounded up.
const LOWER_SIDE_CONSTANT: f64 = 0.66;

fn grid() -> Vec<(ModelParams, f64, f64)> {
    let mut out = Vec::new();
    for &(p1, p2) in &[(0.3, 0.05), (0.5, 0.2), (0.2, 0.1), (0.6, 0.4), (0.1, 0.01)] {
        for &n in &[12usize, 22, 42, 62] {
            let params = ModelParams::new(n, 2, 2, 0.5, vec![p1, p2]).unwrap();
            let t = params.table().unwrap();
            let c = confusion_coefficients(&t, &neighbor_pairs(&t), n).unwrap();
            let e = minimax_exponent(&params, &c).unwrap().exponent;
            let p = exact_testing_probability(&params, &c).unwrap();
            out.push((params, e, p));
        }
    }
    out
}

#[test]
fn testing_probability_is_sandwiched() {
    const { assert!(LOWER_SIDE_CONSTANT < 5.0) };
    for (params, e, p) in grid() {
        assert!(p <= (-e).exp(), "{:?}", params.p);
        assert!(p >= (-e - LOWER_SIDE_CONSTANT * (1.0 + e.sqrt())).exp(), "{:?} n={}", params.p, params.n);
    }
}

#[test]
fn divergence_matches_high_precision_values() {
    // 50-digit evaluations of -2 ln(sqrt(pq) + sqrt((1-p)(1-q)))
    let cases = [
        (0.003, 0.001, 5.369_724_675_286_576e-4),
        (0.3, 0.05, 1.281_176_806_100_897e-1),
        (0.5, 0.2, 1.053605156578263e-1),
    ];
    for (p, q, want) in cases {
        let got = renyi_half(p, q).unwrap();
        assert!(((got - want) / want).abs() < 1e-13, "{p} {q}: {got}");
    }
}

#[test]
fn graph_exponent_near_hellinger_form() {
    let n = 200usize;
    let (a, b) = (20.0, 4.0);
    let params = ModelParams::new(n, 2, 2, 0.5, vec![a / n as f64, b / n as f64]).unwrap();
    let t = params.table().unwrap();
    let c = confusion_coefficients(&t, &neighbor_pairs(&t), n).unwrap();
    let e = minimax_exponent(&params, &c).unwrap().exponent;
    assert_eq!(e, c.get(0, 1).unwrap() as f64 * renyi_half(a / 200.0, b / 200.0).unwrap());
    let approx = c.get(0, 1).unwrap() as f64 * (a.sqrt() - b.sqrt()).powi(2) / n as f64;
    assert!((e / approx - 1.0).abs() < 0.25, "{e} vs {approx}");
}

#[test]
fn three_uniform_two_communities_has_one_term() {
    let params = ModelParams::new(30, 2, 3, 0.5, vec![0.2, 0.05]).unwrap();
    let t = params.table().unwrap();
    let c = confusion_coefficients(&t, &neighbor_pairs(&t), 30).unwrap();
    assert_eq!(minimax_exponent(&params, &c).unwrap().terms.len(), 1);
}

#[test]
fn spectral_init_follows_node_relabelling() {
    let (n, k) = (60, 2);
    let params = ModelParams::new(n, k, 3, 0.5, vec![0.9, 0.1]).unwrap();
    let truth = balanced_assignment(n, k).unwrap();
    let cfg = SpectralConfig::default();
    for seed in 0..5u64 {
        let h = sample_hypergraph(&params, &truth, seed, u128::MAX).unwrap();
        let perm: Vec<usize> = (0..n).map(|v| (v * 37 + seed as usize) % n).collect();
        let moved = Hypergraph::new(n, 3, h.edges().map(|e| e.iter().map(|&v| perm[v as usize]).collect())).unwrap();
        let direct = spectral_init(&h, k, &cfg).unwrap();
        let relabelled = spectral_init(&moved, k, &cfg).unwrap();
        let mut pulled = vec![0; n];
        for v in 0..n {
            pulled[v] = relabelled.label(perm[v]);
        }
        let pulled = Assignment::new(pulled, k).unwrap();
        assert_eq!(mismatch_ratio(&pulled, &direct).unwrap().ratio, 0.0);
    }
}
