//! Error exponent of the minimax mismatch ratio and related diagnostics.
//!
//! The exponent is `E = Σ m_ij · I(p_i, p_j)` over neighbor pairs, where
//! `I` is the order-1/2 Rényi divergence between two Bernoulli laws:
//!
//! ```text
//! I(p, q) = -2 ln( sqrt(p q) + sqrt((1-p)(1-q)) )
//! ```

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{HsbmError, Result};
use crate::model::ModelParams;
use crate::relations::ConfusionCoefficients;
use crate::seed;

/// Order-1/2 Rényi divergence between Bernoulli(p) and Bernoulli(q), in nats.
///
/// Evaluated as `-2 ln(1 - δ)` with
/// `δ = ((√p - √q)² + (√(1-p) - √(1-q))²) / 2`, which is exactly symmetric,
/// exactly zero for `p == q`, and accurate for tiny probabilities.
pub fn renyi_half(p: f64, q: f64) -> Result<f64> {
    for x in [p, q] {
        if !(x > 0.0 && x < 1.0) {
            return Err(HsbmError::invalid(format!("probability {x} is not in (0, 1)")));
        }
    }
    let a = p.sqrt() - q.sqrt();
    let b = (1.0 - p).sqrt() - (1.0 - q).sqrt();
    let delta = 0.5 * (a * a + b * b);
    Ok(-2.0 * (-delta).ln_1p())
}

/// Log-odds ratio `ln( f(x) / f(y) )` with `f(s) = s / (1 - s)`.
pub fn log_odds_ratio(x: f64, y: f64) -> f64 {
    (x / (1.0 - x)).ln() - (y / (1.0 - y)).ln()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairTerm {
    pub i: usize,
    pub j: usize,
    pub m: u128,
    pub divergence: f64,
    pub contribution: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateReport {
    pub n: usize,
    pub k: usize,
    pub d: usize,
    pub terms: Vec<PairTerm>,
    pub exponent: f64,
    pub predicted_risk: f64,
    pub exact_recovery_ratio: f64,
    /// `E / (k^d ln k)`.
    pub condition_main: Option<f64>,
    /// `E / (k^d · max (p_1 - p_κ)/(p_i - p_j))`; `None` when some pair has
    /// equal probabilities or the extreme probabilities coincide.
    pub condition_order: Option<f64>,
}

pub fn minimax_exponent(params: &ModelParams, coeffs: &ConfusionCoefficients) -> Result<RateReport> {
    if coeffs.d != params.d || coeffs.k != params.k {
        return Err(HsbmError::invalid("coefficients were computed for a different (d, k)"));
    }
    let mut terms = Vec::with_capacity(coeffs.entries().len());
    for e in coeffs.entries() {
        let (i, j) = e.pair;
        if i >= params.p.len() || j >= params.p.len() {
            return Err(HsbmError::invalid("pair index outside the probability vector"));
        }
        let divergence = renyi_half(params.p[i], params.p[j])?;
        terms.push(PairTerm {
            i,
            j,
            m: e.m,
            divergence,
            contribution: e.m as f64 * divergence,
        });
    }
    let exponent: f64 = terms.iter().map(|t| t.contribution).sum();
    let n = params.n;
    let kd = (params.k as f64).powi(params.d as i32);
    let lnk = (params.k as f64).ln();
    let condition_main = (lnk > 0.0).then(|| exponent / (kd * lnk));

    let spread = params.p[0] - params.p[params.p.len() - 1];
    let mut worst: Option<f64> = Some(0.0);
    for t in &terms {
        let gap = params.p[t.i] - params.p[t.j];
        worst = match worst {
            Some(w) if gap != 0.0 => Some(w.max(spread / gap)),
            _ => None,
        };
    }
    let condition_order = worst.filter(|&w| w > 0.0).map(|w| exponent / (kd * w));

    Ok(RateReport {
        n,
        k: params.k,
        d: params.d,
        terms,
        exponent,
        predicted_risk: (-exponent).exp(),
        exact_recovery_ratio: exponent / (n as f64).ln(),
        condition_main,
        condition_order,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Regimes {
    pub exact_recovery: bool,
    pub exponent_over_log_n: f64,
    pub condition_main: Option<f64>,
    pub condition_order: Option<f64>,
}

/// Exact recovery is predicted iff `E / ln n > 1` (strictly).
pub fn predict_regimes(report: &RateReport, n: usize) -> Regimes {
    let ratio = report.exponent / (n as f64).ln();
    Regimes {
        exact_recovery: ratio > 1.0,
        exponent_over_log_n: ratio,
        condition_main: report.condition_main,
        condition_order: report.condition_order,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestingEstimate {
    pub trials: u64,
    pub hits: u64,
    pub estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl TestingEstimate {
    pub fn ci_width(&self) -> f64 {
        self.ci_high - self.ci_low
    }
}

/// Two-sided 95% Wilson score interval.
pub fn wilson_interval(hits: u64, trials: u64) -> (f64, f64) {
    const Z: f64 = 1.959_963_984_540_054;
    let n = trials as f64;
    let p = hits as f64 / n;
    let z2 = Z * Z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = Z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let low = if hits == 0 { 0.0 } else { (centre - half).max(0.0) };
    let high = if hits == trials { 1.0 } else { (centre + half).min(1.0) };
    (low, high)
}

/// Slack used when comparing a weighted sum against zero.
pub(crate) fn zero_slack(weights: &[(f64, u128)]) -> f64 {
    1e-9 * weights.iter().map(|(c, m)| c.abs() * *m as f64).sum::<f64>()
}

const MC_CHUNK: u64 = 1 << 14;

/// Monte Carlo estimate of
/// `Pr{ Σ_pairs Σ_{u ≤ m} C_ij (X_u^(j) - X_u^(i)) ≥ 0 }` with independent
/// `X^(j) ~ Ber(p_j)`, `X^(i) ~ Ber(p_i)` and `C_ij = ln(f(p_i)/f(p_j))`.
///
/// Trials are processed in fixed chunks, each with its own generator seeded
/// from `seed` and the chunk index, so the result is thread-count invariant.
pub fn testing_problem_mc(
    params: &ModelParams,
    coeffs: &ConfusionCoefficients,
    trials: u64,
    seed: u64,
) -> Result<TestingEstimate> {
    if trials == 0 {
        return Err(HsbmError::invalid("need at least one trial"));
    }
    let terms: Vec<(f64, u64, f64, f64)> = coeffs
        .entries()
        .iter()
        .map(|e| {
            let (pi, pj) = (params.p[e.pair.0], params.p[e.pair.1]);
            (log_odds_ratio(pi, pj), e.m as u64, pi, pj)
        })
        .collect();
    let slack = zero_slack(&terms.iter().map(|t| (t.0, t.1 as u128)).collect::<Vec<_>>());
    let chunks = trials.div_ceil(MC_CHUNK);
    let hits: u64 = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed::split(seed, c, 0));
            let count = MC_CHUNK.min(trials - c * MC_CHUNK);
            let mut hits = 0u64;
            for _ in 0..count {
                let mut sum = 0.0;
                for &(weight, m, pi, pj) in &terms {
                    let mut diff = 0i64;
                    for _ in 0..m {
                        diff += i64::from(rng.random::<f64>() < pj);
                        diff -= i64::from(rng.random::<f64>() < pi);
                    }
                    sum += weight * diff as f64;
                }
                if sum >= -slack {
                    hits += 1;
                }
            }
            hits
        })
        .sum();
    let (ci_low, ci_high) = wilson_interval(hits, trials);
    Ok(TestingEstimate {
        trials,
        hits,
        estimate: hits as f64 / trials as f64,
        ci_low,
        ci_high,
    })
}
