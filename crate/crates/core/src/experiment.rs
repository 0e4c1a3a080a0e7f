//! Monte Carlo experiment runner and its CSV output.
//!
//! Configuration is a flat `key = value` file; see the README for the
//! grammar. Every trial is seeded with `split(master_seed, n_index, trial)`
//! and results are keyed by `(n, trial)`, so the output does not depend on
//! the number of worker threads.

use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;

use crate::error::{HsbmError, Result};
use crate::metrics::mismatch_ratio;
use crate::model::{balanced_assignment, sample_hypergraph, ModelParams, DEFAULT_SAMPLE_BUDGET};
use crate::rate::minimax_exponent;
use crate::refine::{detect, DetectConfig, Mode};
use crate::relations::{confusion_coefficients, neighbor_pairs, RelationTable};
use crate::seed;
use crate::spectral::SpectralConfig;

pub const CSV_VERSION: &str = "hypersbm-csv-v1";

#[derive(Debug, Clone, PartialEq)]
pub enum ProbabilitySpec {
    /// The same probabilities at every `n`.
    Explicit(Vec<f64>),
    /// `p_i = a_i / n^(d-1)`.
    Scaled(Vec<f64>),
}

impl ProbabilitySpec {
    pub fn resolve(&self, n: usize, k: usize, d: usize, eta: f64) -> Result<ModelParams> {
        match self {
            ProbabilitySpec::Explicit(p) => ModelParams::new(n, k, d, eta, p.clone()),
            ProbabilitySpec::Scaled(a) => ModelParams::from_scaled(n, k, d, eta, a),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub d: usize,
    pub k: usize,
    pub eta: f64,
    pub n_grid: Vec<usize>,
    pub probabilities: ProbabilitySpec,
    pub trials: usize,
    pub master_seed: u64,
    pub detect: DetectConfig,
    pub sample_budget: u128,
}

fn parse_list<T: std::str::FromStr>(value: &str, line: usize, key: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<T>()
                .map_err(|_| HsbmError::parse(line, format!("bad value {s:?} in {key}")))
        })
        .collect()
}

fn parse_one<T: std::str::FromStr>(value: &str, line: usize, key: &str) -> Result<T> {
    value
        .parse::<T>()
        .map_err(|_| HsbmError::parse(line, format!("bad value {value:?} for {key}")))
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut d = None;
        let mut k = None;
        let mut eta = 0.5;
        let mut n_grid: Option<Vec<usize>> = None;
        let mut p: Option<Vec<f64>> = None;
        let mut a: Option<Vec<f64>> = None;
        let mut trials = None;
        let mut master_seed = 0u64;
        let mut detect = DetectConfig::default();
        let mut sample_budget = DEFAULT_SAMPLE_BUDGET;
        let mut seen = std::collections::HashSet::new();

        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| HsbmError::parse(line, "expected `key = value`"))?;
            let (key, value) = (key.trim(), value.trim());
            if !seen.insert(key.to_string()) {
                return Err(HsbmError::parse(line, format!("duplicate key {key}")));
            }
            match key {
                "d" => d = Some(parse_one(value, line, key)?),
                "k" => k = Some(parse_one(value, line, key)?),
                "eta" => eta = parse_one(value, line, key)?,
                "n_grid" => n_grid = Some(parse_list(value, line, key)?),
                "p" => p = Some(parse_list(value, line, key)?),
                "a" => a = Some(parse_list(value, line, key)?),
                "trials" => trials = Some(parse_one(value, line, key)?),
                "seed" => master_seed = parse_one(value, line, key)?,
                "mode" => detect.mode = value.parse::<Mode>().map_err(|e| HsbmError::parse(line, e.to_string()))?,
                "mu" => detect.spectral.mu = parse_one(value, line, key)?,
                "tau_factor" => detect.spectral.tau_factor = parse_one(value, line, key)?,
                "tol" => detect.spectral.tol = parse_one(value, line, key)?,
                "eps_clamp" => detect.eps = Some(parse_one(value, line, key)?),
                "sample_budget" => sample_budget = parse_one(value, line, key)?,
                other => return Err(HsbmError::parse(line, format!("unknown key {other}"))),
            }
        }

        let missing = |what: &str| HsbmError::parse(0, format!("missing required key {what}"));
        let probabilities = match (p, a) {
            (Some(p), None) => ProbabilitySpec::Explicit(p),
            (None, Some(a)) => ProbabilitySpec::Scaled(a),
            (Some(_), Some(_)) => return Err(HsbmError::parse(0, "give either p or a, not both")),
            (None, None) => return Err(missing("p or a")),
        };
        let cfg = Self {
            d: d.ok_or_else(|| missing("d"))?,
            k: k.ok_or_else(|| missing("k"))?,
            eta,
            n_grid: n_grid.ok_or_else(|| missing("n_grid"))?,
            probabilities,
            trials: trials.ok_or_else(|| missing("trials"))?,
            master_seed,
            detect,
            sample_budget,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(HsbmError::invalid("trials must be at least 1"));
        }
        if self.n_grid.is_empty() {
            return Err(HsbmError::invalid("n_grid is empty"));
        }
        if self.n_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(HsbmError::invalid("n_grid must be strictly ascending"));
        }
        for &n in &self.n_grid {
            self.probabilities.resolve(n, self.k, self.d, self.eta)?;
            if n < self.d * self.k {
                return Err(HsbmError::invalid(format!("n = {n} is below d*k")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TrialStatus {
    Ok,
    Failed(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub n: usize,
    pub trial: usize,
    pub seed: u64,
    pub mismatch: f64,
    pub exact: bool,
    pub exponent: f64,
    pub status: TrialStatus,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub n: usize,
    pub exponent: f64,
    pub ok_trials: usize,
    pub failed_trials: usize,
    pub mean_mismatch: f64,
    /// Mean of `ln(mismatch)` over trials with a nonzero mismatch.
    pub mean_ln_mismatch: Option<f64>,
    /// Mean of `ln(max(mismatch, 1/n))` over all successful trials.
    pub mean_ln_censored: f64,
    pub zero_trials: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub records: Vec<TrialRecord>,
    pub summaries: Vec<Summary>,
}

impl ExperimentOutput {
    pub fn failed(&self) -> bool {
        self.summaries.iter().any(|s| s.failed_trials > 0)
    }
}

/// Exponent `E(n)` of the configured model at node count `n`.
pub fn exponent_at(cfg: &ExperimentConfig, n: usize) -> Result<f64> {
    let params = cfg.probabilities.resolve(n, cfg.k, cfg.d, cfg.eta)?;
    let table = RelationTable::new(cfg.d, cfg.k)?;
    let coeffs = confusion_coefficients(&table, &neighbor_pairs(&table), n)?;
    Ok(minimax_exponent(&params, &coeffs)?.exponent)
}

fn run_trial(cfg: &ExperimentConfig, n: usize, trial_seed: u64) -> Result<(f64, bool)> {
    let params = cfg.probabilities.resolve(n, cfg.k, cfg.d, cfg.eta)?;
    let truth = balanced_assignment(n, cfg.k)?;
    let h = sample_hypergraph(&params, &truth, trial_seed, cfg.sample_budget)?;
    let est = detect(&h, cfg.k, &cfg.detect)?;
    let m = mismatch_ratio(&est, &truth)?;
    Ok((m.ratio, m.misclassified == 0))
}

/// Runs every `(n, trial)` cell on a pool of `jobs` threads.
pub fn run_experiment(cfg: &ExperimentConfig, jobs: usize) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let exponents: Vec<f64> = cfg
        .n_grid
        .iter()
        .map(|&n| exponent_at(cfg, n))
        .collect::<Result<_>>()?;
    let cells: Vec<(usize, usize)> = (0..cfg.n_grid.len())
        .flat_map(|ni| (0..cfg.trials).map(move |t| (ni, t)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| HsbmError::invalid(format!("cannot build worker pool: {e}")))?;
    let records: Vec<TrialRecord> = pool.install(|| {
        cells
            .par_iter()
            .map(|&(ni, trial)| {
                let n = cfg.n_grid[ni];
                let trial_seed = seed::split(cfg.master_seed, ni as u64, trial as u64);
                let start = Instant::now();
                let outcome = run_trial(cfg, n, trial_seed);
                let wall_ms = start.elapsed().as_secs_f64() * 1e3;
                let (mismatch, exact, status) = match outcome {
                    Ok((m, e)) => (m, e, TrialStatus::Ok),
                    Err(e) => (f64::NAN, false, TrialStatus::Failed(e.to_string())),
                };
                TrialRecord {
                    n,
                    trial,
                    seed: trial_seed,
                    mismatch,
                    exact,
                    exponent: exponents[ni],
                    status,
                    wall_ms,
                }
            })
            .collect()
    });

    let summaries = cfg
        .n_grid
        .iter()
        .enumerate()
        .map(|(ni, &n)| summarize(n, exponents[ni], &records[ni * cfg.trials..(ni + 1) * cfg.trials]))
        .collect();
    Ok(ExperimentOutput { records, summaries })
}

fn summarize(n: usize, exponent: f64, records: &[TrialRecord]) -> Summary {
    let ok: Vec<f64> = records
        .iter()
        .filter(|r| r.status == TrialStatus::Ok)
        .map(|r| r.mismatch)
        .collect();
    let floor = 1.0 / n as f64;
    let nonzero: Vec<f64> = ok.iter().copied().filter(|&m| m > 0.0).collect();
    let mean = |xs: &[f64]| {
        if xs.is_empty() {
            f64::NAN
        } else {
            xs.iter().sum::<f64>() / xs.len() as f64
        }
    };
    let ln_nonzero: Vec<f64> = nonzero.iter().map(|m| m.ln()).collect();
    let ln_censored: Vec<f64> = ok.iter().map(|m| m.max(floor).ln()).collect();
    Summary {
        n,
        exponent,
        ok_trials: ok.len(),
        failed_trials: records.len() - ok.len(),
        mean_mismatch: mean(&ok),
        mean_ln_mismatch: (!ln_nonzero.is_empty()).then(|| mean(&ln_nonzero)),
        mean_ln_censored: mean(&ln_censored),
        zero_trials: ok.len() - nonzero.len(),
    }
}

/// Writes trial rows followed by one summary row per `n`.
pub fn write_csv<W: Write>(out: &ExperimentOutput, mut w: W, with_timing: bool) -> Result<()> {
    write!(
        w,
        "{CSV_VERSION},n,trial,seed,status,mismatch,exact,exponent,\
         mean_mismatch,mean_ln_mismatch,mean_ln_censored,zero_trials,ok_trials"
    )?;
    if with_timing {
        write!(w, ",wall_ms")?;
    }
    writeln!(w)?;
    let mut records = out.records.iter().peekable();
    for s in &out.summaries {
        while let Some(r) = records.next_if(|r| r.n == s.n) {
            let (status, mismatch) = match &r.status {
                TrialStatus::Ok => ("ok".to_string(), r.mismatch.to_string()),
                TrialStatus::Failed(msg) => (format!("error: {}", msg.replace([',', '\n'], ";")), String::new()),
            };
            write!(
                w,
                "trial,{},{},{},{},{},{},{},,,,,",
                r.n,
                r.trial,
                r.seed,
                status,
                mismatch,
                u8::from(r.exact),
                r.exponent
            )?;
            if with_timing {
                write!(w, ",{:.3}", r.wall_ms)?;
            }
            writeln!(w)?;
        }
        let status = if s.failed_trials == 0 { "ok" } else { "partial" };
        write!(
            w,
            "summary,{},,,{},,,{},{},{},{},{},{}",
            s.n,
            status,
            s.exponent,
            s.mean_mismatch,
            s.mean_ln_mismatch.map(|x| x.to_string()).unwrap_or_default(),
            s.mean_ln_censored,
            s.zero_trials,
            s.ok_trials
        )?;
        if with_timing {
            write!(w, ",")?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            d: 3,
            k: 2,
            eta: 0.5,
            n_grid: vec![60],
            probabilities: ProbabilitySpec::Scaled(vec![60.0, 10.0]),
            trials: 10,
            master_seed: 0,
            detect: DetectConfig {
                mode: Mode::Simplified,
                spectral: SpectralConfig::default(),
                eps: None,
            },
            sample_budget: DEFAULT_SAMPLE_BUDGET,
        }
    }
}
