use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use hypersbm_core::experiment::{run_experiment, write_csv, ExperimentConfig};
use hypersbm_core::io::{read_assignment, read_hypergraph, write_assignment, write_hypergraph};
use hypersbm_core::model::{validate_params, Violation, DEFAULT_SAMPLE_BUDGET};
use hypersbm_core::rate::{predict_regimes, RateReport};
use hypersbm_core::refine::{default_clamp, DetectConfig, Mode};
use hypersbm_core::relations::{binomial, ConfusionCoefficients};
use hypersbm_core::spectral::SpectralConfig;
use hypersbm_core::{
    balanced_assignment, confusion_coefficients, detect, minimax_exponent, mismatch_ratio, neighbor_pairs, oracle,
    sample_hypergraph, HsbmError, ModelParams, RelationTable,
};

#[derive(Parser)]
#[command(name = "hypersbm", version, about = "Community detection in uniform hypergraph block models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a planted instance and write the hypergraph and its labels.
    Gen(GenArgs),
    /// Recover communities from a hypergraph file.
    Detect(DetectArgs),
    /// Print the error exponent and its per-pair terms.
    Rate(RateArgs),
    /// Run a Monte Carlo sweep described by a config file.
    Experiment(ExperimentArgs),
    /// Brute-force reference computations.
    #[command(subcommand)]
    Oracle(OracleCommand),
}

#[derive(Args, Clone)]
struct ModelArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    k: usize,
    #[arg(long)]
    d: usize,
    /// Edge probabilities, one per relation, comma separated.
    #[arg(long, value_delimiter = ',', conflicts_with = "a", required_unless_present = "a")]
    p: Option<Vec<f64>>,
    /// Scaled probabilities: p_i = a_i / n^(d-1).
    #[arg(long, value_delimiter = ',')]
    a: Option<Vec<f64>>,
    #[arg(long, default_value_t = 0.5)]
    eta: f64,
}

impl ModelArgs {
    fn params(&self) -> hypersbm_core::Result<ModelParams> {
        match (&self.p, &self.a) {
            (Some(p), _) => ModelParams::new(self.n, self.k, self.d, self.eta, p.clone()),
            (None, Some(a)) => ModelParams::from_scaled(self.n, self.k, self.d, self.eta, a),
            (None, None) => Err(HsbmError::InvalidArgument("give --p or --a".into())),
        }
    }
}

#[derive(Args)]
struct GenArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output path for the hypergraph.
    #[arg(long)]
    graph: PathBuf,
    /// Output path for the planted labels.
    #[arg(long)]
    labels: PathBuf,
    /// Allow probabilities of exactly 0 or 1.
    #[arg(long)]
    clamped_test: bool,
    /// Largest number of candidate subsets to enumerate.
    #[arg(long, default_value_t = DEFAULT_SAMPLE_BUDGET)]
    budget: u128,
}

#[derive(Args)]
struct DetectArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    k: usize,
    /// Output path for the estimated labels.
    #[arg(long)]
    out: PathBuf,
    /// Planted labels; prints the mismatch ratio when given.
    #[arg(long)]
    truth: Option<PathBuf>,
    #[arg(long, default_value = "simplified")]
    mode: Mode,
    #[arg(long, default_value_t = SpectralConfig::default().mu)]
    mu: f64,
    #[arg(long, default_value_t = SpectralConfig::default().tau_factor)]
    tau_factor: f64,
    #[arg(long, default_value_t = SpectralConfig::default().tol)]
    tol: f64,
    /// Probability floor for estimated parameters [default: 1/(2 n^(d-1))].
    #[arg(long)]
    eps_clamp: Option<f64>,
}

#[derive(Args)]
struct RateArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Also write the report as CSV (`-` for stdout, replacing the text report).
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output CSV path (`-` for stdout).
    #[arg(long)]
    out: PathBuf,
    #[arg(long, env = "HYPERSBM_JOBS", default_value_t = default_jobs())]
    jobs: usize,
    /// Append a wall-time column (makes output run-dependent).
    #[arg(long)]
    timing: bool,
}

fn default_jobs() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

#[derive(Subcommand)]
enum OracleCommand {
    /// Confusable relation pairs by tuple enumeration.
    Pairs {
        #[arg(long)]
        d: usize,
        #[arg(long)]
        k: usize,
    },
    /// Context counts by subset enumeration.
    M {
        #[arg(long)]
        d: usize,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        n: usize,
    },
    /// Maximum-likelihood labelling by scanning every labelling.
    Mle {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long, value_delimiter = ',', required = true)]
        p: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Mismatch ratio by scanning every label permutation.
    Loss {
        #[arg(long)]
        est: PathBuf,
        #[arg(long)]
        truth: PathBuf,
    },
    /// Exact probability of the pairwise testing event.
    Testing {
        #[command(flatten)]
        model: ModelArgs,
    },
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Runtime(String),
}

impl From<HsbmError> for CliError {
    fn from(e: HsbmError) -> Self {
        match e {
            HsbmError::InvalidArgument(_) | HsbmError::Parse { .. } => CliError::Usage(e.to_string()),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

type CliResult = Result<(), CliError>;

fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
}

fn create(path: &Path) -> Result<Box<dyn Write>, CliError> {
    if path.as_os_str() == "-" {
        return Ok(Box::new(BufWriter::new(io::stdout().lock())));
    }
    let f = File::create(path).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
    Ok(Box::new(BufWriter::new(f)))
}

fn with_path<T>(path: &Path, r: hypersbm_core::Result<T>) -> Result<T, CliError> {
    r.map_err(|e| match CliError::from(e) {
        CliError::Usage(m) => CliError::Usage(format!("{}: {m}", path.display())),
        CliError::Runtime(m) => CliError::Runtime(format!("{}: {m}", path.display())),
    })
}

fn cmd_gen(args: GenArgs) -> CliResult {
    let params = args.model.params()?;
    let diag = validate_params(&params, false);
    for v in &diag.violations {
        match v {
            Violation::ProbabilityOutOfRange { .. } if args.clamped_test => {}
            Violation::ProbabilityOutOfRange { .. } => {
                return Err(CliError::Usage(format!("{v} (use --clamped-test to allow 0 and 1)")));
            }
            _ => eprintln!("warning: {v}"),
        }
    }
    let truth = balanced_assignment(params.n, params.k)?;
    let h = sample_hypergraph(&params, &truth, args.seed, args.budget)?;
    let mut w = create(&args.graph)?;
    write_hypergraph(&h, &mut w)?;
    w.flush()?;
    let mut w = create(&args.labels)?;
    write_assignment(&truth, &mut w)?;
    w.flush()?;
    Ok(())
}

fn cmd_detect(args: DetectArgs) -> CliResult {
    let h = with_path(&args.graph, read_hypergraph(open(&args.graph)?))?;
    let truth = match &args.truth {
        Some(p) => Some(with_path(p, read_assignment(open(p)?))?),
        None => None,
    };
    let cfg = DetectConfig {
        mode: args.mode,
        spectral: SpectralConfig {
            mu: args.mu,
            tau_factor: args.tau_factor,
            tol: args.tol,
        },
        eps: args.eps_clamp,
    };
    let est = detect(&h, args.k, &cfg)?;
    let mut w = create(&args.out)?;
    write_assignment(&est, &mut w)?;
    w.flush()?;
    if let Some(truth) = truth {
        let m = mismatch_ratio(&est, &truth)?;
        let perm: Vec<String> = m.permutation.iter().map(|t| (t + 1).to_string()).collect();
        println!("mismatch {}", m.ratio);
        println!("misclassified {}", m.misclassified);
        println!("permutation {}", perm.join(" "));
    }
    Ok(())
}

fn rate_report(params: &ModelParams) -> hypersbm_core::Result<RateReport> {
    let table = RelationTable::new(params.d, params.k)?;
    let coeffs = confusion_coefficients(&table, &neighbor_pairs(&table), params.n)?;
    minimax_exponent(params, &coeffs)
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.6}")).unwrap_or_else(|| "undefined".into())
}

fn print_rate_text(r: &RateReport, table: &RelationTable, w: &mut dyn Write) -> io::Result<()> {
    writeln!(w, "n = {}  k = {}  d = {}", r.n, r.k, r.d)?;
    writeln!(w, "{:>4} {:>4} {:>14} {:>14} {:>18} {:>18} {:>14}", "i", "j", "h_i", "h_j", "m", "I", "m*I")?;
    for t in &r.terms {
        writeln!(
            w,
            "{:>4} {:>4} {:>14} {:>14} {:>18} {:>18.10e} {:>14.6}",
            t.i + 1,
            t.j + 1,
            table.histogram(t.i).to_string(),
            table.histogram(t.j).to_string(),
            t.m,
            t.divergence,
            t.contribution
        )?;
    }
    let reg = predict_regimes(r, r.n);
    writeln!(w, "exponent        {:.10}", r.exponent)?;
    writeln!(w, "predicted_risk  {:.6e}", r.predicted_risk)?;
    writeln!(w, "E/ln n          {:.6}", r.exact_recovery_ratio)?;
    writeln!(w, "exact_recovery  {}", if reg.exact_recovery { "yes" } else { "no" })?;
    writeln!(w, "condition_main  {}", fmt_opt(r.condition_main))?;
    writeln!(w, "condition_order {}", fmt_opt(r.condition_order))?;
    Ok(())
}

fn write_rate_csv(r: &RateReport, w: &mut dyn Write) -> io::Result<()> {
    writeln!(w, "row,i,j,m,divergence,contribution,exponent,predicted_risk,exponent_over_ln_n")?;
    for t in &r.terms {
        writeln!(w, "pair,{},{},{},{},{},,,", t.i + 1, t.j + 1, t.m, t.divergence, t.contribution)?;
    }
    writeln!(
        w,
        "summary,,,,,,{},{},{}",
        r.exponent, r.predicted_risk, r.exact_recovery_ratio
    )
}

fn cmd_rate(args: RateArgs) -> CliResult {
    let params = args.model.params()?;
    let report = rate_report(&params)?;
    let table = params.table()?;
    let to_stdout = args.csv.as_deref().is_some_and(|p| p.as_os_str() == "-");
    if !to_stdout {
        let mut out = io::stdout().lock();
        print_rate_text(&report, &table, &mut out)?;
    }
    if let Some(path) = &args.csv {
        let mut w = create(path)?;
        write_rate_csv(&report, &mut w)?;
        w.flush()?;
    }
    Ok(())
}

fn cmd_experiment(args: ExperimentArgs) -> CliResult {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| CliError::Runtime(format!("{}: {e}", args.config.display())))?;
    let cfg = with_path(&args.config, ExperimentConfig::parse(&text))?;
    let out = run_experiment(&cfg, args.jobs)?;
    let mut w = create(&args.out)?;
    write_csv(&out, &mut w, args.timing)?;
    w.flush()?;
    if out.failed() {
        let failed: usize = out.summaries.iter().map(|s| s.failed_trials).sum();
        return Err(CliError::Runtime(format!("{failed} trial(s) failed; see status column")));
    }
    Ok(())
}

fn print_coefficients(table: &RelationTable, c: &ConfusionCoefficients) {
    println!("{:>4} {:>4} {:>14} {:>14} {:>18} {:>18} {:>18}", "i", "j", "h_i", "h_j", "forward", "backward", "m");
    for e in c.entries() {
        println!(
            "{:>4} {:>4} {:>14} {:>14} {:>18} {:>18} {:>18}",
            e.pair.0 + 1,
            e.pair.1 + 1,
            table.histogram(e.pair.0).to_string(),
            table.histogram(e.pair.1).to_string(),
            e.forward,
            e.backward,
            e.m
        );
    }
}

fn cmd_oracle(cmd: OracleCommand) -> CliResult {
    match cmd {
        OracleCommand::Pairs { d, k } => {
            let table = RelationTable::new(d, k)?;
            let pairs = oracle::brute_force_neighbor_pairs(&table);
            println!("relations {}", table.len());
            for &(i, j) in pairs.pairs() {
                println!("{} {}  {} ~ {}", i + 1, j + 1, table.histogram(i), table.histogram(j));
            }
        }
        OracleCommand::M { d, k, n } => {
            let table = RelationTable::new(d, k)?;
            let c = oracle::brute_force_m(&table, n)?;
            println!("contexts {}", binomial(n as u64 - 1, d as u64 - 1));
            print_coefficients(&table, &c);
        }
        OracleCommand::Mle { graph, k, p, out } => {
            let h = with_path(&graph, read_hypergraph(open(&graph)?))?;
            let table = RelationTable::new(h.d(), k)?;
            if p.len() != table.len() {
                return Err(CliError::Usage(format!("expected {} probabilities, got {}", table.len(), p.len())));
            }
            let eps = default_clamp(h.n(), h.d());
            let p: Vec<f64> = p.iter().map(|x| x.clamp(eps, 1.0 - eps)).collect();
            let a = oracle::exhaustive_mle(&h, k, &table, &p)?;
            let mut w = create(out.as_deref().unwrap_or(Path::new("-")))?;
            write_assignment(&a, &mut w)?;
            w.flush()?;
        }
        OracleCommand::Loss { est, truth } => {
            let e = with_path(&est, read_assignment(open(&est)?))?;
            let t = with_path(&truth, read_assignment(open(&truth)?))?;
            println!("mismatch {}", oracle::exhaustive_permutation_loss(&e, &t)?);
        }
        OracleCommand::Testing { model } => {
            let params = model.params()?;
            let table = params.table()?;
            let coeffs = confusion_coefficients(&table, &neighbor_pairs(&table), params.n)?;
            println!("probability {}", oracle::exact_testing_probability(&params, &coeffs)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Detect(a) => cmd_detect(a),
        Command::Rate(a) => cmd_rate(a),
        Command::Experiment(a) => cmd_experiment(a),
        Command::Oracle(c) => cmd_oracle(c),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}
