//! Command-line front end: single runs, λ sweeps, pairwise baselines,
//! frontier comparison and the self-check suites.

pub mod compare;
pub mod output;

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use iac_funnel::funnel::{iac_mdsf, pairwise_merge, sweep, ClusteringResult, Normalizers, PairwiseConfig, RunConfig};
use iac_funnel::ingest::{load_joint, sniff_delimiter, synth_joint, ColumnRef, DatasetSpec, Delimiter, SynthSpec};
use iac_funnel::selfcheck::{self, CheckConfig, Fault};
use iac_funnel::{Axis, JointPmf, Problem, Strategy};

use crate::compare::DominanceTable;
use crate::output::{emit, fmt_num, frontier_csv, frontier_json, read_frontier, run_csv, run_json, Format, ReportRecord, RunReport};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INGEST: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "iac-funnel", version, about = "Privacy funnel and information bottleneck by submodular agglomerative clustering")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run IAC-MDSF at one λ.
    Run(RunArgs),
    /// Run IAC-MDSF over a λ grid and write the frontier.
    Sweep(SweepArgs),
    /// Run the pairwise-merge baseline over a threshold grid.
    Baseline(BaselineArgs),
    /// Report which baseline points are weakly dominated by IAC-MDSF points.
    Compare(CompareArgs),
    /// Run the randomized property suites.
    Check(CheckArgs),
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Delimited data file.
    #[arg(long, conflicts_with = "synth", required_unless_present = "synth")]
    pub data: Option<PathBuf>,
    /// Use a seeded synthetic joint instead of a file.
    #[arg(long)]
    pub synth: bool,
    #[arg(long, default_value_t = 4)]
    pub s_size: usize,
    #[arg(long, default_value_t = 12)]
    pub x_size: usize,
    /// Weight of the block-diagonal coupling in the synthetic joint.
    #[arg(long, default_value_t = 0.5)]
    pub rho: f64,
    /// Columns forming S, by header name or zero-based index.
    #[arg(long, value_delimiter = ',')]
    pub s_cols: Vec<String>,
    /// Columns forming X, by header name or zero-based index.
    #[arg(long, value_delimiter = ',')]
    pub x_cols: Vec<String>,
    /// `auto`, `whitespace`, `tab` or a single character.
    #[arg(long, default_value = "auto")]
    pub delimiter: String,
    /// The first line is data.
    #[arg(long)]
    pub no_header: bool,
    /// Tokens marking a missing value.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_values_t = ["?".to_string(), "-9".to_string()])]
    pub missing: Vec<String>,
    /// Equal-width bins for numeric columns.
    #[arg(long)]
    pub bins: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProblemArg {
    Pf,
    Ib,
}

impl From<ProblemArg> for Problem {
    fn from(p: ProblemArg) -> Problem {
        match p {
            ProblemArg::Pf => Problem::Pf,
            ProblemArg::Ib => Problem::Ib,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StrategyArg {
    Supsub,
    Modmod,
}

impl From<StrategyArg> for Strategy {
    fn from(s: StrategyArg) -> Strategy {
        match s {
            StrategyArg::Supsub => Strategy::SupSub,
            StrategyArg::Modmod => Strategy::ModMod,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct SolverArgs {
    #[arg(long, value_enum, default_value_t = ProblemArg::Pf)]
    pub problem: ProblemArg,
    #[arg(long, value_enum, default_value_t = StrategyArg::Supsub)]
    pub strategy: StrategyArg,
    /// Starts per MDSF solve: the empty set plus random subsets.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub restarts: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Cap on outer merges (default |X|).
    #[arg(long)]
    pub max_outer: Option<usize>,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Defaults to the output extension, else JSON.
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
    /// Record wall time in output files (makes them nondeterministic).
    #[arg(long)]
    pub timing: bool,
}

impl OutputArgs {
    fn format(&self) -> Format {
        match self.format {
            Some(FormatArg::Json) => Format::Json,
            Some(FormatArg::Csv) => Format::Csv,
            None => Format::infer(self.out.as_deref()),
        }
    }
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    #[arg(long)]
    pub lambda: f64,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    /// `start:stop:count`, endpoints included.
    #[arg(long, default_value = "0:1:21")]
    pub lambda_grid: String,
    /// Worker threads.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub parallel: u64,
}

#[derive(Debug, Args)]
pub struct BaselineArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    /// `start:stop[:count]` in bits, the same with an `x` prefix for
    /// fractions of H(X) (PF) or I(S;X) (IB), or a comma list.
    #[arg(long, default_value = "x0.1:x0.9:9")]
    pub threshold_grid: String,
    /// IAC-MDSF frontier file to compare against.
    #[arg(long)]
    pub compare_with: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// IAC-MDSF frontier.
    #[arg(long)]
    pub iac: PathBuf,
    /// Pairwise-baseline frontier.
    #[arg(long)]
    pub pairwise: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FaultArg {
    FlipG,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Largest ground set generated (at most 12).
    #[arg(long, default_value_t = 12, value_parser = clap::value_parser!(u64).range(1..=12))]
    pub max_n: u64,
    #[arg(long, value_enum, hide = true)]
    pub inject_fault: Option<FaultArg>,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Ingest(String),
    Failure(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Ingest(_) => EXIT_INGEST,
            CliError::Failure(_) => EXIT_FAILURE,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Ingest(m) | CliError::Failure(m) => m,
        }
    }
}

fn failure(e: impl std::fmt::Display) -> CliError {
    CliError::Failure(e.to_string())
}

/// `FUNNEL_LOG=quiet|info|debug`; info when unset.
pub fn init_logging() {
    let level = match std::env::var("FUNNEL_LOG").ok().as_deref().map(str::trim) {
        Some("quiet") | Some("off") => log::LevelFilter::Off,
        Some("debug") => log::LevelFilter::Debug,
        Some("trace") => log::LevelFilter::Trace,
        Some("warn") => log::LevelFilter::Warn,
        _ => log::LevelFilter::Info,
    };
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .target(env_logger::Target::Stderr)
        .try_init();
}

/// Parses `args` (program name first) and runs the command; returns the
/// process exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    init_logging();
    let outcome = match &cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Baseline(a) => cmd_baseline(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Check(a) => cmd_check(a),
    };
    match outcome {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.exit_code()
        }
    }
}

fn parse_delimiter(token: &str, path: &Path) -> Result<Delimiter, CliError> {
    match token {
        "auto" => sniff_delimiter(path).map_err(|e| CliError::Ingest(e.to_string())),
        "whitespace" | "ws" | "space" => Ok(Delimiter::Whitespace),
        "tab" | "\\t" | "\t" => Ok(Delimiter::Char(b'\t')),
        t if t.len() == 1 && t.is_ascii() => Ok(Delimiter::Char(t.as_bytes()[0])),
        t => Err(CliError::Usage(format!("unsupported delimiter `{t}`"))),
    }
}

/// The joint and a short description of where it came from.
pub fn load_data(args: &DataArgs, seed: u64) -> Result<(JointPmf, String), CliError> {
    if args.synth {
        if args.s_size == 0 || args.x_size == 0 {
            return Err(CliError::Usage("--s-size and --x-size must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&args.rho) {
            return Err(CliError::Usage(format!("--rho must lie in [0, 1], got {}", args.rho)));
        }
        let spec = SynthSpec { s_size: args.s_size, x_size: args.x_size, rho: args.rho, seed };
        let id = format!("synth:s={},x={},rho={},seed={seed}", args.s_size, args.x_size, fmt_num(args.rho));
        return Ok((synth_joint(&spec), id));
    }
    let path = args.data.as_ref().ok_or_else(|| CliError::Usage("--data or --synth is required".into()))?;
    if args.s_cols.is_empty() || args.x_cols.is_empty() {
        return Err(CliError::Usage("--s-cols and --x-cols are required with --data".into()));
    }
    let spec = DatasetSpec {
        delimiter: parse_delimiter(&args.delimiter, path)?,
        has_header: !args.no_header,
        missing_markers: args.missing.clone(),
        bins: args.bins,
        ..DatasetSpec::new(
            path.clone(),
            args.s_cols.iter().map(|c| ColumnRef::parse(c)).collect(),
            args.x_cols.iter().map(|c| ColumnRef::parse(c)).collect(),
        )
    };
    let pmf = load_joint(&spec).map_err(|e| CliError::Ingest(e.to_string()))?;
    log::info!("loaded {}: |S| = {}, |X| = {}", path.display(), pmf.s_len(), pmf.x_len());
    Ok((pmf, path.display().to_string()))
}

fn check_lambda(lambda: f64) -> Result<(), CliError> {
    if (0.0..=1.0).contains(&lambda) {
        Ok(())
    } else {
        Err(CliError::Usage(format!("λ must lie in [0, 1], got {lambda}")))
    }
}

/// `start:stop:count` with endpoints included.
pub fn parse_lambda_grid(spec: &str) -> Result<Vec<f64>, CliError> {
    let bad = || CliError::Usage(format!("bad λ grid `{spec}`, expected start:stop:count"));
    let parts: Vec<&str> = spec.split(':').collect();
    let [start, stop, count] = parts.as_slice() else { return Err(bad()) };
    let start: f64 = start.trim().parse().map_err(|_| bad())?;
    let stop: f64 = stop.trim().parse().map_err(|_| bad())?;
    let count: usize = count.trim().parse().map_err(|_| bad())?;
    if count == 0 {
        return Err(bad());
    }
    check_lambda(start)?;
    check_lambda(stop)?;
    Ok(linspace(start, stop, count))
}

fn linspace(start: f64, stop: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![start];
    }
    (0..count).map(|i| if i + 1 == count { stop } else { start + (stop - start) * i as f64 / (count - 1) as f64 }).collect()
}

/// Thresholds in bits; fractions (`x`-prefixed) multiply `scale`.
pub fn parse_threshold_grid(spec: &str, scale: f64) -> Result<Vec<f64>, CliError> {
    let bad = || CliError::Usage(format!("bad threshold grid `{spec}`"));
    let value = |token: &str| -> Result<(bool, f64), CliError> {
        let t = token.trim();
        let (frac, num) = match t.strip_prefix('x') {
            Some(rest) => (true, rest),
            None => (false, t),
        };
        let v: f64 = num.parse().map_err(|_| bad())?;
        if v.is_nan() || v < 0.0 || !v.is_finite() {
            return Err(bad());
        }
        Ok((frac, v))
    };
    let resolve = |(frac, v): (bool, f64)| if frac { v * scale } else { v };
    let grid = if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        let (a, b, count) = match parts.as_slice() {
            [a, b] => (value(a)?, value(b)?, None),
            [a, b, c] => (value(a)?, value(b)?, Some(c.trim().parse::<usize>().map_err(|_| bad())?)),
            _ => return Err(bad()),
        };
        if a.0 != b.0 {
            return Err(bad());
        }
        let count = count.unwrap_or(9);
        if count == 0 {
            return Err(bad());
        }
        linspace(resolve(a), resolve(b), count)
    } else {
        spec.split(',').map(|t| value(t).map(resolve)).collect::<Result<Vec<_>, _>>()?
    };
    let mut grid = grid;
    grid.sort_by(f64::total_cmp);
    Ok(grid)
}

fn record(
    lambda: f64,
    problem: Problem,
    strategy: &str,
    norms: &Normalizers,
    result: &ClusteringResult,
    seed: u64,
    wall_time_ms: u64,
) -> ReportRecord {
    let p = norms.point(lambda, result);
    ReportRecord {
        lambda,
        problem: problem.as_str().to_string(),
        strategy: strategy.to_string(),
        leakage_bits: p.leakage_bits,
        utility_bits: p.utility_bits,
        leakage_norm: p.leakage_norm,
        utility_loss_norm: p.utility_loss_norm,
        alphabet_size: p.alphabet_size,
        iterations: p.iterations,
        seed,
        wall_time_ms,
    }
}

fn run_config(solver: &SolverArgs, lambda: f64) -> RunConfig {
    RunConfig {
        lambda,
        problem: solver.problem.into(),
        strategy: solver.strategy.into(),
        restarts: solver.restarts as usize,
        seed: solver.seed,
        max_outer_iters: solver.max_outer,
        ..Default::default()
    }
}

fn elapsed_ms(start: Instant) -> u64 {
    start.elapsed().as_millis() as u64
}

fn write_frontier(out: &OutputArgs, records: &[ReportRecord]) -> Result<(), CliError> {
    let bytes = match out.format() {
        Format::Csv => frontier_csv(records).map_err(failure)?,
        Format::Json => frontier_json(records).map_err(failure)?,
    };
    emit(out.out.as_deref(), &bytes).map_err(failure)
}

pub fn cmd_run(args: &RunArgs) -> Result<(), CliError> {
    check_lambda(args.lambda)?;
    let (pmf, dataset_id) = load_data(&args.data, args.solver.seed)?;
    let cfg = run_config(&args.solver, args.lambda);
    let start = Instant::now();
    let result = iac_mdsf(&pmf, &cfg).map_err(failure)?;
    let ms = elapsed_ms(start);
    log::info!(
        "λ = {}: {} merges, |X̂| = {}, leakage {} bits, utility {} bits, {ms} ms",
        fmt_num(args.lambda),
        result.iterations,
        result.alphabet_size(),
        fmt_num(result.leakage_bits),
        fmt_num(result.utility_bits)
    );
    for w in &result.warnings {
        log::warn!("{w}");
    }
    let norms = Normalizers::of(&pmf);
    let wall = if args.output.timing { ms } else { 0 };
    let report = RunReport {
        record: record(args.lambda, cfg.problem, cfg.strategy.as_str(), &norms, &result, cfg.seed, wall),
        dataset_id,
        trajectory: result.trajectory.clone(),
        leakage_path: result.leakage_path.clone(),
        utility_path: result.utility_path.clone(),
        merges: result.merge_history.iter().map(|m| m.labels.clone()).collect(),
        warnings: result.warnings.clone(),
    };
    let out = &args.output;
    let bytes = match out.format() {
        Format::Csv => run_csv(&report).map_err(failure)?,
        Format::Json => run_json(&report).map_err(failure)?,
    };
    emit(out.out.as_deref(), &bytes).map_err(failure)
}

pub fn cmd_sweep(args: &SweepArgs) -> Result<(), CliError> {
    let grid = parse_lambda_grid(&args.lambda_grid)?;
    let (pmf, dataset_id) = load_data(&args.data, args.solver.seed)?;
    let base = run_config(&args.solver, 0.0);
    let start = Instant::now();
    let runs = sweep(&pmf, &grid, &base, args.parallel as usize).map_err(failure)?;
    let ms = elapsed_ms(start);
    log::info!("swept {} values of λ on {dataset_id} in {ms} ms", runs.len());
    let norms = Normalizers::of(&pmf);
    let wall = if args.output.timing { ms } else { 0 };
    let records: Vec<ReportRecord> = runs
        .iter()
        .map(|(p, r)| record(p.lambda, base.problem, base.strategy.as_str(), &norms, r, base.seed, wall))
        .collect();
    if base.problem == Problem::Ib {
        let rises = records.windows(2).filter(|w| w[1].utility_loss_norm > w[0].utility_loss_norm + 1e-12).count();
        log::info!("utility_loss_norm rises at {rises} of {} consecutive λ steps", records.len().saturating_sub(1));
    }
    write_frontier(&args.output, &records)
}

pub fn cmd_baseline(args: &BaselineArgs) -> Result<(), CliError> {
    let (pmf, dataset_id) = load_data(&args.data, args.solver.seed)?;
    let problem: Problem = args.solver.problem.into();
    let scale = match problem {
        Problem::Pf => pmf.entropy(Axis::X),
        Problem::Ib => pmf.mutual_information(),
    };
    let grid = parse_threshold_grid(&args.threshold_grid, scale)?;
    let norms = Normalizers::of(&pmf);
    let mut records = Vec::with_capacity(grid.len());
    let start = Instant::now();
    for &threshold in &grid {
        let t0 = Instant::now();
        let result = pairwise_merge(&pmf, &PairwiseConfig { problem, threshold }).map_err(failure)?;
        let ms = elapsed_ms(t0);
        log::info!(
            "threshold {} bits: {} merges, |X̂| = {}, {ms} ms",
            fmt_num(threshold),
            result.iterations,
            result.alphabet_size()
        );
        let wall = if args.output.timing { ms } else { 0 };
        records.push(record(threshold, problem, "pairwise", &norms, &result, args.solver.seed, wall));
    }
    log::info!("baseline on {dataset_id}: {} thresholds in {} ms", grid.len(), elapsed_ms(start));
    write_frontier(&args.output, &records)?;
    if let Some(path) = &args.compare_with {
        let iac = read_frontier(path).map_err(|e| CliError::Ingest(e.to_string()))?;
        eprint!("{}", DominanceTable::build(&iac, &records).render());
    }
    Ok(())
}

pub fn cmd_compare(args: &CompareArgs) -> Result<(), CliError> {
    let iac = read_frontier(&args.iac).map_err(|e| CliError::Ingest(e.to_string()))?;
    let pairwise = read_frontier(&args.pairwise).map_err(|e| CliError::Ingest(e.to_string()))?;
    print!("{}", DominanceTable::build(&iac, &pairwise).render());
    Ok(())
}

pub fn cmd_check(args: &CheckArgs) -> Result<(), CliError> {
    let cfg = CheckConfig {
        trials: args.trials,
        seed: args.seed,
        max_n: args.max_n as usize,
        fault: match args.inject_fault {
            Some(FaultArg::FlipG) => Fault::FlipG,
            None => Fault::None,
        },
    };
    if cfg.trials == 0 {
        log::warn!("--trials 0: no checks run");
        eprintln!("warning: --trials 0, no checks run");
    }
    let reports = selfcheck::run_all(&cfg);
    let mut failed = Vec::new();
    for r in &reports {
        println!(
            "{:<20} {}  checks {:>6}  failures {:>4}  worst {}  tol {}",
            r.name,
            if r.passed() { "PASS" } else { "FAIL" },
            r.checks,
            r.failures,
            fmt_num(r.worst),
            fmt_num(r.tolerance)
        );
        if !r.passed() {
            failed.push(r.name);
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Failure(format!("failed suites: {}", failed.join(", "))))
    }
}
