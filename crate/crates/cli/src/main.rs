use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use thiserror::Error;

use qhs_core::boolean_fn::{
    gen_lower_bound_family, gen_random_dnf, heavy_coeffs, parse_word, wht, BoolFnError,
    DnfFormula, RealTable,
};
use qhs_core::boosting::{StageRecord, Termination};
use qhs_core::qhs::{
    default_term_len, qhs_run, query_sweep, Mode, QhsConfig, QhsError, SweepCell, SCHEMA_VERSION,
};
use qhs_core::quantum_sim::{gl_operator_c, GateFault, QueryCounter};
use qhs_core::seeding::{derive_path, rng_from, STREAM_SAMPLE, STREAM_STAGE};
use qhs_core::verify;
use qhs_core::weak_parity::{qwdnf, MembershipOracle, QwdnfParams, SharedSample, WeakError};

const EXIT_CODES: &str = "\
Exit codes:
  0  success
  2  usage error
  3  I/O error
  4  invalid parameters or instance
  5  weak learner found no heavy parity
  6  boosting stage budget exhausted
  7  a verification suite failed

Set QHS_LAB_CAP to change the largest n accepted (default 20).";

#[derive(Parser)]
#[command(name = "qhs-lab", version, about = "Quantum Harmonic Sieve lab", after_help = EXIT_CODES)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a DNF instance as JSON
    Gen(GenArgs),
    /// Learn an instance and write the run report
    Learn(LearnArgs),
    /// Run a single weak-learner call on an instance
    Weak(WeakArgs),
    /// Print the Fourier spectrum of an instance as CSV
    Spectrum(SpectrumArgs),
    /// Run the invariant suites
    Verify(VerifyArgs),
    /// Run a grid of learners and fit query-count slopes
    Sweep(SweepArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    Random,
    Lowerbound,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    QuantumSim,
    ClassicalExact,
    ClassicalSampled,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::QuantumSim => Mode::QuantumSim,
            ModeArg::ClassicalExact => Mode::ClassicalExact,
            ModeArg::ClassicalSampled => Mode::ClassicalSampled,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FaultArg {
    DropCz,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_enum, default_value = "random")]
    family: Family,
    #[arg(long, default_value_t = 10)]
    n: usize,
    #[arg(long, default_value_t = 3)]
    s: usize,
    /// Literals per term (random family); defaults to min(3, n)
    #[arg(long)]
    term_len: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Prefix length (lowerbound family)
    #[arg(long)]
    t: Option<usize>,
    /// Number of y variables (lowerbound family)
    #[arg(long)]
    u: Option<usize>,
    /// Word of 2^t symbols from {0, 1, yj, ~yj}, comma separated
    #[arg(long)]
    word: Option<String>,
    /// Output file; stdout when absent
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunParams {
    #[arg(long, default_value_t = 0.1)]
    epsilon: f64,
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    #[arg(long, value_enum, default_value = "classical-exact")]
    mode: ModeArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 4.0)]
    c1: f64,
    #[arg(long, default_value_t = 1.0)]
    c2: f64,
    #[arg(long, default_value_t = 8.0)]
    c_r: f64,
}

#[derive(Args)]
struct LearnArgs {
    /// Instance JSON file
    instance: PathBuf,
    /// Expected number of variables; must match the instance
    #[arg(long)]
    n: Option<usize>,
    /// Term bound; defaults to the instance's term count
    #[arg(long)]
    s: Option<usize>,
    #[command(flatten)]
    params: RunParams,
    /// Report JSON; stdout when absent
    #[arg(long)]
    out: Option<PathBuf>,
    /// Stage rows as CSV
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct WeakArgs {
    instance: PathBuf,
    /// Target advantage; parities with coefficient at least 2*gamma are sought
    #[arg(long, default_value_t = 0.1)]
    gamma: f64,
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    #[arg(long, value_enum, default_value = "quantum-sim")]
    mode: ModeArg,
    /// Shared sample size; defaults to ceil(8 / gamma^2)
    #[arg(long)]
    sample_size: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SpectrumArgs {
    instance: PathBuf,
    /// Only coefficients with magnitude at least theta
    #[arg(long)]
    theta: Option<f64>,
    /// Also write the state C|0> as a binary dump
    #[arg(long)]
    dump_state: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Summary JSON
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, hide = true)]
    inject_fault: Option<FaultArg>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, value_delimiter = ',', default_value = "10")]
    n: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "1,2,4")]
    s: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "0.2")]
    epsilon: Vec<f64>,
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    #[arg(long, value_enum, default_value = "quantum-sim")]
    mode: ModeArg,
    /// Instances per grid cell
    #[arg(long, default_value_t = 3)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Output directory for sweep.json and sweep.csv
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("{0}")]
    Invalid(String),
    #[error("{0}")]
    WeakLearner(String),
    #[error("{0}")]
    StageBudget(String),
    #[error("{0} verification suite(s) failed")]
    VerifyFailed(usize),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Io { .. } => 3,
            CliError::Invalid(_) => 4,
            CliError::WeakLearner(_) => 5,
            CliError::StageBudget(_) => 6,
            CliError::VerifyFailed(_) => 7,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.display().to_string(),
        source,
    }
}

impl From<BoolFnError> for CliError {
    fn from(e: BoolFnError) -> Self {
        CliError::Invalid(e.to_string())
    }
}

impl From<QhsError> for CliError {
    fn from(e: QhsError) -> Self {
        match e {
            QhsError::WeakLearnerFailure(_) => CliError::WeakLearner(e.to_string()),
            QhsError::StageBudgetExceeded(_) => CliError::StageBudget(e.to_string()),
            other => CliError::Invalid(other.to_string()),
        }
    }
}

/// Writes through a temporary file in the target directory, then renames.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err(path))?;
    tmp.write_all(bytes).map_err(io_err(path))?;
    tmp.as_file().sync_all().map_err(io_err(path))?;
    tmp.persist(path).map_err(|e| CliError::Io {
        path: path.display().to_string(),
        source: e.error,
    })?;
    Ok(())
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
    match out {
        Some(p) => write_atomic(p, bytes),
        None => io::stdout()
            .write_all(bytes)
            .map_err(io_err(Path::new("<stdout>"))),
    }
}

fn to_json(value: &impl Serialize) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s.into_bytes()
}

fn read_instance(path: &Path) -> Result<DnfFormula, CliError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))
}

fn csv_bytes<T: Serialize>(rows: &[T]) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| CliError::Invalid(e.to_string()))?;
    }
    w.into_inner().map_err(|e| CliError::Invalid(e.to_string()))
}

fn cmd_gen(args: GenArgs) -> Result<(), CliError> {
    let f = match args.family {
        Family::Random => {
            let term_len = args.term_len.unwrap_or_else(|| default_term_len(args.n));
            gen_random_dnf(args.n, args.s, term_len, args.seed)?
        }
        Family::Lowerbound => {
            let (t, u, word) = match (args.t, args.u, args.word.as_deref()) {
                (Some(t), Some(u), Some(w)) => (t, u, w),
                _ => {
                    return Err(CliError::Usage(
                        "lowerbound family needs --t, --u and --word".into(),
                    ))
                }
            };
            gen_lower_bound_family(t, u, &parse_word(word)?)?
        }
    };
    emit(args.out.as_deref(), &to_json(&f))
}

/// Stage row as written to CSV; column order is part of the schema.
#[derive(Serialize)]
struct CsvStage {
    schema: u32,
    t: usize,
    e_t: f64,
    exact_e: f64,
    a: u64,
    sign: i8,
    advantage: f64,
    exact_correlation: f64,
    exact_best: f64,
    smoothness: f64,
    quantum_queries: u64,
    classical_queries: u64,
}

impl From<&StageRecord> for CsvStage {
    fn from(r: &StageRecord) -> Self {
        CsvStage {
            schema: SCHEMA_VERSION,
            t: r.t,
            e_t: r.e_t,
            exact_e: r.exact_e,
            a: r.a.0,
            sign: r.sign,
            advantage: r.advantage,
            exact_correlation: r.exact_correlation,
            exact_best: r.exact_best,
            smoothness: r.smoothness,
            quantum_queries: r.quantum_queries,
            classical_queries: r.classical_queries,
        }
    }
}

fn cmd_learn(args: LearnArgs) -> Result<(), CliError> {
    let f = read_instance(&args.instance)?;
    if let Some(n) = args.n {
        if n != f.n() {
            return Err(CliError::Invalid(format!("--n {n} but instance has n = {}", f.n())));
        }
    }
    let p = &args.params;
    let cfg = QhsConfig {
        c1: p.c1,
        c2: p.c2,
        c_r: p.c_r,
        ..QhsConfig::new(
            f.n(),
            args.s.unwrap_or(f.size().max(1)),
            p.epsilon,
            p.delta,
            p.mode.into(),
            p.seed,
        )
    };
    let report = qhs_run(&f, &cfg)?;
    if let Some(path) = &args.csv {
        let rows: Vec<CsvStage> = report.stages.iter().map(CsvStage::from).collect();
        write_atomic(path, &csv_bytes(&rows)?)?;
    }
    emit(args.out.as_deref(), &to_json(&report))?;
    match report.termination {
        Termination::Converged => Ok(()),
        Termination::WeakLearnerFailure => Err(CliError::WeakLearner(format!(
            "weak learner failed at stage {}",
            report.stage_count + 1
        ))),
        Termination::StageBudgetExceeded => Err(CliError::StageBudget(format!(
            "stage budget of {} exhausted",
            report.derived.k_max
        ))),
    }
}

#[derive(Serialize)]
struct WeakReport {
    schema: u32,
    mode: Mode,
    gamma: f64,
    sample_size: usize,
    a: u64,
    sign: i8,
    est_advantage: f64,
    exact_coefficient: f64,
    queries: QueryCounter,
}

fn cmd_weak(args: WeakArgs) -> Result<(), CliError> {
    let f = read_instance(&args.instance)?;
    let oracle = MembershipOracle::from_dnf(&f)?;
    let n = f.n();
    let params = QwdnfParams::new(args.gamma, args.delta);
    let size = args
        .sample_size
        .unwrap_or_else(|| (8.0 / (args.gamma * args.gamma)).ceil() as usize);
    let exact = wht(&RealTable::from_bits(oracle.table()));
    let mut counter = QueryCounter::default();
    let mode: Mode = args.mode.into();
    let h = match mode {
        Mode::ClassicalExact => {
            counter.classical += 1 << n;
            let (a, c) = qhs_core::boolean_fn::best_parity(&RealTable::from_bits(oracle.table()));
            qhs_core::weak_parity::WeakHypothesis::new(a, c)
        }
        Mode::ClassicalSampled | Mode::QuantumSim => {
            let mut rng = rng_from(derive_path(args.seed, &[STREAM_SAMPLE]));
            let sample = SharedSample::draw(&oracle, size, &mut rng, &mut counter);
            let est = sample
                .correlations(|_, fx| fx)
                .map_err(|e| CliError::Invalid(e.to_string()))?;
            if mode == Mode::ClassicalSampled {
                qhs_core::weak_parity::sampled_weak_learner(&sample, |_| 1.0)
                    .map_err(|e| CliError::Invalid(e.to_string()))?
            } else {
                let table = oracle.table();
                let mut rng = rng_from(derive_path(args.seed, &[STREAM_STAGE, 1]));
                match qwdnf(n, &params, &|x| table[x as usize], &est, &mut rng, &mut counter) {
                    Ok(h) => h,
                    Err(e @ WeakError::NoHeavyCoefficient { .. }) => {
                        return Err(CliError::WeakLearner(e.to_string()))
                    }
                    Err(e) => return Err(CliError::Invalid(e.to_string())),
                }
            }
        }
    };
    let report = WeakReport {
        schema: SCHEMA_VERSION,
        mode,
        gamma: args.gamma,
        sample_size: if mode == Mode::ClassicalExact { 0 } else { size },
        a: h.a.0,
        sign: h.sign,
        est_advantage: h.est_advantage,
        exact_coefficient: exact.values()[h.a.0 as usize],
        queries: counter,
    };
    emit(args.out.as_deref(), &to_json(&report))
}

#[derive(Serialize)]
struct SpectrumRow {
    a: u64,
    coefficient: f64,
}

fn cmd_spectrum(args: SpectrumArgs) -> Result<(), CliError> {
    let f = read_instance(&args.instance)?;
    let table = f.truth_table()?;
    let g = RealTable::from_bits(&table);
    // Without a threshold, every nonzero coefficient.
    let theta = args.theta.unwrap_or(f64::MIN_POSITIVE);
    let rows: Vec<SpectrumRow> = heavy_coeffs(&g, theta)?
        .into_iter()
        .map(|(a, c)| SpectrumRow {
            a: a.0,
            coefficient: c,
        })
        .collect();
    if let Some(path) = &args.dump_state {
        let state = gl_operator_c(f.n(), &|x| table[x as usize], &mut QueryCounter::default())
            .map_err(|e| CliError::Invalid(e.to_string()))?;
        let mut buf = Vec::new();
        state.write_dump(&mut buf).map_err(io_err(path))?;
        write_atomic(path, &buf)?;
    }
    emit(args.out.as_deref(), &csv_bytes(&rows)?)
}

fn cmd_verify(args: VerifyArgs) -> Result<(), CliError> {
    let fault = match args.inject_fault {
        Some(FaultArg::DropCz) => GateFault::DropCz,
        None => GateFault::None,
    };
    let results = verify::run_all(args.seed, fault);
    let mut failed = 0;
    for r in &results {
        let status = if r.passed() { "PASS" } else { "FAIL" };
        println!(
            "{status} {:<28} checks={:<6} failures={:<4} worst={:e}  {}",
            r.name, r.checks, r.failures, r.worst, r.note
        );
        failed += usize::from(!r.passed());
    }
    if let Some(path) = &args.out {
        write_atomic(path, &to_json(&results))?;
    }
    if failed > 0 {
        return Err(CliError::VerifyFailed(failed));
    }
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> Result<(), CliError> {
    if args.reps == 0 {
        return Err(CliError::Invalid("--reps must be positive".into()));
    }
    let mut grid = Vec::new();
    for &n in &args.n {
        for &s in &args.s {
            for &epsilon in &args.epsilon {
                grid.push(SweepCell { n, s, epsilon });
            }
        }
    }
    let template = QhsConfig::new(1, 1, 0.1, args.delta, args.mode.into(), args.seed);
    for cell in &grid {
        QhsConfig {
            n: cell.n,
            s: cell.s,
            epsilon: cell.epsilon,
            ..template.clone()
        }
        .validate()?;
    }
    let table = query_sweep(&grid, args.reps, &template, args.jobs)?;
    fs::create_dir_all(&args.out).map_err(io_err(&args.out))?;
    write_atomic(&args.out.join("sweep.json"), &to_json(&table))?;
    let rows: Vec<SweepCsvRow> = table.rows.iter().map(SweepCsvRow::from).collect();
    write_atomic(&args.out.join("sweep.csv"), &csv_bytes(&rows)?)?;
    for fit in &table.fits {
        println!(
            "slope {} vs {} (n={}, fixed={}): {:.3} over {} points",
            fit.metric, fit.axis, fit.n, fit.fixed, fit.slope, fit.points
        );
    }
    Ok(())
}

/// Flat CSV form of a sweep row.
#[derive(Serialize)]
struct SweepCsvRow {
    schema: u32,
    n: usize,
    s: usize,
    epsilon: f64,
    rep: usize,
    instance_seed: u64,
    run_seed: u64,
    sample_size: usize,
    stages: usize,
    quantum_queries: u64,
    classical_queries: u64,
    final_error: Option<f64>,
    termination: String,
    error: String,
}

impl From<&qhs_core::qhs::SweepRow> for SweepCsvRow {
    fn from(r: &qhs_core::qhs::SweepRow) -> Self {
        SweepCsvRow {
            schema: SCHEMA_VERSION,
            n: r.n,
            s: r.s,
            epsilon: r.epsilon,
            rep: r.rep,
            instance_seed: r.instance_seed,
            run_seed: r.run_seed,
            sample_size: r.sample_size,
            stages: r.stages,
            quantum_queries: r.quantum_queries,
            classical_queries: r.classical_queries,
            final_error: r.final_error,
            termination: match r.termination {
                Some(Termination::Converged) => "converged".into(),
                Some(Termination::WeakLearnerFailure) => "weak_learner_failure".into(),
                Some(Termination::StageBudgetExceeded) => "stage_budget_exceeded".into(),
                None => "error".into(),
            },
            error: r.error.clone().unwrap_or_default(),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Learn(a) => cmd_learn(a),
        Command::Weak(a) => cmd_weak(a),
        Command::Spectrum(a) => cmd_spectrum(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Sweep(a) => cmd_sweep(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qhs-lab: {e}");
            ExitCode::from(e.code())
        }
    }
}
