//! The end-to-end learner: one shared labeled sample, SmoothBoost by
//! filtering, and a weak learner per stage chosen by [`Mode`].

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::boolean_fn::{check_cap, gen_random_dnf, BoolFnError, DnfFormula};
use crate::boosting::{
    exact_filter_learner, margin_theta, run_filter_loop, BoostError, BoostOutcome, BoostState,
    CombinedHypothesis, FilterConfig, FilterStage, StageRecord, Termination,
    DEFAULT_STOP_FRACTION,
};
use crate::quantum_sim::QueryCounter;
use crate::seeding::{derive_path, rng_from, STREAM_INSTANCE, STREAM_RUN, STREAM_SAMPLE, STREAM_STAGE};
use crate::weak_parity::{
    digit_depth, sampled_weak_learner, weak_learn_nonboolean, MembershipOracle, NonBooleanParams,
    Selection, SharedSample, WeakError, WeakHypothesis,
};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    QuantumSim,
    ClassicalExact,
    ClassicalSampled,
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.replace('-', "_").as_str() {
            "quantum_sim" => Ok(Mode::QuantumSim),
            "classical_exact" => Ok(Mode::ClassicalExact),
            "classical_sampled" => Ok(Mode::ClassicalSampled),
            _ => Err(format!("unknown mode {s:?}")),
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::QuantumSim => "quantum-sim",
            Mode::ClassicalExact => "classical-exact",
            Mode::ClassicalSampled => "classical-sampled",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QhsConfig {
    pub n: usize,
    pub s: usize,
    pub epsilon: f64,
    pub delta: f64,
    pub mode: Mode,
    /// Stage budget constant.
    pub c1: f64,
    /// Weak-learner threshold constant.
    pub c2: f64,
    /// Shared sample constant.
    pub c_r: f64,
    /// Amplification budget constant of each parity search.
    pub amp_const: f64,
    /// Outcome selection inside each parity search.
    pub selection: Selection,
    pub seed: u64,
}

impl QhsConfig {
    pub fn new(n: usize, s: usize, epsilon: f64, delta: f64, mode: Mode, seed: u64) -> Self {
        QhsConfig {
            n,
            s,
            epsilon,
            delta,
            mode,
            c1: 4.0,
            c2: 1.0,
            c_r: 8.0,
            amp_const: 1.0,
            selection: Selection::EveryRepetition,
            seed,
        }
    }

    /// Weak advantage used by the booster, `1/(8s+4)`.
    pub fn gamma(&self) -> f64 {
        1.0 / (8.0 * self.s as f64 + 4.0)
    }

    /// Weak-learner threshold `c2 eps / (3(2s+1))`.
    pub fn big_gamma(&self) -> f64 {
        self.c2 * self.epsilon / (3.0 * (2.0 * self.s as f64 + 1.0))
    }

    pub fn k_max(&self) -> usize {
        let inv = 8.0 * self.s as f64 + 4.0;
        ceil_loose(self.c1 * inv * inv / self.epsilon)
    }

    pub fn sample_size(&self) -> usize {
        let s = self.s.max(1) as f64;
        ceil_loose(self.c_r * s * s / (self.epsilon * self.epsilon))
    }

    /// Confidence handed to each stage's weak learner.
    pub fn stage_delta(&self) -> f64 {
        self.delta / (2.0 * self.k_max() as f64)
    }

    pub fn nonboolean_params(&self) -> NonBooleanParams {
        NonBooleanParams {
            big_gamma: self.big_gamma(),
            delta: self.stage_delta(),
            amp_const: self.amp_const,
            selection: self.selection,
        }
    }

    pub fn derived(&self) -> Derived {
        let p = self.nonboolean_params();
        Derived {
            gamma: self.gamma(),
            big_gamma: self.big_gamma(),
            theta_margin: margin_theta(self.gamma()),
            k_max: self.k_max(),
            sample_size: self.sample_size(),
            stage_delta: self.stage_delta(),
            digit_depth: digit_depth(self.big_gamma()),
            verify_threshold: p.verify_threshold(),
        }
    }

    pub fn validate(&self) -> Result<(), QhsError> {
        let bad = |msg: String| Err(QhsError::InvalidConfig(msg));
        if self.n == 0 {
            return bad("n must be positive".into());
        }
        check_cap(self.n)?;
        if !(self.epsilon > 0.0 && self.epsilon < 0.5) {
            return bad(format!("epsilon = {} not in (0, 1/2)", self.epsilon));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return bad(format!("delta = {} not in (0, 1)", self.delta));
        }
        for (name, v) in [
            ("c1", self.c1),
            ("c2", self.c2),
            ("c_r", self.c_r),
            ("amp_const", self.amp_const),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} = {v} must be positive"));
            }
        }
        if self.big_gamma() >= 1.0 {
            return bad(format!("c2 = {} gives a threshold of at least 1", self.c2));
        }
        Ok(())
    }
}

/// Ceiling that ignores representation error in decimal inputs such as 0.1.
fn ceil_loose(x: f64) -> usize {
    (x * (1.0 - 1e-12)).ceil() as usize
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Derived {
    pub gamma: f64,
    pub big_gamma: f64,
    pub theta_margin: f64,
    pub k_max: usize,
    pub sample_size: usize,
    pub stage_delta: f64,
    pub digit_depth: usize,
    pub verify_threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema: u32,
    pub config: QhsConfig,
    pub instance_terms: usize,
    pub derived: Derived,
    pub stages: Vec<StageRecord>,
    pub totals: QueryCounter,
    pub stage_count: usize,
    pub final_e: f64,
    pub final_exact_e: f64,
    /// `Pr_x[f(x) != h(x)]` over the cube; absent when no hypothesis exists.
    pub final_error: Option<f64>,
    pub termination: Termination,
    pub failure: Option<String>,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[derive(Debug, Error)]
pub enum QhsError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    BoolFn(#[from] BoolFnError),
    #[error(transparent)]
    Boost(#[from] BoostError),
    #[error("weak learner failed at stage {}", .0.stage_count + 1)]
    WeakLearnerFailure(Box<RunReport>),
    #[error("stage budget of {} exhausted", .0.derived.k_max)]
    StageBudgetExceeded(Box<RunReport>),
}

/// Sample mean of `M_t` over `sample`, using the sample's own labels.
pub fn estimate_et(sample: &SharedSample, state: &BoostState) -> f64 {
    sample
        .iter_pm1()
        .map(|(x, fx)| state.weight(fx as i8, x))
        .sum::<f64>()
        / sample.len() as f64
}

/// Runs the learner and always returns a report, whatever the termination.
/// Errors are limited to invalid inputs.
pub fn qhs_run(f: &DnfFormula, cfg: &QhsConfig) -> Result<RunReport, QhsError> {
    cfg.validate()?;
    if f.n() != cfg.n {
        return Err(QhsError::InvalidConfig(format!(
            "instance has n = {}, config has n = {}",
            f.n(),
            cfg.n
        )));
    }
    if f.size() > cfg.s {
        return Err(QhsError::InvalidConfig(format!(
            "instance has {} terms, more than s = {}",
            f.size(),
            cfg.s
        )));
    }
    let oracle = MembershipOracle::from_dnf(f)?;
    let table = oracle.table();
    let n = cfg.n;

    let mut setup = QueryCounter::default();
    let mut rng = rng_from(derive_path(cfg.seed, &[STREAM_SAMPLE]));
    let sample = SharedSample::draw(&oracle, cfg.sample_size(), &mut rng, &mut setup);
    if cfg.mode == Mode::ClassicalExact {
        setup.classical += 1 << n;
    }

    let params = cfg.nonboolean_params();
    let filter = FilterConfig {
        epsilon: cfg.epsilon,
        gamma: cfg.gamma(),
        stop_fraction: DEFAULT_STOP_FRACTION,
        max_stages: cfg.k_max(),
    };
    let wl = |stage: &FilterStage<'_>, counter: &mut QueryCounter| -> Result<WeakHypothesis, WeakError> {
        if stage.t == 1 {
            counter.merge(setup);
        }
        let m = stage.m_cube;
        match cfg.mode {
            Mode::ClassicalExact => exact_filter_learner(stage, counter),
            Mode::ClassicalSampled => sampled_weak_learner(stage.sample, |x| m[x as usize]),
            Mode::QuantumSim => weak_learn_nonboolean(
                n,
                &|x| table[x as usize],
                &|x| m[x as usize],
                &params,
                stage.sample,
                derive_path(cfg.seed, &[STREAM_STAGE, stage.t as u64]),
                counter,
            )
            .map(|out| out.hypothesis),
        }
    };
    let mut counter = QueryCounter::default();
    let outcome = run_filter_loop(table, &sample, &filter, wl, &mut counter)?;
    if outcome.stages.is_empty() {
        // Only possible if the loop ended before stage 1; keep totals honest.
        counter.merge(setup);
    }
    Ok(build_report(cfg, f, &outcome, counter, table))
}

fn build_report(
    cfg: &QhsConfig,
    f: &DnfFormula,
    outcome: &BoostOutcome,
    totals: QueryCounter,
    table: &[bool],
) -> RunReport {
    let final_error = outcome.combined().ok().map(|h| h.exact_error(table));
    RunReport {
        schema: SCHEMA_VERSION,
        config: cfg.clone(),
        instance_terms: f.size(),
        derived: cfg.derived(),
        stages: outcome.stages.clone(),
        totals,
        stage_count: outcome.stage_count(),
        final_e: outcome.final_e,
        final_exact_e: outcome.final_exact_e,
        final_error,
        termination: outcome.termination,
        failure: outcome.failure.clone(),
    }
}

/// [`qhs_run`], with abnormal terminations turned into errors.
pub fn qhs_learn(
    f: &DnfFormula,
    cfg: &QhsConfig,
) -> Result<(CombinedHypothesis, RunReport), QhsError> {
    let report = qhs_run(f, cfg)?;
    match report.termination {
        Termination::Converged => {
            let h = crate::boosting::combine(
                report
                    .stages
                    .iter()
                    .map(|r| WeakHypothesis {
                        a: r.a,
                        sign: r.sign,
                        est_advantage: r.advantage,
                    })
                    .collect(),
            )?;
            Ok((h, report))
        }
        Termination::WeakLearnerFailure => Err(QhsError::WeakLearnerFailure(Box::new(report))),
        Termination::StageBudgetExceeded => Err(QhsError::StageBudgetExceeded(Box::new(report))),
    }
}

/// Term length used for sweep and acceptance instances.
pub fn default_term_len(n: usize) -> usize {
    3.min(n)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub n: usize,
    pub s: usize,
    pub epsilon: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n: usize,
    pub s: usize,
    pub epsilon: f64,
    pub rep: usize,
    pub instance_seed: u64,
    pub run_seed: u64,
    pub sample_size: usize,
    pub stages: usize,
    pub quantum_queries: u64,
    pub classical_queries: u64,
    pub final_error: Option<f64>,
    pub termination: Option<Termination>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    /// `"s"` or `"inv_epsilon"`.
    pub axis: String,
    /// `"quantum"` or `"classical"`.
    pub metric: String,
    pub n: usize,
    /// The parameter held fixed: epsilon for the `s` axis, s otherwise.
    pub fixed: f64,
    pub points: usize,
    pub slope: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub schema: u32,
    pub mode: Mode,
    pub delta: f64,
    pub seed: u64,
    pub reps: usize,
    pub rows: Vec<SweepRow>,
    pub fits: Vec<SlopeFit>,
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(points: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Runs every cell `reps` times on fresh random instances, in parallel over
/// at most `jobs` threads, and fits query-count slopes. Failed cells are
/// recorded in their row.
pub fn query_sweep(
    grid: &[SweepCell],
    reps: usize,
    template: &QhsConfig,
    jobs: usize,
) -> Result<SweepTable, QhsError> {
    let work: Vec<(usize, usize, SweepCell)> = grid
        .iter()
        .enumerate()
        .flat_map(|(ci, &cell)| (0..reps).map(move |r| (ci, r, cell)))
        .collect();
    let root = template.seed;
    let run = |&(ci, rep, cell): &(usize, usize, SweepCell)| -> SweepRow {
        let instance_seed = derive_path(root, &[STREAM_INSTANCE, ci as u64, rep as u64]);
        let run_seed = derive_path(root, &[STREAM_RUN, ci as u64, rep as u64]);
        let cfg = QhsConfig {
            n: cell.n,
            s: cell.s,
            epsilon: cell.epsilon,
            seed: run_seed,
            ..template.clone()
        };
        let mut row = SweepRow {
            n: cell.n,
            s: cell.s,
            epsilon: cell.epsilon,
            rep,
            instance_seed,
            run_seed,
            sample_size: cfg.sample_size(),
            stages: 0,
            quantum_queries: 0,
            classical_queries: 0,
            final_error: None,
            termination: None,
            error: None,
        };
        let result = gen_random_dnf(cell.n, cell.s, default_term_len(cell.n), instance_seed)
            .map_err(QhsError::from)
            .and_then(|f| qhs_run(&f, &cfg));
        match result {
            Ok(report) => {
                row.stages = report.stage_count;
                row.quantum_queries = report.totals.quantum;
                row.classical_queries = report.totals.classical;
                row.final_error = report.final_error;
                row.termination = Some(report.termination);
                row.failure_note(report.failure);
            }
            Err(e) => row.error = Some(e.to_string()),
        }
        row
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| QhsError::InvalidConfig(e.to_string()))?;
    let rows: Vec<SweepRow> = pool.install(|| work.par_iter().map(run).collect());
    let fits = fit_slopes(&rows);
    Ok(SweepTable {
        schema: SCHEMA_VERSION,
        mode: template.mode,
        delta: template.delta,
        seed: root,
        reps,
        rows,
        fits,
    })
}

impl SweepRow {
    fn failure_note(&mut self, failure: Option<String>) {
        if failure.is_some() {
            self.error = failure;
        }
    }
}

fn mean_by<K: PartialEq + Copy>(rows: &[SweepRow], key: impl Fn(&SweepRow) -> K, value: impl Fn(&SweepRow) -> f64) -> Vec<(K, f64)> {
    let mut out: Vec<(K, f64, usize)> = Vec::new();
    for r in rows.iter().filter(|r| r.termination.is_some()) {
        let k = key(r);
        match out.iter_mut().find(|(kk, _, _)| *kk == k) {
            Some(e) => {
                e.1 += value(r);
                e.2 += 1;
            }
            None => out.push((k, value(r), 1)),
        }
    }
    out.into_iter().map(|(k, sum, c)| (k, sum / c as f64)).collect()
}

fn fit_slopes(rows: &[SweepRow]) -> Vec<SlopeFit> {
    let mut fits = Vec::new();
    let metrics: [(&str, fn(&SweepRow) -> f64); 2] = [
        ("quantum", |r| r.quantum_queries as f64),
        ("classical", |r| r.classical_queries as f64),
    ];
    for (metric, value) in metrics {
        // Slope against s at fixed (n, epsilon).
        let means = mean_by(rows, |r| (r.n, r.s, r.epsilon.to_bits()), value);
        let mut groups: Vec<(usize, u64)> = Vec::new();
        for &((n, _, e), _) in &means {
            if !groups.contains(&(n, e)) {
                groups.push((n, e));
            }
        }
        for (n, e) in groups {
            let pts: Vec<(f64, f64)> = means
                .iter()
                .filter(|((nn, _, ee), _)| *nn == n && *ee == e)
                .map(|((_, s, _), y)| (*s as f64, *y))
                .collect();
            if let Some(slope) = log_log_slope(&pts) {
                fits.push(SlopeFit {
                    axis: "s".into(),
                    metric: metric.into(),
                    n,
                    fixed: f64::from_bits(e),
                    points: pts.len(),
                    slope,
                });
            }
        }
        // Slope against 1/epsilon at fixed (n, s).
        let mut groups: Vec<(usize, usize)> = Vec::new();
        for &((n, s, _), _) in &means {
            if !groups.contains(&(n, s)) {
                groups.push((n, s));
            }
        }
        for (n, s) in groups {
            let pts: Vec<(f64, f64)> = means
                .iter()
                .filter(|((nn, ss, _), _)| *nn == n && *ss == s)
                .map(|((_, _, e), y)| (1.0 / f64::from_bits(*e), *y))
                .collect();
            if let Some(slope) = log_log_slope(&pts) {
                fits.push(SlopeFit {
                    axis: "inv_epsilon".into(),
                    metric: metric.into(),
                    n,
                    fixed: s as f64,
                    points: pts.len(),
                    slope,
                });
            }
        }
    }
    fits
}
