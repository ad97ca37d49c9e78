//! Weak parity learners: the amplified quantum Goldreich–Levin search
//! (`qwdnf`), its reduction from real-valued targets through signed binary
//! digits, and exact/sampled classical baselines.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::boolean_fn::{
    argmax_abs, chi, coefficient_order, fwht_in_place, to_pm1, wht, BoolFnError, DnfFormula,
    ParityIndex, RealTable,
};
use crate::quantum_sim::{
    amplification_step, gl_operator_c, sample_outcome, QueryCounter, SimError, StateVector,
};
use crate::seeding::{derive_seed, rng_from};

#[derive(Debug, Error)]
pub enum WeakError {
    #[error("no candidate parity verified after {attempts} attempts")]
    NoHeavyCoefficient { attempts: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("empty sample")]
    EmptySample,
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    BoolFn(#[from] BoolFnError),
}

/// Classical membership oracle over a dense truth table.
#[derive(Debug, Clone)]
pub struct MembershipOracle {
    n: usize,
    table: Vec<bool>,
}

impl MembershipOracle {
    pub fn new(table: Vec<bool>) -> Result<Self, BoolFnError> {
        if table.is_empty() || !table.len().is_power_of_two() {
            return Err(BoolFnError::NotPowerOfTwo(table.len()));
        }
        Ok(MembershipOracle {
            n: table.len().trailing_zeros() as usize,
            table,
        })
    }

    pub fn from_dnf(f: &DnfFormula) -> Result<Self, BoolFnError> {
        Self::new(f.truth_table()?)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// One counted classical query.
    pub fn query(&self, x: u64, counter: &mut QueryCounter) -> bool {
        counter.classical += 1;
        self.table[x as usize]
    }

    /// Uncounted access used by the simulator to build `U_MQ` and by exact
    /// diagnostics.
    pub fn table(&self) -> &[bool] {
        &self.table
    }

    pub fn pm1(&self, x: u64) -> f64 {
        f64::from(to_pm1(self.table[x as usize]))
    }
}

/// Uniform sample of labeled points, drawn once per run and shared by every
/// estimate made during the run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SharedSample {
    n: usize,
    points: Vec<u64>,
    labels: Vec<bool>,
}

impl SharedSample {
    /// Draws `size` uniform points with replacement and labels them through
    /// the oracle (one classical query each).
    pub fn draw<R: Rng + ?Sized>(
        oracle: &MembershipOracle,
        size: usize,
        rng: &mut R,
        counter: &mut QueryCounter,
    ) -> Self {
        let n = oracle.n();
        let points: Vec<u64> = (0..size).map(|_| rng.gen_range(0..1u64 << n)).collect();
        let labels = points.iter().map(|&x| oracle.query(x, counter)).collect();
        SharedSample { n, points, labels }
    }

    /// Every point of the cube once, in index order. Not charged.
    pub fn full_cube(oracle: &MembershipOracle) -> Self {
        SharedSample {
            n: oracle.n(),
            points: (0..1u64 << oracle.n()).collect(),
            labels: oracle.table().to_vec(),
        }
    }

    pub fn from_parts(n: usize, points: Vec<u64>, labels: Vec<bool>) -> Self {
        assert_eq!(points.len(), labels.len());
        assert!(points.iter().all(|&x| x < 1u64 << n));
        SharedSample { n, points, labels }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[u64] {
        &self.points
    }

    pub fn labels(&self) -> &[bool] {
        &self.labels
    }

    /// `(x, f(x) as ±1)` pairs.
    pub fn iter_pm1(&self) -> impl Iterator<Item = (u64, f64)> + '_ {
        self.points
            .iter()
            .zip(&self.labels)
            .map(|(&x, &l)| (x, f64::from(to_pm1(l))))
    }

    /// `m^-1 sum_{x in R} g(x, f(x))`.
    pub fn mean(&self, g: impl Fn(u64, f64) -> f64) -> f64 {
        let total: f64 = self.iter_pm1().map(|(x, fx)| g(x, fx)).sum();
        total / self.len() as f64
    }

    /// Sampled correlations `m^-1 sum_{x in R} g(x) chi_a(x)` for every `a`,
    /// from one transform of the per-point mass vector.
    pub fn correlations(&self, g: impl Fn(u64, f64) -> f64) -> Result<Vec<f64>, WeakError> {
        if self.is_empty() {
            return Err(WeakError::EmptySample);
        }
        let mut mass = vec![0.0f64; 1 << self.n];
        for (x, fx) in self.iter_pm1() {
            mass[x as usize] += g(x, fx);
        }
        fwht_in_place(&mut mass)?;
        let scale = 1.0 / self.len() as f64;
        mass.iter_mut().for_each(|v| *v *= scale);
        Ok(mass)
    }
}

/// Sampled stand-in for the equivalence oracle: marks every `a` whose sampled
/// correlation magnitude reaches `theta`.
#[derive(Debug, Clone)]
pub struct HeavyPredicate {
    estimates: Vec<f64>,
    theta: f64,
    marked: Vec<bool>,
}

impl HeavyPredicate {
    pub fn from_estimates(estimates: Vec<f64>, theta: f64) -> Self {
        let marked = estimates.iter().map(|e| e.abs() >= theta).collect();
        HeavyPredicate {
            estimates,
            theta,
            marked,
        }
    }

    #[inline]
    pub fn holds(&self, a: ParityIndex) -> bool {
        self.marked[a.0 as usize]
    }

    pub fn estimate(&self, a: ParityIndex) -> f64 {
        self.estimates[a.0 as usize]
    }

    pub fn estimates(&self) -> &[f64] {
        &self.estimates
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn marked_count(&self) -> usize {
        self.marked.iter().filter(|&&m| m).count()
    }
}

pub fn sampled_heavy_predicate(
    sample: &SharedSample,
    g: impl Fn(u64, f64) -> f64,
    theta_eq: f64,
) -> Result<HeavyPredicate, WeakError> {
    if !(theta_eq > 0.0) {
        return Err(WeakError::InvalidParameter(format!("theta_eq = {theta_eq}")));
    }
    let estimates = sample.correlations(g)?;
    Ok(HeavyPredicate::from_estimates(estimates, theta_eq))
}

/// Weak hypothesis `h(x) = sign * chi_A(x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeakHypothesis {
    pub a: ParityIndex,
    pub sign: i8,
    /// Estimated `|E[g chi_A]|`.
    pub est_advantage: f64,
}

impl WeakHypothesis {
    pub fn new(a: ParityIndex, correlation: f64) -> Self {
        WeakHypothesis {
            a,
            sign: sign_of(correlation),
            est_advantage: correlation.abs().min(1.0),
        }
    }

    #[inline]
    pub fn eval(&self, x: u64) -> i8 {
        self.sign * chi(self.a, x)
    }
}

/// Sign with `sign(0) = +1`.
#[inline]
pub fn sign_of(v: f64) -> i8 {
    if v < 0.0 {
        -1
    } else {
        1
    }
}

/// Which verified outcome a parity search returns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Selection {
    /// Stop at the first measured outcome that verifies.
    #[default]
    FirstVerified,
    /// Keep the first verified outcome of every repetition. Never spends
    /// more than the full repetition budget.
    EveryRepetition,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QwdnfParams {
    /// Target advantage; parities with `|E[g chi_A]| >= 2 gamma` are the
    /// ones the search is guaranteed to find.
    pub gamma: f64,
    pub delta: f64,
    /// Amplification budget is `ceil(amp_const / gamma)` iterations.
    pub amp_const: f64,
    #[serde(default)]
    pub selection: Selection,
}

impl QwdnfParams {
    pub fn new(gamma: f64, delta: f64) -> Self {
        QwdnfParams {
            gamma,
            delta,
            amp_const: 1.0,
            selection: Selection::FirstVerified,
        }
    }

    fn validate(&self) -> Result<(), WeakError> {
        if !(self.gamma > 0.0 && self.gamma < 0.5) {
            return Err(WeakError::InvalidParameter(format!(
                "gamma = {} not in (0, 1/2)",
                self.gamma
            )));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(WeakError::InvalidParameter(format!(
                "delta = {} not in (0, 1)",
                self.delta
            )));
        }
        if !(self.amp_const > 0.0) {
            return Err(WeakError::InvalidParameter(format!(
                "amp_const = {}",
                self.amp_const
            )));
        }
        Ok(())
    }

    /// Predicate threshold.
    pub fn theta_eq(&self) -> f64 {
        self.gamma
    }

    pub fn max_iterations(&self) -> usize {
        (self.amp_const / self.gamma).ceil() as usize
    }

    /// Independent repetitions of the attempt loop.
    pub fn repetitions(&self) -> usize {
        ((1.0 / self.delta).ln().ceil() as usize).max(1)
    }

    /// `0, 1, 2, 4, ...` up to the iteration budget.
    pub fn schedule(&self) -> Vec<usize> {
        let k_max = self.max_iterations();
        let mut out = vec![0];
        let mut k = 1;
        while k <= k_max {
            out.push(k);
            k *= 2;
        }
        out
    }

    /// Quantum queries spent by one full repetition that never succeeds.
    pub fn queries_per_repetition(&self) -> u64 {
        self.schedule().iter().map(|&k| 2 * (2 * k as u64 + 1)).sum()
    }
}

/// Amplified Goldreich–Levin search for a parity that `oracle` (a bit-valued
/// function reached only through `U_MQ`) correlates with.
///
/// `estimates` are the sampled correlations of `to_pm1 ∘ oracle` over the
/// shared sample; they define the equivalence predicate and verify every
/// measured candidate. Each attempt prepares `(−C U_0 C† U_EQ)^k C|0>` for
/// the next `k` of the doubling schedule, measures register I and accepts the
/// outcome if it passes the sampled predicate.
pub fn qwdnf<R: Rng + ?Sized>(
    n: usize,
    params: &QwdnfParams,
    oracle: &(dyn Fn(u64) -> bool + Sync),
    estimates: &[f64],
    rng: &mut R,
    counter: &mut QueryCounter,
) -> Result<WeakHypothesis, WeakError> {
    let found = qwdnf_candidates(n, params, oracle, estimates, rng, counter)?;
    let best = found
        .iter()
        .map(|h| (h.a.0, estimates[h.a.0 as usize]))
        .min_by(|&a, &b| coefficient_order(a, b))
        .expect("candidates are nonempty");
    Ok(WeakHypothesis::new(ParityIndex(best.0), best.1))
}

/// Verified outcomes of the search in the order they were measured: one
/// under [`Selection::FirstVerified`], up to one per repetition otherwise.
/// Fails when nothing verifies.
pub fn qwdnf_candidates<R: Rng + ?Sized>(
    n: usize,
    params: &QwdnfParams,
    oracle: &(dyn Fn(u64) -> bool + Sync),
    estimates: &[f64],
    rng: &mut R,
    counter: &mut QueryCounter,
) -> Result<Vec<WeakHypothesis>, WeakError> {
    params.validate()?;
    if estimates.len() != 1 << n {
        return Err(WeakError::InvalidParameter(format!(
            "{} estimates for n = {n}",
            estimates.len()
        )));
    }
    let predicate = HeavyPredicate::from_estimates(estimates.to_vec(), params.theta_eq());
    let schedule = params.schedule();
    let reps = params.repetitions();
    let attempts = reps * schedule.len();

    if predicate.marked_count() == 0 {
        // No outcome can verify; the run would spend its whole budget.
        counter.quantum += reps as u64 * params.queries_per_repetition();
        return Err(WeakError::NoHeavyCoefficient { attempts });
    }

    // The state prepared for a given k is the same in every repetition, so
    // each scheduled distribution is simulated once and reused. Queries are
    // charged per attempt as a device would spend them.
    let mut scratch = QueryCounter::default();
    let mut distributions: Vec<Option<Vec<f64>>> = vec![None; schedule.len()];
    let mut running: Option<(usize, StateVector)> = None;
    let holds = |a: ParityIndex| predicate.holds(a);

    let mut found = Vec::new();
    for _ in 0..reps {
        for (slot, &k) in schedule.iter().enumerate() {
            counter.quantum += 2 * (2 * k as u64 + 1);
            if distributions[slot].is_none() {
                let (mut at, mut state) = match running.take() {
                    Some(r) => r,
                    None => (0, gl_operator_c(n, oracle, &mut scratch)?),
                };
                while at < k {
                    amplification_step(&mut state, oracle, &holds, &mut scratch);
                    at += 1;
                }
                state.check_norm()?;
                distributions[slot] = Some(state.distribution_i());
                running = Some((at, state));
            }
            let dist = distributions[slot].as_ref().expect("filled above");
            let a = sample_outcome(dist, rng);
            if predicate.holds(a) {
                found.push(WeakHypothesis::new(a, predicate.estimate(a)));
                if params.selection == Selection::FirstVerified {
                    return Ok(found);
                }
                break;
            }
        }
    }
    if found.is_empty() {
        Err(WeakError::NoHeavyCoefficient { attempts })
    } else {
        Ok(found)
    }
}

/// Exact signed-digit expansion of `floor(2^d M(x))` for a set of points.
///
/// For each point, `v = floor(2^d M)` equals
/// `sum_j alpha_j 2^{d-j} + k` with `alpha_j` in {−1,+1} and `k` in {−1,0,1}.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignedDigits {
    d: usize,
    /// `alpha[j][i]` is digit `j+1` of point `i`.
    alpha: Vec<Vec<i8>>,
    k: Vec<i8>,
    v: Vec<u64>,
}

impl SignedDigits {
    pub fn depth(&self) -> usize {
        self.d
    }

    pub fn digit(&self, j: usize) -> &[i8] {
        &self.alpha[j - 1]
    }

    pub fn remainder(&self) -> &[i8] {
        &self.k
    }

    pub fn truncated(&self) -> &[u64] {
        &self.v
    }

    /// `sum_j alpha_j 2^{d-j} + k` in integer arithmetic, for point `i`.
    pub fn reconstruct(&self, i: usize) -> i64 {
        let d = self.d;
        let mut acc: i64 = self.k[i].into();
        for (j, digits) in self.alpha.iter().enumerate() {
            acc += i64::from(digits[i]) << (d - 1 - j);
        }
        acc
    }
}

/// Signed digits of the integer `v` in `0..=2^d`: `w` is the odd integer
/// nearest `v` within `±(2^d − 1)` (rounding down on ties), `k = v − w`, and
/// the digits of `w` are taken greedily.
pub fn signed_digits_of(v: u64, d: usize) -> (Vec<i8>, i8) {
    assert!((1..62).contains(&d) && v <= 1 << d);
    let v = v as i64;
    let w = if v % 2 == 1 { v } else { v - 1 };
    let k = (v - w) as i8;
    let mut rest = w;
    let alpha = (1..=d)
        .map(|j| {
            let digit: i8 = if rest >= 0 { 1 } else { -1 };
            rest -= i64::from(digit) << (d - j);
            digit
        })
        .collect();
    debug_assert_eq!(rest, 0);
    (alpha, k)
}

pub fn signed_digit_decompose(m_values: &[f64], d: usize) -> Result<SignedDigits, WeakError> {
    if d == 0 || d >= 62 {
        return Err(WeakError::InvalidParameter(format!("digit depth d = {d}")));
    }
    let mut alpha = vec![Vec::with_capacity(m_values.len()); d];
    let mut k = Vec::with_capacity(m_values.len());
    let mut v = Vec::with_capacity(m_values.len());
    let scale = (1u64 << d) as f64;
    for &m in m_values {
        if !(m > 0.0 && m <= 1.0) {
            return Err(WeakError::InvalidParameter(format!(
                "weight {m} outside (0, 1]"
            )));
        }
        let vi = (scale * m).floor() as u64;
        let (digits, ki) = signed_digits_of(vi, d);
        for (col, digit) in alpha.iter_mut().zip(digits) {
            col.push(digit);
        }
        k.push(ki);
        v.push(vi);
    }
    Ok(SignedDigits { d, alpha, k, v })
}

/// `ceil(log2(3 / big_gamma))`, at least 1.
pub fn digit_depth(big_gamma: f64) -> usize {
    ((3.0 / big_gamma).log2().ceil() as usize).max(1)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NonBooleanParams {
    /// Heaviness `Γ` sought in `M f`.
    pub big_gamma: f64,
    pub delta: f64,
    pub amp_const: f64,
    #[serde(default)]
    pub selection: Selection,
}

impl NonBooleanParams {
    pub fn new(big_gamma: f64, delta: f64) -> Self {
        NonBooleanParams {
            big_gamma,
            delta,
            amp_const: 1.0,
            selection: Selection::FirstVerified,
        }
    }

    pub fn depth(&self) -> usize {
        digit_depth(self.big_gamma)
    }

    /// Per-digit search target: heaviness `Γ/3`, i.e. advantage `Γ/6`.
    pub fn digit_params(&self) -> QwdnfParams {
        QwdnfParams {
            gamma: self.big_gamma / 6.0,
            delta: self.delta,
            amp_const: self.amp_const,
            selection: self.selection,
        }
    }

    /// Sampling slack budgeted for every estimate.
    pub fn slack(&self) -> f64 {
        self.big_gamma / 6.0
    }

    /// Candidates must reach `Γ/3 − slack` in sampled `|E[M f chi_A]|`.
    pub fn verify_threshold(&self) -> f64 {
        self.big_gamma / 3.0 - self.slack()
    }
}

/// One verified outcome (or a failed search) of [`weak_learn_nonboolean`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DigitCandidate {
    /// 1-based digit index (first of any identical digit functions).
    pub digit: usize,
    pub a: Option<ParityIndex>,
    /// Sampled `E[M f chi_A]` of the candidate.
    pub correlation: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonBooleanOutcome {
    pub hypothesis: WeakHypothesis,
    pub candidates: Vec<DigitCandidate>,
}

/// Finds a parity correlating with `M f` by searching the Boolean functions
/// `alpha_j f` with [`qwdnf`] and verifying the candidates on the sample.
///
/// `f` is the target in bit form and `m` the weight function, `0 < m <= 1`.
/// Digit functions that coincide up to global sign are searched once. The
/// per-digit searches use seeds derived from `seed` and may run in parallel.
pub fn weak_learn_nonboolean(
    n: usize,
    f: &(dyn Fn(u64) -> bool + Sync),
    m: &(dyn Fn(u64) -> f64 + Sync),
    params: &NonBooleanParams,
    sample: &SharedSample,
    seed: u64,
    counter: &mut QueryCounter,
) -> Result<NonBooleanOutcome, WeakError> {
    if !(params.big_gamma > 0.0 && params.big_gamma < 1.0) {
        return Err(WeakError::InvalidParameter(format!(
            "Gamma = {} not in (0, 1)",
            params.big_gamma
        )));
    }
    if sample.is_empty() {
        return Err(WeakError::EmptySample);
    }
    let size = 1usize << n;
    let d = params.depth();
    let m_table: Vec<f64> = (0..size as u64).map(m).collect();
    let digits = signed_digit_decompose(&m_table, d)?;
    let f_table: Vec<bool> = (0..size as u64).map(f).collect();

    // Bit form of alpha_j * f: true where the product is −1.
    let mut unique: Vec<(usize, Vec<bool>)> = Vec::new();
    for j in 1..=d {
        let table: Vec<bool> = digits
            .digit(j)
            .iter()
            .zip(&f_table)
            .map(|(&alpha, &fx)| (alpha < 0) != fx)
            .collect();
        let duplicate = unique.iter().any(|(_, other)| {
            other == &table || other.iter().zip(&table).all(|(a, b)| a != b)
        });
        if !duplicate {
            unique.push((j, table));
        }
    }

    let digit_params = params.digit_params();
    let searches: Vec<(usize, Result<Vec<WeakHypothesis>, WeakError>, QueryCounter)> = unique
        .par_iter()
        .map(|(j, table)| {
            let mut local = QueryCounter::default();
            let estimates = match sample.correlations(|x, _| f64::from(to_pm1(table[x as usize]))) {
                Ok(e) => e,
                Err(e) => return (*j, Err(e), local),
            };
            let mut rng = rng_from(derive_seed(seed, *j as u64));
            let oracle = |x: u64| table[x as usize];
            let result =
                qwdnf_candidates(n, &digit_params, &oracle, &estimates, &mut rng, &mut local);
            (*j, result, local)
        })
        .collect();

    let verify = sample.correlations(|x, fx| m_table[x as usize] * fx)?;
    let mut candidates = Vec::with_capacity(searches.len());
    let mut best: Option<(u64, f64)> = None;
    for (j, result, local) in searches {
        counter.merge(local);
        match result {
            Ok(found) => {
                for h in found {
                    let corr = verify[h.a.0 as usize];
                    candidates.push(DigitCandidate {
                        digit: j,
                        a: Some(h.a),
                        correlation: Some(corr),
                    });
                    if corr.abs() >= params.verify_threshold()
                        && best.is_none_or(|b| coefficient_order((h.a.0, corr), b).is_lt())
                    {
                        best = Some((h.a.0, corr));
                    }
                }
            }
            Err(WeakError::NoHeavyCoefficient { .. }) => candidates.push(DigitCandidate {
                digit: j,
                a: None,
                correlation: None,
            }),
            Err(e) => return Err(e),
        }
    }
    match best {
        Some((a, corr)) => Ok(NonBooleanOutcome {
            hypothesis: WeakHypothesis::new(ParityIndex(a), corr),
            candidates,
        }),
        None => Err(WeakError::NoHeavyCoefficient {
            attempts: candidates.len(),
        }),
    }
}

/// Exact baseline: `argmax_A |E[M f chi_A]|` over the full cube.
pub fn classical_weak_learner(f: &RealTable, m: &RealTable, _big_gamma: f64) -> WeakHypothesis {
    let spectrum = wht(&m.mul(f));
    let (a, c) = argmax_abs(spectrum.values());
    WeakHypothesis::new(a, c)
}

/// Sampled baseline: `argmax_A |Ê_R[M f chi_A]|`.
pub fn sampled_weak_learner(
    sample: &SharedSample,
    m: impl Fn(u64) -> f64,
) -> Result<WeakHypothesis, WeakError> {
    let est = sample.correlations(|x, fx| m(x) * fx)?;
    let (a, c) = argmax_abs(&est);
    Ok(WeakHypothesis::new(a, c))
}
