//! SmoothBoost, by sampling and by filtering.
//!
//! Margins and weights are never stored per point across stages: the state
//! keeps the accepted hypotheses, aggregated into signed integer weights per
//! parity, and `N_t` is rebuilt from them on demand.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::boolean_fn::{argmax_abs, chi, fwht_in_place, to_pm1, ParityIndex};
use crate::quantum_sim::QueryCounter;
use crate::weak_parity::{MembershipOracle, SharedSample, WeakError, WeakHypothesis};
use rand::Rng;

/// Stage budget constant: `T <= ceil(C_T / (eps gamma^2))`.
pub const C_T: f64 = 2.0;
/// Default filter sample constant.
pub const DEFAULT_C_R: f64 = 8.0;
/// Default filter stopping point as a fraction of epsilon.
pub const DEFAULT_STOP_FRACTION: f64 = 2.0 / 3.0;

#[derive(Debug, Error)]
pub enum BoostError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("stage budget of {budget} exceeded")]
    StageBudgetExceeded { budget: usize },
    #[error("weak learner failed at stage {stage}: {source}")]
    WeakLearner {
        stage: usize,
        #[source]
        source: WeakError,
    },
    #[error("cannot combine an empty hypothesis list")]
    EmptyCombination,
}

/// `1` if `N < 0`, else `(1 − gamma)^{N/2}`, floored at the smallest
/// positive normal so that weights stay strictly positive.
pub fn weight_from_margin(margin: f64, gamma: f64) -> f64 {
    if margin < 0.0 {
        1.0
    } else {
        (1.0 - gamma).powf(margin / 2.0).max(f64::MIN_POSITIVE)
    }
}

/// `gamma / (2 + gamma)`.
pub fn margin_theta(gamma: f64) -> f64 {
    gamma / (2.0 + gamma)
}

pub fn stage_budget(epsilon: f64, gamma: f64) -> usize {
    (C_T / (epsilon * gamma * gamma)).ceil() as usize
}

fn check_params(epsilon: f64, gamma: f64) -> Result<(), BoostError> {
    if !(epsilon > 0.0 && epsilon < 0.5) {
        return Err(BoostError::InvalidParameter(format!(
            "epsilon = {epsilon} not in (0, 1/2)"
        )));
    }
    if !(gamma > 0.0 && gamma < 0.5) {
        return Err(BoostError::InvalidParameter(format!(
            "gamma = {gamma} not in (0, 1/2)"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoostState {
    gamma: f64,
    theta: f64,
    hypotheses: Vec<WeakHypothesis>,
    /// Sum of signs per parity, sorted by parity.
    weights: Vec<(u64, i64)>,
}

impl BoostState {
    pub fn new(gamma: f64) -> Result<Self, BoostError> {
        if !(gamma > 0.0 && gamma < 0.5) {
            return Err(BoostError::InvalidParameter(format!(
                "gamma = {gamma} not in (0, 1/2)"
            )));
        }
        Ok(BoostState {
            gamma,
            theta: margin_theta(gamma),
            hypotheses: Vec::new(),
            weights: Vec::new(),
        })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// Number of hypotheses accepted so far.
    pub fn stage(&self) -> usize {
        self.hypotheses.len()
    }

    pub fn hypotheses(&self) -> &[WeakHypothesis] {
        &self.hypotheses
    }

    pub fn push(&mut self, h: WeakHypothesis) {
        match self.weights.binary_search_by_key(&h.a.0, |&(a, _)| a) {
            Ok(i) => self.weights[i].1 += i64::from(h.sign),
            Err(i) => self.weights.insert(i, (h.a.0, i64::from(h.sign))),
        }
        self.hypotheses.push(h);
    }

    /// `sum_i h_i(x)`.
    pub fn vote(&self, x: u64) -> i64 {
        self.weights
            .iter()
            .map(|&(a, w)| w * i64::from(chi(ParityIndex(a), x)))
            .sum()
    }

    /// `N_t(x) = f(x) sum_i h_i(x) − t theta`, with `f(x)` as ±1.
    pub fn margin(&self, fx: i8, x: u64) -> f64 {
        (i64::from(fx) * self.vote(x)) as f64 - self.stage() as f64 * self.theta
    }

    pub fn weight(&self, fx: i8, x: u64) -> f64 {
        weight_from_margin(self.margin(fx, x), self.gamma)
    }

    /// `sum_i h_i(x)` for every `x`, from one transform of the parity weights.
    pub fn vote_table(&self, n: usize) -> Vec<f64> {
        let mut table = vec![0.0; 1 << n];
        for &(a, w) in &self.weights {
            table[a as usize] = w as f64;
        }
        fwht_in_place(&mut table).expect("power of two");
        table
    }

    /// `M_t` over the whole cube.
    pub fn weight_table(&self, f_table: &[bool]) -> Vec<f64> {
        let n = f_table.len().trailing_zeros() as usize;
        let offset = self.stage() as f64 * self.theta;
        self.vote_table(n)
            .iter()
            .zip(f_table)
            .map(|(&v, &fx)| weight_from_margin(f64::from(to_pm1(fx)) * v - offset, self.gamma))
            .collect()
    }

    pub fn combined(&self) -> Result<CombinedHypothesis, BoostError> {
        combine(self.hypotheses.clone())
    }
}

/// `h(x) = sign(sum_i h_i(x))` with `sign(0) = +1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CombinedHypothesis {
    hypotheses: Vec<WeakHypothesis>,
}

pub fn combine(hypotheses: Vec<WeakHypothesis>) -> Result<CombinedHypothesis, BoostError> {
    if hypotheses.is_empty() {
        return Err(BoostError::EmptyCombination);
    }
    Ok(CombinedHypothesis { hypotheses })
}

impl CombinedHypothesis {
    pub fn hypotheses(&self) -> &[WeakHypothesis] {
        &self.hypotheses
    }

    pub fn len(&self) -> usize {
        self.hypotheses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hypotheses.is_empty()
    }

    pub fn eval(&self, x: u64) -> i8 {
        let total: i64 = self.hypotheses.iter().map(|h| i64::from(h.eval(x))).sum();
        if total < 0 {
            -1
        } else {
            1
        }
    }

    /// Bit form, `true` where the vote is −1.
    pub fn eval_bit(&self, x: u64) -> bool {
        self.eval(x) < 0
    }

    pub fn truth_table(&self, n: usize) -> Vec<bool> {
        let mut state = BoostState {
            gamma: 0.25,
            theta: 0.0,
            hypotheses: Vec::new(),
            weights: Vec::new(),
        };
        for &h in &self.hypotheses {
            state.push(h);
        }
        state.vote_table(n).iter().map(|&v| v < 0.0).collect()
    }

    /// `Pr_x[f(x) != h(x)]` over the whole cube.
    pub fn exact_error(&self, f_table: &[bool]) -> f64 {
        let n = f_table.len().trailing_zeros() as usize;
        let wrong = self
            .truth_table(n)
            .iter()
            .zip(f_table)
            .filter(|(h, f)| h != f)
            .count();
        wrong as f64 / f_table.len() as f64
    }
}

/// What the filter loop hands its weak learner at stage `t`.
#[derive(Debug, Clone, Copy)]
pub struct FilterStage<'a> {
    pub t: usize,
    pub f_table: &'a [bool],
    /// `M_t` over the cube.
    pub m_cube: &'a [f64],
    pub e_t: f64,
    pub sample: &'a SharedSample,
}

impl FilterStage<'_> {
    pub fn n(&self) -> usize {
        self.f_table.len().trailing_zeros() as usize
    }
}

/// What the sampling loop hands its weak learner at stage `t`.
#[derive(Debug, Clone, Copy)]
pub struct SampleStage<'a> {
    pub t: usize,
    pub sample: &'a SharedSample,
    /// `M_t` at each sample point, in sample order.
    pub m_sample: &'a [f64],
    pub e_t: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub t: usize,
    /// Estimated `E[M_t]` that the loop acted on.
    pub e_t: f64,
    /// Exact `E[M_t]` over the cube (sample mean for the sampling version).
    pub exact_e: f64,
    pub a: ParityIndex,
    pub sign: i8,
    /// Advantage the weak learner reported.
    pub advantage: f64,
    /// `sign * E_x[M_t(x) f(x) chi_A(x)]` computed exactly.
    pub exact_correlation: f64,
    /// `max_A |E_x[M_t(x) f(x) chi_A(x)]|`, the best any learner could do.
    pub exact_best: f64,
    /// `max_x M_t(x) / e_t`, i.e. the sup norm of `2^n D_t` (or `m D_t`).
    pub smoothness: f64,
    pub quantum_queries: u64,
    pub classical_queries: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Converged,
    StageBudgetExceeded,
    WeakLearnerFailure,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostOutcome {
    pub stages: Vec<StageRecord>,
    /// Estimate at the last loop test.
    pub final_e: f64,
    /// Exact `E[M_{T+1}]` at the last loop test.
    pub final_exact_e: f64,
    pub termination: Termination,
    /// Weak-learner error message when it stopped the run.
    pub failure: Option<String>,
    pub hypotheses: Vec<WeakHypothesis>,
}

impl BoostOutcome {
    pub fn stage_count(&self) -> usize {
        self.hypotheses.len()
    }

    pub fn combined(&self) -> Result<CombinedHypothesis, BoostError> {
        combine(self.hypotheses.clone())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterConfig {
    pub epsilon: f64,
    pub gamma: f64,
    /// Loop runs while `E_t > stop_fraction * epsilon`.
    pub stop_fraction: f64,
    pub max_stages: usize,
}

impl FilterConfig {
    pub fn new(epsilon: f64, gamma: f64) -> Self {
        FilterConfig {
            epsilon,
            gamma,
            stop_fraction: DEFAULT_STOP_FRACTION,
            max_stages: stage_budget(epsilon, gamma),
        }
    }
}

/// Argument of the logarithm in the filter sample size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleSizeRule {
    /// `ln(1/(eps gamma) + 2)`.
    #[default]
    InverseEpsGamma,
    /// `ln(T + 2)` with `T` the stage budget.
    StageBound,
}

pub fn filter_sample_size(epsilon: f64, gamma: f64, c_r: f64, rule: SampleSizeRule) -> usize {
    let log = match rule {
        SampleSizeRule::InverseEpsGamma => (1.0 / (epsilon * gamma) + 2.0).ln(),
        SampleSizeRule::StageBound => (stage_budget(epsilon, gamma) as f64 + 2.0).ln(),
    };
    (c_r * log / (epsilon * epsilon)).ceil() as usize
}

/// Exact `E_x[g(x) chi_A(x)]` for one parity.
fn exact_coefficient(g: impl Fn(u64) -> f64, a: ParityIndex, len: usize) -> f64 {
    let total: f64 = (0..len as u64).map(|x| g(x) * f64::from(chi(a, x))).sum();
    total / len as f64
}

/// Filtering loop over the cube with `E_t` estimated on `sample`.
///
/// The weak learner sees the exact weight table but is expected to touch
/// the target only through its own oracle; the loop uses the table for the
/// exact diagnostics in each [`StageRecord`]. Weak-learner failures and the
/// stage budget end the loop with the matching [`Termination`].
pub fn run_filter_loop<W>(
    f_table: &[bool],
    sample: &SharedSample,
    cfg: &FilterConfig,
    mut wl: W,
    counter: &mut QueryCounter,
) -> Result<BoostOutcome, BoostError>
where
    W: FnMut(&FilterStage<'_>, &mut QueryCounter) -> Result<WeakHypothesis, WeakError>,
{
    check_params(cfg.epsilon, cfg.gamma)?;
    if sample.is_empty() {
        return Err(BoostError::InvalidParameter("empty sample".into()));
    }
    if f_table.len() != 1 << sample.n() {
        return Err(BoostError::InvalidParameter("sample and table sizes differ".into()));
    }
    let len = f_table.len();
    let stop = cfg.stop_fraction * cfg.epsilon;
    let mut state = BoostState::new(cfg.gamma)?;
    let mut stages = Vec::new();

    loop {
        let m_cube = state.weight_table(f_table);
        let e_t = sample.points().iter().map(|&x| m_cube[x as usize]).sum::<f64>()
            / sample.len() as f64;
        let exact_e = m_cube.iter().sum::<f64>() / len as f64;
        let finish = |termination, failure, stages| BoostOutcome {
            stages,
            final_e: e_t,
            final_exact_e: exact_e,
            termination,
            failure,
            hypotheses: state.hypotheses().to_vec(),
        };
        if e_t <= stop {
            return Ok(finish(Termination::Converged, None, stages));
        }
        if state.stage() >= cfg.max_stages {
            return Ok(finish(Termination::StageBudgetExceeded, None, stages));
        }
        let t = state.stage() + 1;
        let before = *counter;
        let input = FilterStage {
            t,
            f_table,
            m_cube: &m_cube,
            e_t,
            sample,
        };
        let h = match wl(&input, counter) {
            Ok(h) => h,
            Err(e @ WeakError::NoHeavyCoefficient { .. }) => {
                return Ok(finish(Termination::WeakLearnerFailure, Some(e.to_string()), stages))
            }
            Err(source) => return Err(BoostError::WeakLearner { stage: t, source }),
        };
        let spent = counter.since(before);
        let exact_correlation = f64::from(h.sign)
            * exact_coefficient(
                |x| m_cube[x as usize] * f64::from(to_pm1(f_table[x as usize])),
                h.a,
                len,
            );
        let max_m = m_cube.iter().cloned().fold(0.0, f64::max);
        let exact_best = exact_filter_learner(&input, &mut QueryCounter::default())
            .map_err(|source| BoostError::WeakLearner { stage: t, source })?
            .est_advantage;
        stages.push(StageRecord {
            t,
            e_t,
            exact_e,
            a: h.a,
            sign: h.sign,
            advantage: h.est_advantage,
            exact_correlation,
            exact_best,
            smoothness: max_m / e_t,
            quantum_queries: spent.quantum,
            classical_queries: spent.classical,
        });
        state.push(h);
    }
}

/// Boosting by filtering: draws one shared sample through `oracle` and runs
/// [`run_filter_loop`] with the default stopping point and stage budget.
#[allow(clippy::too_many_arguments)]
pub fn smoothboost_filter<R, W>(
    oracle: &MembershipOracle,
    epsilon: f64,
    gamma: f64,
    c_r: f64,
    rule: SampleSizeRule,
    wl: W,
    rng: &mut R,
    counter: &mut QueryCounter,
) -> Result<(CombinedHypothesis, BoostOutcome), BoostError>
where
    R: Rng + ?Sized,
    W: FnMut(&FilterStage<'_>, &mut QueryCounter) -> Result<WeakHypothesis, WeakError>,
{
    check_params(epsilon, gamma)?;
    let size = filter_sample_size(epsilon, gamma, c_r, rule);
    let sample = SharedSample::draw(oracle, size, rng, counter);
    let outcome = run_filter_loop(
        oracle.table(),
        &sample,
        &FilterConfig::new(epsilon, gamma),
        wl,
        counter,
    )?;
    finish_outcome(outcome)
}

fn finish_outcome(outcome: BoostOutcome) -> Result<(CombinedHypothesis, BoostOutcome), BoostError> {
    match outcome.termination {
        Termination::Converged => Ok((outcome.combined()?, outcome)),
        Termination::StageBudgetExceeded => Err(BoostError::StageBudgetExceeded {
            budget: outcome.stage_count(),
        }),
        Termination::WeakLearnerFailure => Err(BoostError::WeakLearner {
            stage: outcome.stage_count() + 1,
            source: WeakError::NoHeavyCoefficient { attempts: 0 },
        }),
    }
}

/// Boosting by sampling over a fixed labeled sample, run while
/// `E_S[M_t] > stop_fraction * epsilon` (1 for the plain algorithm).
pub fn smoothboost_sample_with<W>(
    sample: &SharedSample,
    epsilon: f64,
    gamma: f64,
    stop_fraction: f64,
    mut wl: W,
) -> Result<(CombinedHypothesis, BoostOutcome), BoostError>
where
    W: FnMut(&SampleStage<'_>) -> Result<WeakHypothesis, WeakError>,
{
    check_params(epsilon, gamma)?;
    if sample.is_empty() {
        return Err(BoostError::InvalidParameter("empty sample".into()));
    }
    let budget = stage_budget(epsilon, gamma);
    let mut state = BoostState::new(gamma)?;
    let mut stages = Vec::new();
    let labels: Vec<i8> = sample.labels().iter().map(|&l| to_pm1(l)).collect();
    loop {
        let m: Vec<f64> = sample
            .points()
            .iter()
            .zip(&labels)
            .map(|(&x, &fx)| state.weight(fx, x))
            .collect();
        let e_t = m.iter().sum::<f64>() / m.len() as f64;
        if e_t <= stop_fraction * epsilon {
            let outcome = BoostOutcome {
                stages,
                final_e: e_t,
                final_exact_e: e_t,
                termination: Termination::Converged,
                failure: None,
                hypotheses: state.hypotheses().to_vec(),
            };
            return finish_outcome(outcome);
        }
        if state.stage() >= budget {
            return Err(BoostError::StageBudgetExceeded { budget });
        }
        let t = state.stage() + 1;
        let h = wl(&SampleStage {
            t,
            sample,
            m_sample: &m,
            e_t,
        })
        .map_err(|source| BoostError::WeakLearner { stage: t, source })?;
        let corr = sample
            .iter_pm1()
            .zip(&m)
            .map(|((x, fx), &mx)| mx * fx * f64::from(chi(h.a, x)))
            .sum::<f64>()
            / m.len() as f64;
        stages.push(StageRecord {
            t,
            e_t,
            exact_e: e_t,
            a: h.a,
            sign: h.sign,
            advantage: h.est_advantage,
            exact_correlation: f64::from(h.sign) * corr,
            exact_best: exact_sample_learner(&SampleStage { t, sample, m_sample: &m, e_t })
                .map(|b| b.est_advantage)
                .unwrap_or(0.0),
            smoothness: m.iter().cloned().fold(0.0, f64::max) / e_t,
            quantum_queries: 0,
            classical_queries: 0,
        });
        state.push(h);
    }
}

/// Boosting by sampling as in the plain algorithm: loop while `E > epsilon`.
pub fn smoothboost_sample<W>(
    sample: &SharedSample,
    epsilon: f64,
    gamma: f64,
    wl: W,
) -> Result<(CombinedHypothesis, BoostOutcome), BoostError>
where
    W: FnMut(&SampleStage<'_>) -> Result<WeakHypothesis, WeakError>,
{
    smoothboost_sample_with(sample, epsilon, gamma, 1.0, wl)
}

/// Exact weak learner for the filter loop: the best parity of `M_t f` over
/// the cube.
pub fn exact_filter_learner(
    stage: &FilterStage<'_>,
    _counter: &mut QueryCounter,
) -> Result<WeakHypothesis, WeakError> {
    let mut g: Vec<f64> = stage
        .m_cube
        .iter()
        .zip(stage.f_table)
        .map(|(&m, &fx)| m * f64::from(to_pm1(fx)))
        .collect();
    fwht_in_place(&mut g)?;
    let scale = 1.0 / g.len() as f64;
    g.iter_mut().for_each(|v| *v *= scale);
    let (a, c) = argmax_abs(&g);
    Ok(WeakHypothesis::new(a, c))
}

/// Best parity of `M_t f` over the sample points.
pub fn exact_sample_learner(stage: &SampleStage<'_>) -> Result<WeakHypothesis, WeakError> {
    let sample = stage.sample;
    if sample.is_empty() {
        return Err(WeakError::EmptySample);
    }
    let mut mass = vec![0.0f64; 1 << sample.n()];
    for ((x, fx), &m) in sample.iter_pm1().zip(stage.m_sample) {
        mass[x as usize] += m * fx;
    }
    fwht_in_place(&mut mass)?;
    let scale = 1.0 / sample.len() as f64;
    mass.iter_mut().for_each(|v| *v *= scale);
    let (a, c) = argmax_abs(&mass);
    Ok(WeakHypothesis::new(a, c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boolean_fn::{gen_random_dnf, wht, RealTable};
    use crate::seeding::rng_from;

    fn character_table(n: usize, b: u64) -> Vec<bool> {
        (0..1u64 << n).map(|x| chi(ParityIndex(b), x) == -1).collect()
    }

    /// Smallest `t` with `(1 − gamma)^{t(1−theta)/2} <= bound`.
    fn closed_form_stages(gamma: f64, bound: f64) -> usize {
        let theta = margin_theta(gamma);
        (1..).find(|&t| weight_from_margin(t as f64 * (1.0 - theta), gamma) <= bound).unwrap()
    }

    #[test]
    fn weight_examples() {
        assert_eq!(weight_from_margin(-0.3, 0.25), 1.0);
        assert_eq!(weight_from_margin(0.0, 0.25), 1.0);
        assert!((weight_from_margin(2.0, 0.25) - 0.75).abs() < 1e-15);
        assert!(weight_from_margin(1e9, 0.4) > 0.0);
    }

    #[test]
    fn theta_range() {
        for g in [1e-6, 0.01, 0.1, 0.25, 0.499_999] {
            let th = margin_theta(g);
            assert!(th > 0.0 && th <= 0.2);
        }
        assert!(BoostState::new(0.0).is_err());
        assert!(BoostState::new(0.5).is_err());
    }

    #[test]
    fn margin_examples() {
        let mut s = BoostState::new(0.2).unwrap();
        assert_eq!(s.margin(1, 5), 0.0);
        s.push(WeakHypothesis::new(ParityIndex(3), 0.4));
        let x = 0b01;
        let agree = s.hypotheses()[0].eval(x);
        assert!((s.margin(agree, x) - (1.0 - s.theta())).abs() < 1e-15);
    }

    #[test]
    fn lazy_margin_matches_table_accumulator() {
        let n = 6;
        let f = gen_random_dnf(n, 3, 2, 17).unwrap().truth_table().unwrap();
        let mut rng = rng_from(4);
        let mut state = BoostState::new(0.1).unwrap();
        let mut acc = vec![0.0f64; 1 << n];
        for _ in 0..20 {
            let h = WeakHypothesis::new(
                ParityIndex(rng.gen_range(0..64)),
                if rng.gen_bool(0.5) { 0.3 } else { -0.3 },
            );
            state.push(h);
            for (x, a) in acc.iter_mut().enumerate() {
                *a += f64::from(to_pm1(f[x]) * h.eval(x as u64)) - state.theta();
            }
            let table = state.weight_table(&f);
            for x in 0..64u64 {
                let fx = to_pm1(f[x as usize]);
                assert!((state.margin(fx, x) - acc[x as usize]).abs() < 1e-10);
                assert!((table[x as usize] - weight_from_margin(acc[x as usize], 0.1)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn combine_examples() {
        assert!(matches!(combine(vec![]), Err(BoostError::EmptyCombination)));
        let h = WeakHypothesis::new(ParityIndex(6), -0.2);
        let one = combine(vec![h]).unwrap();
        let three = combine(vec![h; 3]).unwrap();
        for x in 0..16 {
            assert_eq!(one.eval(x), h.eval(x));
            assert_eq!(three.eval(x), h.eval(x));
        }
        let opposed = combine(vec![
            WeakHypothesis::new(ParityIndex(1), 0.3),
            WeakHypothesis::new(ParityIndex(1), -0.3),
        ])
        .unwrap();
        assert!((0..8).all(|x| opposed.eval(x) == 1));
        let table = three.truth_table(4);
        assert!((0..16).all(|x| table[x as usize] == three.eval_bit(x)));
    }

    #[test]
    fn sample_version_on_character_picks_it_every_stage() {
        let (n, b, eps, gamma) = (6, 0b101101u64, 0.1, 0.25);
        let oracle = MembershipOracle::new(character_table(n, b)).unwrap();
        let s = SharedSample::full_cube(&oracle);
        let (h, out) = smoothboost_sample(&s, eps, gamma, exact_sample_learner).unwrap();
        assert!(out.hypotheses.iter().all(|h| h.a.0 == b && h.sign == 1));
        assert_eq!(h.exact_error(oracle.table()), 0.0);
        assert_eq!(out.stage_count(), closed_form_stages(gamma, eps));
    }

    #[test]
    fn filter_version_on_literal() {
        // x_0 as a bit function is chi_{e_0} in ±1 form.
        let table: Vec<bool> = (0..64u64).map(|x| x & 1 == 1).collect();
        let oracle = MembershipOracle::new(table).unwrap();
        let (eps, gamma) = (0.1, 1.0 / 12.0);
        let (h, out) = smoothboost_filter(
            &oracle,
            eps,
            gamma,
            DEFAULT_C_R,
            SampleSizeRule::InverseEpsGamma,
            exact_filter_learner,
            &mut rng_from(1),
            &mut QueryCounter::default(),
        )
        .unwrap();
        assert_eq!(h.exact_error(oracle.table()), 0.0);
        assert!(out.hypotheses.iter().all(|h| h.a.0 == 1 && h.sign == 1));
        assert_eq!(
            out.stage_count(),
            closed_form_stages(gamma, DEFAULT_STOP_FRACTION * eps)
        );
    }

    #[test]
    fn sample_version_bounds_on_random_dnfs() {
        let (n, eps) = (10, 0.1);
        for s in 1..=4usize {
            let gamma = 1.0 / (8.0 * s as f64 + 4.0);
            for seed in 0..3u64 {
                let f = gen_random_dnf(n, s, 3, seed).unwrap();
                let oracle = MembershipOracle::from_dnf(&f).unwrap();
                let sample = SharedSample::full_cube(&oracle);
                let (h, out) =
                    smoothboost_sample(&sample, eps, gamma, exact_sample_learner).unwrap();
                assert!(h.exact_error(oracle.table()) < eps);
                assert!(out.stage_count() as f64 <= 2.0 / (eps * gamma * gamma));
                for st in &out.stages {
                    assert!(st.smoothness <= 1.0 / eps + 1e-9);
                }
                // N_T(x) = T (f(x) H(x) − theta).
                let mut state = BoostState::new(gamma).unwrap();
                out.hypotheses.iter().for_each(|&h| state.push(h));
                let t = out.stage_count() as f64;
                for x in (0..1u64 << n).step_by(7) {
                    let fx = to_pm1(oracle.table()[x as usize]);
                    let big_h = state.vote(x) as f64 / t;
                    assert!((state.margin(fx, x) - t * (f64::from(fx) * big_h - state.theta())).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn filter_version_exact_learner_error_frequency() {
        let (n, eps, gamma) = (10, 0.1, 1.0 / 28.0);
        let mut good = 0;
        let mut within = (0, 0);
        for seed in 0..100u64 {
            let f = gen_random_dnf(n, 3, 3, seed).unwrap();
            let oracle = MembershipOracle::from_dnf(&f).unwrap();
            let (h, out) = smoothboost_filter(
                &oracle,
                eps,
                gamma,
                DEFAULT_C_R,
                SampleSizeRule::InverseEpsGamma,
                exact_filter_learner,
                &mut rng_from(seed),
                &mut QueryCounter::default(),
            )
            .unwrap();
            if h.exact_error(oracle.table()) < eps {
                good += 1;
            }
            for st in &out.stages {
                within.1 += 1;
                if (st.e_t - st.exact_e).abs() <= eps / 3.0 {
                    within.0 += 1;
                    assert!(st.smoothness <= 3.0 / eps);
                }
            }
        }
        assert!(good >= 95, "good = {good}");
        assert!(within.0 as f64 >= 0.95 * within.1 as f64);
    }

    #[test]
    fn filter_on_full_cube_matches_sample_version() {
        let n = 8;
        let (eps, gamma) = (0.1, 0.05);
        for seed in 0..5u64 {
            let f = gen_random_dnf(n, 3, 3, seed).unwrap();
            let oracle = MembershipOracle::from_dnf(&f).unwrap();
            let cube = SharedSample::full_cube(&oracle);
            let (_, sampled) =
                smoothboost_sample_with(&cube, eps, gamma, 1.0, exact_sample_learner).unwrap();
            let cfg = FilterConfig {
                stop_fraction: 1.0,
                ..FilterConfig::new(eps, gamma)
            };
            let filtered = run_filter_loop(
                oracle.table(),
                &cube,
                &cfg,
                exact_filter_learner,
                &mut QueryCounter::default(),
            )
            .unwrap();
            assert_eq!(sampled.hypotheses, filtered.hypotheses);

            // At the default stopping point the sampled run is a prefix.
            let default = run_filter_loop(
                oracle.table(),
                &cube,
                &FilterConfig::new(eps, gamma),
                exact_filter_learner,
                &mut QueryCounter::default(),
            )
            .unwrap();
            assert!(default.hypotheses.starts_with(&sampled.hypotheses));
        }
    }

    #[test]
    fn stage_budget_is_enforced() {
        // A learner that always returns the same useless parity never
        // drives the weights down.
        let table: Vec<bool> = (0..16u64).map(|x| x & 1 == 1).collect();
        let oracle = MembershipOracle::new(table).unwrap();
        let cube = SharedSample::full_cube(&oracle);
        let bad = |_: &SampleStage<'_>| Ok(WeakHypothesis::new(ParityIndex(2), 0.1));
        let r = smoothboost_sample(&cube, 0.1, 0.2, bad);
        assert!(matches!(r, Err(BoostError::StageBudgetExceeded { budget: 500 })));
        let out = run_filter_loop(
            oracle.table(),
            &cube,
            &FilterConfig::new(0.1, 0.2),
            |_: &FilterStage<'_>, _: &mut QueryCounter| {
                Ok(WeakHypothesis::new(ParityIndex(2), 0.1))
            },
            &mut QueryCounter::default(),
        )
        .unwrap();
        assert_eq!(out.termination, Termination::StageBudgetExceeded);
        assert_eq!(out.stage_count(), 500);
    }

    #[test]
    fn weak_learner_failure_is_reported() {
        let oracle = MembershipOracle::new(vec![false; 16]).unwrap();
        let cube = SharedSample::full_cube(&oracle);
        let out = run_filter_loop(
            oracle.table(),
            &cube,
            &FilterConfig::new(0.1, 0.2),
            |_: &FilterStage<'_>, _: &mut QueryCounter| {
                Err(WeakError::NoHeavyCoefficient { attempts: 3 })
            },
            &mut QueryCounter::default(),
        )
        .unwrap();
        assert_eq!(out.termination, Termination::WeakLearnerFailure);
        assert!(out.failure.is_some());
    }

    #[test]
    fn sample_sizes() {
        let a = filter_sample_size(0.1, 0.1, 8.0, SampleSizeRule::InverseEpsGamma);
        assert_eq!(a, (800.0 * 102f64.ln()).ceil() as usize);
        let b = filter_sample_size(0.1, 0.1, 8.0, SampleSizeRule::StageBound);
        assert_eq!(b, (800.0 * 2002f64.ln()).ceil() as usize);
        assert_eq!(stage_budget(0.1, 0.1), 2000);
    }

    #[test]
    fn exact_filter_learner_is_best_parity() {
        let n = 6;
        let f = gen_random_dnf(n, 2, 2, 8).unwrap().truth_table().unwrap();
        let m: Vec<f64> = (0..64).map(|x| 0.25 + (x % 3) as f64 / 4.0).collect();
        let oracle = MembershipOracle::new(f.clone()).unwrap();
        let cube = SharedSample::full_cube(&oracle);
        let h = exact_filter_learner(
            &FilterStage {
                t: 1,
                f_table: &f,
                m_cube: &m,
                e_t: 0.5,
                sample: &cube,
            },
            &mut QueryCounter::default(),
        )
        .unwrap();
        let g = RealTable::new(m.clone()).unwrap().mul(&RealTable::from_bits(&f));
        let spectrum = wht(&g);
        let best = spectrum.values().iter().fold(0.0f64, |b, c| b.max(c.abs()));
        assert_eq!(h.est_advantage, best);
    }
}
