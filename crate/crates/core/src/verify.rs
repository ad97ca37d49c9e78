//! Invariant suites shared by the `verify` subcommand and the acceptance
//! tests. Each suite is deterministic and reports how many checks it ran
//! and how many failed.

use rand::seq::index::sample as sample_indices;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::boolean_fn::{chi, gen_random_dnf, wht, ParityIndex, RealTable};
use crate::boosting::{
    exact_filter_learner, margin_theta, smoothboost_filter, SampleSizeRule, DEFAULT_C_R,
};
use crate::quantum_sim::{
    amplification_law, amplify, gl_operator_c_with_fault, marked_mass, GateFault, QueryCounter,
};
use crate::seeding::{derive_path, rng_from};
use crate::weak_parity::{signed_digits_of, MembershipOracle};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteResult {
    pub name: String,
    pub checks: usize,
    pub failures: usize,
    /// Largest observed deviation, in the suite's own units.
    pub worst: f64,
    pub note: String,
}

impl SuiteResult {
    fn new(name: &str) -> Self {
        SuiteResult {
            name: name.into(),
            checks: 0,
            failures: 0,
            worst: 0.0,
            note: String::new(),
        }
    }

    fn check(&mut self, ok: bool) {
        self.checks += 1;
        if !ok {
            self.failures += 1;
        }
    }

    fn deviation(&mut self, dev: f64, tol: f64) {
        self.worst = self.worst.max(dev);
        self.check(dev <= tol);
    }

    pub fn passed(&self) -> bool {
        self.failures == 0 && self.checks > 0
    }
}

pub const SPECTRUM_TOLERANCE: f64 = 1e-10;
pub const LAW_TOLERANCE: f64 = 1e-9;

fn random_table(n: usize, seed: u64) -> Vec<bool> {
    let mut rng = rng_from(seed);
    (0..1usize << n).map(|_| rng.gen_bool(0.5)).collect()
}

/// Measurement distribution of register I against the squared spectrum, for
/// `per_n` random functions at each `n`.
pub fn spectrum_suite(ns: &[usize], per_n: usize, seed: u64, fault: GateFault) -> SuiteResult {
    let mut res = SuiteResult::new("spectrum-measurement");
    for &n in ns {
        for i in 0..per_n {
            let table = random_table(n, derive_path(seed, &[n as u64, i as u64]));
            let spectrum = wht(&RealTable::from_bits(&table));
            let state = match gl_operator_c_with_fault(
                n,
                &|x| table[x as usize],
                &mut QueryCounter::default(),
                fault,
            ) {
                Ok(s) => s,
                Err(_) => {
                    res.check(false);
                    continue;
                }
            };
            let dist = state.distribution_i();
            let dev = dist
                .iter()
                .zip(spectrum.values())
                .map(|(p, c)| (p - c * c).abs())
                .fold(0.0, f64::max);
            res.deviation(dev, SPECTRUM_TOLERANCE);
        }
    }
    res.note = format!("n in {ns:?}, {per_n} functions each, tol {SPECTRUM_TOLERANCE:e}");
    res
}

/// Noisy copy of `chi_B` with exactly `(1/2 − gamma) 2^n` flipped points,
/// so that its coefficient at `B` is exactly `2 gamma`.
pub fn planted_parity(n: usize, b: ParityIndex, gamma: f64, seed: u64) -> Vec<bool> {
    let size = 1usize << n;
    let flips = ((0.5 - gamma) * size as f64).round() as usize;
    let mut table: Vec<bool> = (0..size as u64).map(|x| chi(b, x) == -1).collect();
    for x in sample_indices(&mut rng_from(seed), size, flips) {
        table[x] = !table[x];
    }
    table
}

/// Probability of observing the planted parity equals `4 gamma^2`.
pub fn four_gamma_suite(n: usize, gammas: &[f64], seed: u64) -> SuiteResult {
    let mut res = SuiteResult::new("four-gamma-squared");
    let mask = (1u64 << n) - 1;
    for (i, &gamma) in gammas.iter().enumerate() {
        let b = ParityIndex(derive_path(seed, &[i as u64]) & mask);
        let table = planted_parity(n, b, gamma, derive_path(seed, &[i as u64, 1]));
        match gl_operator_c_with_fault(n, &|x| table[x as usize], &mut QueryCounter::default(), GateFault::None) {
            Ok(state) => {
                let p = state.distribution_i()[b.0 as usize];
                res.deviation((p - 4.0 * gamma * gamma).abs(), SPECTRUM_TOLERANCE);
            }
            Err(_) => res.check(false),
        }
    }
    res.note = format!("n = {n}, gamma in {gammas:?}");
    res
}

/// Inner-product (bent) function: every `|ĝ(A)|^2` equals `2^-n`.
pub fn bent_function(n: usize) -> Vec<bool> {
    assert!(n.is_multiple_of(2));
    (0..1u64 << n)
        .map(|x| (0..n / 2).fold(false, |acc, i| acc ^ ((x >> (2 * i)) & (x >> (2 * i + 1)) & 1 == 1)))
        .collect()
}

/// Success probability after `k` iterates against `sin^2((2k+1) asin sqrt p0)`.
///
/// Each instance marks the first `round(p0 2^n)` parities of a bent function,
/// so its initial mass is the dyadic value nearest the requested `p0`; the
/// law is checked against that exact mass.
pub fn amplification_suite(n: usize, p0s: &[f64]) -> SuiteResult {
    let mut res = SuiteResult::new("amplification-law");
    let table = bent_function(n);
    let size = 1u64 << n;
    let mut used = Vec::new();
    for &target in p0s {
        let marked = ((target * size as f64).round() as u64).max(1);
        let predicate = |a: ParityIndex| a.0 < marked;
        let p0 = marked as f64 / size as f64;
        used.push(p0);
        let k_top = (1.0 / target.sqrt()).ceil() as usize;
        for k in 0..=k_top {
            let mut counter = QueryCounter::default();
            match amplify(n, &|x| table[x as usize], &predicate, k, &mut counter) {
                Ok(state) => {
                    let p = marked_mass(&state.distribution_i(), predicate);
                    res.deviation((p - amplification_law(p0, k)).abs(), LAW_TOLERANCE);
                    res.check(counter.quantum == 2 * (2 * k as u64 + 1));
                }
                Err(_) => res.check(false),
            }
        }
    }
    res.note = format!("n = {n}, exact p0 in {used:?}");
    res
}

/// `max_A |f̂(A)| >= 1/(2s+1)` on random DNFs.
pub fn jackson_suite(count: usize, n_max: usize, s_max: usize, seed: u64) -> SuiteResult {
    let mut res = SuiteResult::new("jackson-bound");
    let mut rng = rng_from(seed);
    let mut worst_margin = f64::INFINITY;
    for i in 0..count {
        let n = rng.gen_range(2..=n_max);
        let s = rng.gen_range(1..=s_max);
        let term_len = rng.gen_range(1..=n.min(4));
        let f = match gen_random_dnf(n, s, term_len, derive_path(seed, &[i as u64])) {
            Ok(f) => f,
            Err(_) => {
                res.check(false);
                continue;
            }
        };
        let table = RealTable::from_bits(&f.truth_table().expect("n within cap"));
        let best = wht(&table).values().iter().fold(0.0f64, |b, c| b.max(c.abs()));
        let margin = best - 1.0 / (2.0 * s as f64 + 1.0);
        worst_margin = worst_margin.min(margin);
        res.check(margin >= -1e-12);
    }
    res.worst = worst_margin;
    res.note = format!("{count} DNFs, n <= {n_max}, s <= {s_max}; worst is the smallest margin");
    res
}

/// Per-run figures of the boosting suite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoostRun {
    pub epsilon: f64,
    pub s: usize,
    pub stages: usize,
    pub stage_bound: f64,
    pub error: f64,
    pub max_smoothness: f64,
}

/// Filter-version SmoothBoost with the exact weak learner: final error below
/// epsilon, stage count within `2/(eps gamma^2)`, and `sup 2^n D_t <= 3/eps`
/// at every stage whose estimate was within `eps/3`.
pub fn boost_bounds_suite(
    n: usize,
    epsilons: &[f64],
    sizes: &[usize],
    seeds: usize,
    seed: u64,
) -> (SuiteResult, Vec<BoostRun>) {
    let mut res = SuiteResult::new("smoothboost-bounds");
    let mut runs = Vec::new();
    for &eps in epsilons {
        for &s in sizes {
            let gamma = 1.0 / (8.0 * s as f64 + 4.0);
            debug_assert!(margin_theta(gamma) > 0.0);
            for i in 0..seeds {
                let path = [s as u64, eps.to_bits(), i as u64];
                let f = gen_random_dnf(n, s, 3.min(n), derive_path(seed, &path)).expect("valid sizes");
                let oracle = MembershipOracle::from_dnf(&f).expect("n within cap");
                let mut rng = rng_from(derive_path(seed, &[path[0], path[1], path[2], 1]));
                let result = smoothboost_filter(
                    &oracle,
                    eps,
                    gamma,
                    DEFAULT_C_R,
                    SampleSizeRule::InverseEpsGamma,
                    exact_filter_learner,
                    &mut rng,
                    &mut QueryCounter::default(),
                );
                let (h, out) = match result {
                    Ok(r) => r,
                    Err(_) => {
                        res.check(false);
                        continue;
                    }
                };
                let error = h.exact_error(oracle.table());
                let bound = 2.0 / (eps * gamma * gamma);
                res.check(error < eps);
                res.check(out.stage_count() as f64 <= bound);
                let mut max_smooth: f64 = 0.0;
                for st in out.stages.iter().filter(|st| (st.e_t - st.exact_e).abs() <= eps / 3.0) {
                    max_smooth = max_smooth.max(st.smoothness);
                    res.check(st.smoothness <= 3.0 / eps);
                }
                res.worst = res.worst.max(error / eps);
                runs.push(BoostRun {
                    epsilon: eps,
                    s,
                    stages: out.stage_count(),
                    stage_bound: bound,
                    error,
                    max_smoothness: max_smooth,
                });
            }
        }
    }
    res.note = format!(
        "n = {n}, eps in {epsilons:?}, s in {sizes:?}, {seeds} seeds; worst is max error/eps"
    );
    (res, runs)
}

/// Exhaustive signed-digit reconstruction for `d in 1..=d_max`.
pub fn signed_digit_suite(d_max: usize) -> SuiteResult {
    let mut res = SuiteResult::new("signed-digit-reconstruction");
    for d in 1..=d_max {
        for v in 0..=(1u64 << d) {
            let (alpha, k) = signed_digits_of(v, d);
            let recon: i64 = alpha
                .iter()
                .enumerate()
                .map(|(j, &a)| i64::from(a) << (d - 1 - j))
                .sum::<i64>()
                + i64::from(k);
            res.check(recon == v as i64 && alpha.iter().all(|a| a.abs() == 1) && k.abs() <= 1);
        }
    }
    res.note = format!("d in 1..={d_max}, every v in 0..=2^d");
    res
}

/// Every suite at its standard size. `fault` only affects the spectrum suite.
pub fn run_all(seed: u64, fault: GateFault) -> Vec<SuiteResult> {
    vec![
        spectrum_suite(&[4, 6, 8, 10], 20, seed, fault),
        four_gamma_suite(10, &[0.25, 0.125, 0.0625], seed),
        amplification_suite(10, &[0.01, 0.05, 0.25]),
        jackson_suite(200, 12, 8, seed),
        boost_bounds_suite(10, &[0.05, 0.1, 0.2], &[1, 2, 3], 20, seed).0,
        signed_digit_suite(8),
    ]
}
