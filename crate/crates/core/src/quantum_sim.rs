//! Exact statevector simulation of the quantum Goldreich–Levin circuit and
//! its amplitude-amplification iterate.
//!
//! The state lives on three registers: `I` (n qubits), the one-qubit answer
//! register `A` and the one-qubit phase register `B`. Basis index layout is
//! `(i << 2) | (a << 1) | b`. The oracle workspace is empty, so the answer
//! register is a single qubit and `U_MQ` is its own inverse.

use std::io::{self, Read, Write};

use num_complex::Complex64;
use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::boolean_fn::{check_cap, BoolFnError, ParityIndex};

/// Tolerated norm drift before a composite operation reports an error.
pub const NORM_TOLERANCE: f64 = 1e-9;

/// Magic bytes opening a state dump.
pub const DUMP_MAGIC: &[u8; 8] = b"QHSSTATE";

#[derive(Debug, Error)]
pub enum SimError {
    #[error("register width n = {0} must be at least 1")]
    EmptyRegister(usize),
    #[error(transparent)]
    Cap(#[from] BoolFnError),
    #[error("state norm drifted to {0}")]
    NormDrift(f64),
    #[error("bad state dump: {0}")]
    BadDump(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Oracle query tally for a run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryCounter {
    /// Applications of `U_MQ` or its inverse.
    pub quantum: u64,
    /// Classical membership queries.
    pub classical: u64,
}

impl QueryCounter {
    pub fn merge(&mut self, other: QueryCounter) {
        self.quantum += other.quantum;
        self.classical += other.classical;
    }

    pub fn since(&self, earlier: QueryCounter) -> QueryCounter {
        QueryCounter {
            quantum: self.quantum - earlier.quantum,
            classical: self.classical - earlier.classical,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// `|0_n>_I |0>_A |0>_B`.
    pub fn new(n: usize) -> Result<Self, SimError> {
        if n == 0 {
            return Err(SimError::EmptyRegister(n));
        }
        check_cap(n)?;
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << (n + 2)];
        amps[0] = Complex64::new(1.0, 0.0);
        Ok(StateVector { n, amps })
    }

    /// Builds a state from raw amplitudes without normalizing them.
    pub fn from_amplitudes(n: usize, amps: Vec<Complex64>) -> Result<Self, SimError> {
        if n == 0 {
            return Err(SimError::EmptyRegister(n));
        }
        if amps.len() != 1 << (n + 2) {
            return Err(SimError::BadDump(format!(
                "expected {} amplitudes, got {}",
                1usize << (n + 2),
                amps.len()
            )));
        }
        Ok(StateVector { n, amps })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amplitude(&self, i: u64, a: u8, b: u8) -> Complex64 {
        self.amps[basis_index(i, a, b)]
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// Errors when the norm has left `1 ± NORM_TOLERANCE`; never rescales.
    pub fn check_norm(&self) -> Result<(), SimError> {
        let norm = self.norm();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            Err(SimError::NormDrift(norm))
        } else {
            Ok(())
        }
    }

    /// `H^{⊗n}` on register I.
    pub fn apply_walsh_i(&mut self) {
        let len = self.amps.len();
        let mut h = 4;
        while h < len {
            for block in self.amps.chunks_exact_mut(2 * h) {
                let (lo, hi) = block.split_at_mut(h);
                for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                    let (u, v) = (*a, *b);
                    *a = u + v;
                    *b = u - v;
                }
            }
            h <<= 1;
        }
        let scale = (0.5f64).powf(self.n as f64 / 2.0);
        self.amps.iter_mut().for_each(|c| *c *= scale);
    }

    /// Pauli X on B.
    pub fn apply_x_b(&mut self) {
        for pair in self.amps.chunks_exact_mut(2) {
            pair.swap(0, 1);
        }
    }

    /// Controlled-Z between the answer qubit and B.
    pub fn apply_cz_a_b(&mut self) {
        for quad in self.amps.chunks_exact_mut(4) {
            quad[3] = -quad[3];
        }
    }

    /// Phase flip of every basis state with `I = 0`.
    pub fn apply_u0_i(&mut self) {
        for c in &mut self.amps[..4] {
            *c = -*c;
        }
    }

    /// Global phase −1.
    pub fn negate(&mut self) {
        self.amps.iter_mut().for_each(|c| *c = -*c);
    }

    /// Membership oracle `|i>|a> -> |i>|a xor f(i)>`; counts one quantum query.
    pub fn apply_umq(&mut self, f: &(impl Fn(u64) -> bool + ?Sized), counter: &mut QueryCounter) {
        for (i, quad) in self.amps.chunks_exact_mut(4).enumerate() {
            if f(i as u64) {
                quad.swap(0, 2);
                quad.swap(1, 3);
            }
        }
        counter.quantum += 1;
    }

    /// Equivalence-oracle reflection: negates every basis state whose I value
    /// satisfies `predicate`.
    pub fn apply_ueq(&mut self, predicate: &(impl Fn(ParityIndex) -> bool + ?Sized)) {
        for (i, quad) in self.amps.chunks_exact_mut(4).enumerate() {
            if predicate(ParityIndex(i as u64)) {
                quad.iter_mut().for_each(|c| *c = -*c);
            }
        }
    }

    /// Marginal distribution of register I.
    pub fn distribution_i(&self) -> Vec<f64> {
        self.amps
            .chunks_exact(4)
            .map(|quad| quad.iter().map(|c| c.norm_sqr()).sum())
            .collect()
    }

    /// Samples register I from [`StateVector::distribution_i`].
    pub fn measure_i<R: Rng + ?Sized>(&self, rng: &mut R) -> ParityIndex {
        sample_outcome(&self.distribution_i(), rng)
    }

    /// Writes the little-endian dump: 8-byte magic, `n` as u64, then
    /// `(re, im)` f64 pairs in basis order.
    pub fn write_dump<W: Write>(&self, mut w: W) -> io::Result<()> {
        w.write_all(DUMP_MAGIC)?;
        w.write_all(&(self.n as u64).to_le_bytes())?;
        for c in &self.amps {
            w.write_all(&c.re.to_le_bytes())?;
            w.write_all(&c.im.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_dump<R: Read>(mut r: R) -> Result<Self, SimError> {
        let mut header = [0u8; 16];
        r.read_exact(&mut header)?;
        if &header[..8] != DUMP_MAGIC {
            return Err(SimError::BadDump("magic mismatch".into()));
        }
        let n = u64::from_le_bytes(header[8..].try_into().expect("8 bytes")) as usize;
        if n == 0 || n > 40 {
            return Err(SimError::BadDump(format!("register width {n}")));
        }
        let mut amps = Vec::with_capacity(1 << (n + 2));
        let mut buf = [0u8; 16];
        for _ in 0..1usize << (n + 2) {
            r.read_exact(&mut buf)?;
            let re = f64::from_le_bytes(buf[..8].try_into().expect("8 bytes"));
            let im = f64::from_le_bytes(buf[8..].try_into().expect("8 bytes"));
            amps.push(Complex64::new(re, im));
        }
        StateVector::from_amplitudes(n, amps)
    }
}

#[inline]
pub fn basis_index(i: u64, a: u8, b: u8) -> usize {
    ((i as usize) << 2) | ((a as usize & 1) << 1) | (b as usize & 1)
}

pub(crate) fn sample_outcome<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> ParityIndex {
    let dist = WeightedIndex::new(probs).expect("distribution has positive mass");
    ParityIndex(dist.sample(rng) as u64)
}

/// Deliberate circuit defects used to show that the verification suites can
/// fail. Only [`GateFault::None`] builds the real circuit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GateFault {
    #[default]
    None,
    /// Replaces the controlled-Z inside `C` with the identity.
    DropCz,
}

/// Applies `C` to the current state.
fn apply_c(
    state: &mut StateVector,
    f: &(impl Fn(u64) -> bool + ?Sized),
    counter: &mut QueryCounter,
    fault: GateFault,
) {
    state.apply_walsh_i();
    state.apply_x_b();
    state.apply_umq(f, counter);
    if fault != GateFault::DropCz {
        state.apply_cz_a_b();
    }
    state.apply_umq(f, counter);
    state.apply_walsh_i();
}

/// Applies `C^dagger`: the gates of `C` in reverse order (all self-inverse).
fn apply_c_dagger(
    state: &mut StateVector,
    f: &(impl Fn(u64) -> bool + ?Sized),
    counter: &mut QueryCounter,
    fault: GateFault,
) {
    state.apply_walsh_i();
    state.apply_umq(f, counter);
    if fault != GateFault::DropCz {
        state.apply_cz_a_b();
    }
    state.apply_umq(f, counter);
    state.apply_x_b();
    state.apply_walsh_i();
}

/// `C |0_n, 0, 0>`. Measuring I yields `A` with probability `ĝ(A)^2` for
/// `g = to_pm1 ∘ f`. Costs two quantum queries.
pub fn gl_operator_c(
    n: usize,
    f: &(impl Fn(u64) -> bool + ?Sized),
    counter: &mut QueryCounter,
) -> Result<StateVector, SimError> {
    gl_operator_c_with_fault(n, f, counter, GateFault::None)
}

pub fn gl_operator_c_with_fault(
    n: usize,
    f: &(impl Fn(u64) -> bool + ?Sized),
    counter: &mut QueryCounter,
    fault: GateFault,
) -> Result<StateVector, SimError> {
    let mut state = StateVector::new(n)?;
    apply_c(&mut state, f, counter, fault);
    state.check_norm()?;
    Ok(state)
}

/// One amplification iterate `-C U_0 C^dagger U_EQ`; four quantum queries.
pub fn amplification_step(
    state: &mut StateVector,
    f: &(impl Fn(u64) -> bool + ?Sized),
    predicate: &(impl Fn(ParityIndex) -> bool + ?Sized),
    counter: &mut QueryCounter,
) {
    state.apply_ueq(predicate);
    apply_c_dagger(state, f, counter, GateFault::None);
    state.apply_u0_i();
    apply_c(state, f, counter, GateFault::None);
    state.negate();
}

/// `(-C U_0 C^dagger U_EQ)^k C |0>`; exactly `2(2k+1)` quantum queries.
pub fn amplify(
    n: usize,
    f: &(impl Fn(u64) -> bool + ?Sized),
    predicate: &(impl Fn(ParityIndex) -> bool + ?Sized),
    k: usize,
    counter: &mut QueryCounter,
) -> Result<StateVector, SimError> {
    let mut state = gl_operator_c(n, f, counter)?;
    for _ in 0..k {
        amplification_step(&mut state, f, predicate, counter);
    }
    state.check_norm()?;
    Ok(state)
}

/// Probability mass that `dist` places on outcomes satisfying `predicate`.
pub fn marked_mass(dist: &[f64], predicate: impl Fn(ParityIndex) -> bool) -> f64 {
    dist.iter()
        .enumerate()
        .filter(|(a, _)| predicate(ParityIndex(*a as u64)))
        .map(|(_, p)| p)
        .sum()
}

/// `sin^2((2k+1) asin(sqrt(p0)))`.
pub fn amplification_law(p0: f64, k: usize) -> f64 {
    let angle = p0.clamp(0.0, 1.0).sqrt().asin();
    ((2 * k + 1) as f64 * angle).sin().powi(2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boolean_fn::{chi, wht, RealTable};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_state(n: usize, rng: &mut ChaCha8Rng) -> StateVector {
        let mut amps: Vec<Complex64> = (0..1 << (n + 2))
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let norm = amps.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        amps.iter_mut().for_each(|c| *c /= norm);
        StateVector::from_amplitudes(n, amps).unwrap()
    }

    fn close(a: &StateVector, b: &StateVector, tol: f64) -> bool {
        a.amplitudes()
            .iter()
            .zip(b.amplitudes())
            .all(|(x, y)| (x - y).norm() < tol)
    }

    fn noisy_parity(n: usize, b: u64, flips: usize, seed: u64) -> Vec<bool> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut table: Vec<bool> = (0..1u64 << n)
            .map(|x| chi(ParityIndex(b), x) == -1)
            .collect();
        for x in rand::seq::index::sample(&mut rng, 1 << n, flips) {
            table[x] = !table[x];
        }
        table
    }

    #[test]
    fn init_state_basics() {
        let s = StateVector::new(1).unwrap();
        assert_eq!(s.amplitudes()[0], Complex64::new(1.0, 0.0));
        assert!(s.amplitudes()[1..].iter().all(|c| c.norm() == 0.0));
        assert_eq!(s.norm(), 1.0);
        assert_eq!(StateVector::new(3).unwrap().dim(), 32);
        assert!(matches!(StateVector::new(0), Err(SimError::EmptyRegister(0))));
        assert!(StateVector::new(200).is_err());
    }

    #[test]
    fn walsh_uniform_and_involution() {
        let mut s = StateVector::new(4).unwrap();
        s.apply_walsh_i();
        for i in 0..16 {
            assert!((s.amplitude(i, 0, 0).re - 0.25).abs() < 1e-15);
        }
        assert!((s.norm() - 1.0).abs() < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let psi = random_state(3, &mut rng);
        let mut twice = psi.clone();
        twice.apply_walsh_i();
        twice.apply_walsh_i();
        assert!(close(&psi, &twice, 1e-12));
    }

    #[test]
    fn walsh_matches_dense_matrix() {
        let n = 3;
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let psi = random_state(n, &mut rng);
        let mut fast = psi.clone();
        fast.apply_walsh_i();
        // Dense (H^{⊗3} ⊗ I_4) product.
        let dim: usize = 1 << (n + 2);
        let norm = (1 << n) as f64;
        for row in 0..dim {
            let mut acc = Complex64::new(0.0, 0.0);
            for col in 0..dim {
                if row & 3 != col & 3 {
                    continue;
                }
                let (i, j) = (row >> 2, col >> 2);
                let sign = if (i & j).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
                acc += psi.amplitudes()[col] * sign / norm.sqrt();
            }
            assert!((acc - fast.amplitudes()[row]).norm() < 1e-12);
        }
    }

    #[test]
    fn x_and_cz_gates() {
        let mut s = StateVector::new(2).unwrap();
        s.apply_x_b();
        assert_eq!(s.amplitude(0, 0, 1), Complex64::new(1.0, 0.0));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let psi = random_state(2, &mut rng);
        let mut z = psi.clone();
        z.apply_cz_a_b();
        for i in 0..4u64 {
            for a in 0..2u8 {
                for b in 0..2u8 {
                    let want = if a == 1 && b == 1 { -psi.amplitude(i, a, b) } else { psi.amplitude(i, a, b) };
                    assert_eq!(z.amplitude(i, a, b), want);
                }
            }
        }
        z.apply_cz_a_b();
        assert_eq!(z, psi);
    }

    #[test]
    fn u0_flips_only_zero_register() {
        let mut s = StateVector::new(3).unwrap();
        s.apply_u0_i();
        assert_eq!(s.amplitude(0, 0, 0), Complex64::new(-1.0, 0.0));
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let psi = random_state(3, &mut rng);
        let mut t = psi.clone();
        t.apply_u0_i();
        assert!((t.norm() - 1.0).abs() < 1e-12);
        for i in 1..8u64 {
            assert_eq!(t.amplitude(i, 1, 0), psi.amplitude(i, 1, 0));
        }
        t.apply_u0_i();
        assert_eq!(t, psi);
    }

    #[test]
    fn umq_properties() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let psi = random_state(3, &mut rng);
        let mut counter = QueryCounter::default();
        let mut s = psi.clone();
        s.apply_umq(&|_| false, &mut counter);
        assert_eq!(s, psi);
        let f = |x: u64| x % 3 == 1;
        s.apply_umq(&f, &mut counter);
        s.apply_umq(&f, &mut counter);
        assert_eq!(s, psi);
        assert_eq!(counter.quantum, 3);
    }

    #[test]
    fn umq_marginal_matches_enumeration() {
        let n = 4;
        let f = |x: u64| (x * 7 + 3) % 5 < 2;
        let mut s = StateVector::new(n).unwrap();
        s.apply_walsh_i();
        s.apply_umq(&f, &mut QueryCounter::default());
        let marginal: f64 = (0..16u64).map(|i| s.amplitude(i, 1, 0).norm_sqr()).sum();
        let direct = (0..16u64).filter(|&x| f(x)).count() as f64 / 16.0;
        assert!((marginal - direct).abs() < 1e-12);
    }

    #[test]
    fn ueq_matches_dense_diagonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let psi = random_state(3, &mut rng);
        let mut s = psi.clone();
        s.apply_ueq(&|_| false);
        assert_eq!(s, psi);
        let target = ParityIndex(5);
        s.apply_ueq(&|a| a == target);
        for idx in 0..psi.dim() {
            let diag = if (idx >> 2) as u64 == target.0 { -1.0 } else { 1.0 };
            assert_eq!(s.amplitudes()[idx], psi.amplitudes()[idx] * diag);
        }
        s.apply_ueq(&|a| a == target);
        assert_eq!(s, psi);
    }

    #[test]
    fn exact_parity_measures_deterministically() {
        let b = 0b1101u64;
        let f = |x: u64| chi(ParityIndex(b), x) == -1;
        let mut counter = QueryCounter::default();
        let s = gl_operator_c(4, &f, &mut counter).unwrap();
        assert_eq!(counter.quantum, 2);
        let dist = s.distribution_i();
        assert!((dist[b as usize] - 1.0).abs() < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(s.measure_i(&mut rng), ParityIndex(b));
    }

    #[test]
    fn planted_parity_four_gamma_squared() {
        let (n, b, gamma) = (8usize, 0x3cu64, 0.125);
        let flips = ((0.5 - gamma) * 256.0) as usize;
        let table = noisy_parity(n, b, flips, 17);
        let s = gl_operator_c(n, &|x| table[x as usize], &mut QueryCounter::default()).unwrap();
        let p = s.distribution_i()[b as usize];
        assert!((p - 4.0 * gamma * gamma).abs() < 1e-10);
    }

    #[test]
    fn distribution_equals_squared_spectrum() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for n in [1usize, 3, 6, 10] {
            let table: Vec<bool> = (0..1 << n).map(|_| rng.gen_bool(0.3)).collect();
            let spectrum = wht(&RealTable::from_bits(&table));
            let s = gl_operator_c(n, &|x| table[x as usize], &mut QueryCounter::default()).unwrap();
            for (p, c) in s.distribution_i().iter().zip(spectrum.values()) {
                assert!((p - c * c).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn c_is_unitary_on_random_states() {
        let n = 5;
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let table: Vec<bool> = (0..1 << n).map(|_| rng.gen_bool(0.5)).collect();
        let f = |x: u64| table[x as usize];
        let psi = random_state(n, &mut rng);
        let phi = random_state(n, &mut rng);
        let before = psi.inner(&phi);
        let (mut cpsi, mut cphi) = (psi.clone(), phi.clone());
        let mut counter = QueryCounter::default();
        apply_c(&mut cpsi, &f, &mut counter, GateFault::None);
        apply_c(&mut cphi, &f, &mut counter, GateFault::None);
        assert!((cpsi.inner(&cphi) - before).norm() < 1e-10);
        apply_c_dagger(&mut cpsi, &f, &mut counter, GateFault::None);
        assert!(close(&cpsi, &psi, 1e-12));
    }

    #[test]
    fn amplify_k0_is_c() {
        let table = noisy_parity(6, 9, 20, 1);
        let f = |x: u64| table[x as usize];
        let mut c1 = QueryCounter::default();
        let mut c2 = QueryCounter::default();
        let a = amplify(6, &f, &|p: ParityIndex| p.0 == 9, 0, &mut c1).unwrap();
        let b = gl_operator_c(6, &f, &mut c2).unwrap();
        assert_eq!(a, b);
        assert_eq!(c1, c2);
    }

    #[test]
    fn amplify_follows_sine_law() {
        let n = 8;
        let b = 0x71u64;
        let table = noisy_parity(n, b, 100, 2);
        let f = |x: u64| table[x as usize];
        let spectrum = wht(&RealTable::from_bits(&table));
        let p0 = spectrum.values()[b as usize].powi(2);
        for k in 0..8 {
            let mut counter = QueryCounter::default();
            let s = amplify(n, &f, &|a: ParityIndex| a.0 == b, k, &mut counter).unwrap();
            assert_eq!(counter.quantum, 2 * (2 * k as u64 + 1));
            let p = s.distribution_i()[b as usize];
            assert!((p - amplification_law(p0, k)).abs() < 1e-9, "k = {k}");
        }
    }

    #[test]
    fn empty_marked_set_stays_empty() {
        // f = chi_3 exactly: every outcome other than 3 has zero mass.
        let f = |x: u64| chi(ParityIndex(3), x) == -1;
        for k in 0..5 {
            let s = amplify(4, &f, &|a: ParityIndex| a.0 == 6, k, &mut QueryCounter::default()).unwrap();
            assert!(s.distribution_i()[6] < 1e-20);
        }
    }

    #[test]
    fn measurement_frequencies_within_three_sigma() {
        let n = 3;
        let table = [true, false, false, true, true, true, false, false];
        let s = gl_operator_c(n, &|x| table[x as usize], &mut QueryCounter::default()).unwrap();
        let dist = s.distribution_i();
        assert!((dist.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let draws = 100_000usize;
        let mut counts = [0usize; 8];
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..draws {
            counts[s.measure_i(&mut rng).0 as usize] += 1;
        }
        for (c, p) in counts.iter().zip(&dist) {
            let sigma = (draws as f64 * p * (1.0 - p)).sqrt();
            assert!((*c as f64 - draws as f64 * p).abs() <= 3.0 * sigma + 1e-9);
        }
    }

    #[test]
    fn uniform_distribution_after_walsh() {
        let mut s = StateVector::new(5).unwrap();
        s.apply_walsh_i();
        assert!(s.distribution_i().iter().all(|p| (p - 1.0 / 32.0).abs() < 1e-15));
    }

    #[test]
    fn dump_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let psi = random_state(3, &mut rng);
        let mut buf = Vec::new();
        psi.write_dump(&mut buf).unwrap();
        assert_eq!(buf.len(), 16 + 32 * 16);
        assert_eq!(&buf[..8], DUMP_MAGIC);
        assert_eq!(StateVector::read_dump(&buf[..]).unwrap(), psi);
        buf[0] = b'X';
        assert!(StateVector::read_dump(&buf[..]).is_err());
    }

    #[test]
    fn norm_drift_is_reported() {
        let mut amps = vec![Complex64::new(0.0, 0.0); 8];
        amps[0] = Complex64::new(1.1, 0.0);
        let s = StateVector::from_amplitudes(1, amps).unwrap();
        assert!(matches!(s.check_norm(), Err(SimError::NormDrift(_))));
    }
}
