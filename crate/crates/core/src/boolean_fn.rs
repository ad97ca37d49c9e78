//! Boolean functions on the n-cube: DNF syntax and evaluation, parity
//! characters, the Walsh–Hadamard transform and instance generators.
//!
//! Conventions used throughout the crate:
//!
//! * an assignment `x` is a `u64` whose bit `i` is the value of variable `x_i`;
//! * Boolean outputs are bits, and Fourier analysis is done on the ±1 form
//!   obtained through [`to_pm1`] (bit 0 maps to +1, bit 1 maps to −1), so
//!   that the characters are `chi(A, x) = (-1)^{popcount(A & x)}`;
//! * truth tables are dense vectors of length `2^n` indexed by `x`.

use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample as sample_indices;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default cap on the number of variables for dense tables.
pub const DEFAULT_N_CAP: usize = 20;

/// Environment variable overriding [`DEFAULT_N_CAP`].
pub const N_CAP_ENV: &str = "QHS_LAB_CAP";

/// Current cap on `n`, honouring `QHS_LAB_CAP` when it parses.
pub fn n_cap() -> usize {
    std::env::var(N_CAP_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|v| (1..=40).contains(v))
        .unwrap_or(DEFAULT_N_CAP)
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BoolFnError {
    #[error("table length {0} is not a power of two")]
    NotPowerOfTwo(usize),
    #[error("threshold must be positive, got {0}")]
    NonPositiveThreshold(f64),
    #[error("term length {term_len} exceeds variable count {n}")]
    TermTooLong { term_len: usize, n: usize },
    #[error("variable index {var} out of range for n = {n}")]
    VariableOutOfRange { var: usize, n: usize },
    #[error("term {term} mentions variable {var} twice")]
    RepeatedVariable { term: usize, var: usize },
    #[error("n = {n} exceeds the dense-table cap {cap}")]
    TooManyVariables { n: usize, cap: usize },
    #[error("malformed word symbol `{0}`")]
    MalformedSymbol(String),
    #[error("word has {got} symbols, expected 2^t = {expected}")]
    WordLength { got: usize, expected: usize },
}

/// Maps an oracle bit to the ±1 convention: 0 → +1, 1 → −1.
#[inline]
pub fn to_pm1(bit: bool) -> i8 {
    if bit {
        -1
    } else {
        1
    }
}

/// Inverse of [`to_pm1`]. Any negative value maps to bit 1.
#[inline]
pub fn from_pm1(v: f64) -> bool {
    v < 0.0
}

/// Index `A` of the character `chi_A`.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct ParityIndex(pub u64);

impl ParityIndex {
    pub fn bits(self) -> u64 {
        self.0
    }

    /// `chi_A(x)` as ±1.
    #[inline]
    pub fn chi(self, x: u64) -> i8 {
        chi(self, x)
    }
}

impl fmt::Display for ParityIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// `(-1)^{popcount(A & x)}`.
#[inline]
pub fn chi(a: ParityIndex, x: u64) -> i8 {
    if (a.0 & x).count_ones() & 1 == 0 {
        1
    } else {
        -1
    }
}

/// A literal `x_var` or its negation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(from = "(usize, bool)", into = "(usize, bool)")]
pub struct Literal {
    pub var: usize,
    pub negated: bool,
}

impl Literal {
    pub fn pos(var: usize) -> Self {
        Literal { var, negated: false }
    }

    pub fn neg(var: usize) -> Self {
        Literal { var, negated: true }
    }

    #[inline]
    pub fn satisfied_by(self, x: u64) -> bool {
        ((x >> self.var) & 1 == 1) != self.negated
    }
}

impl From<(usize, bool)> for Literal {
    fn from((var, negated): (usize, bool)) -> Self {
        Literal { var, negated }
    }
}

impl From<Literal> for (usize, bool) {
    fn from(l: Literal) -> Self {
        (l.var, l.negated)
    }
}

/// A disjunction of conjunctive terms over `n` variables. The empty formula
/// is the constant false function.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawDnf")]
pub struct DnfFormula {
    n: usize,
    terms: Vec<Vec<Literal>>,
}

#[derive(Deserialize)]
struct RawDnf {
    n: usize,
    terms: Vec<Vec<Literal>>,
}

impl TryFrom<RawDnf> for DnfFormula {
    type Error = BoolFnError;

    fn try_from(raw: RawDnf) -> Result<Self, Self::Error> {
        DnfFormula::new(raw.n, raw.terms)
    }
}

impl DnfFormula {
    pub fn new(n: usize, terms: Vec<Vec<Literal>>) -> Result<Self, BoolFnError> {
        if n > 63 {
            return Err(BoolFnError::TooManyVariables { n, cap: 63 });
        }
        for (ti, term) in terms.iter().enumerate() {
            let mut seen = 0u64;
            for lit in term {
                if lit.var >= n {
                    return Err(BoolFnError::VariableOutOfRange { var: lit.var, n });
                }
                if seen & (1 << lit.var) != 0 {
                    return Err(BoolFnError::RepeatedVariable {
                        term: ti,
                        var: lit.var,
                    });
                }
                seen |= 1 << lit.var;
            }
        }
        Ok(DnfFormula { n, terms })
    }

    /// The constant false formula.
    pub fn empty(n: usize) -> Self {
        DnfFormula {
            n,
            terms: Vec::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> &[Vec<Literal>] {
        &self.terms
    }

    /// Number of terms `s`.
    pub fn size(&self) -> usize {
        self.terms.len()
    }

    /// Evaluates the formula on assignment `x`, returning the output bit.
    pub fn eval(&self, x: u64) -> bool {
        self.terms
            .iter()
            .any(|term| term.iter().all(|lit| lit.satisfied_by(x)))
    }

    /// Dense truth table in bit form; requires `n` within the cap.
    pub fn truth_table(&self) -> Result<Vec<bool>, BoolFnError> {
        check_cap(self.n)?;
        Ok((0..1u64 << self.n).map(|x| self.eval(x)).collect())
    }

    /// Dense ±1 table of the formula.
    pub fn pm1_table(&self) -> Result<RealTable, BoolFnError> {
        let bits = self.truth_table()?;
        Ok(RealTable::from_bits(&bits))
    }
}

impl fmt::Display for DnfFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "FALSE");
        }
        for (i, term) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " | ")?;
            }
            if term.is_empty() {
                write!(f, "TRUE")?;
            }
            for (j, lit) in term.iter().enumerate() {
                if j > 0 {
                    write!(f, "&")?;
                }
                if lit.negated {
                    write!(f, "~")?;
                }
                write!(f, "x{}", lit.var)?;
            }
        }
        Ok(())
    }
}

/// Free-function form of [`DnfFormula::eval`].
pub fn eval_dnf(formula: &DnfFormula, x: u64) -> bool {
    formula.eval(x)
}

pub(crate) fn check_cap(n: usize) -> Result<(), BoolFnError> {
    let cap = n_cap();
    if n > cap {
        Err(BoolFnError::TooManyVariables { n, cap })
    } else {
        Ok(())
    }
}

/// Real-valued function on `{0,1}^n` stored densely.
#[derive(Debug, Clone, PartialEq)]
pub struct RealTable {
    n: usize,
    values: Vec<f64>,
}

impl RealTable {
    pub fn new(values: Vec<f64>) -> Result<Self, BoolFnError> {
        let len = values.len();
        if len == 0 || !len.is_power_of_two() {
            return Err(BoolFnError::NotPowerOfTwo(len));
        }
        Ok(RealTable {
            n: len.trailing_zeros() as usize,
            values,
        })
    }

    pub fn from_fn(n: usize, f: impl Fn(u64) -> f64) -> Self {
        RealTable {
            n,
            values: (0..1u64 << n).map(f).collect(),
        }
    }

    /// ±1 table of a bit-valued truth table.
    pub fn from_bits(bits: &[bool]) -> Self {
        assert!(bits.len().is_power_of_two(), "truth table length");
        RealTable {
            n: bits.len().trailing_zeros() as usize,
            values: bits.iter().map(|&b| f64::from(to_pm1(b))).collect(),
        }
    }

    /// The character `chi_A` as a table.
    pub fn character(n: usize, a: ParityIndex) -> Self {
        RealTable::from_fn(n, |x| f64::from(chi(a, x)))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, x: u64) -> f64 {
        self.values[x as usize]
    }

    /// `E_{x ~ U_n}[g(x)^2]`.
    pub fn mean_square(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>() / self.values.len() as f64
    }

    /// Pointwise product.
    pub fn mul(&self, other: &RealTable) -> RealTable {
        assert_eq!(self.n, other.n);
        RealTable {
            n: self.n,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a * b)
                .collect(),
        }
    }
}

/// Unnormalized in-place fast Walsh–Hadamard butterfly.
///
/// After the call `data[A] = sum_x data_in[x] * chi_A(x)`.
pub fn fwht_in_place(data: &mut [f64]) -> Result<(), BoolFnError> {
    let len = data.len();
    if len == 0 || !len.is_power_of_two() {
        return Err(BoolFnError::NotPowerOfTwo(len));
    }
    let mut h = 1;
    while h < len {
        for block in data.chunks_exact_mut(2 * h) {
            let (lo, hi) = block.split_at_mut(h);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (u, v) = (*a, *b);
                *a = u + v;
                *b = u - v;
            }
        }
        h <<= 1;
    }
    Ok(())
}

/// Fourier coefficients `ĝ(A) = 2^-n sum_x g(x) chi_A(x)`.
pub fn wht(table: &RealTable) -> RealTable {
    let mut values = table.values.clone();
    fwht_in_place(&mut values).expect("RealTable length is a power of two");
    let scale = 1.0 / values.len() as f64;
    values.iter_mut().for_each(|v| *v *= scale);
    RealTable {
        n: table.n,
        values,
    }
}

/// Normalized transform of a raw slice.
pub fn wht_slice(values: &[f64]) -> Result<Vec<f64>, BoolFnError> {
    let mut out = values.to_vec();
    fwht_in_place(&mut out)?;
    let scale = 1.0 / out.len() as f64;
    out.iter_mut().for_each(|v| *v *= scale);
    Ok(out)
}

/// Descending magnitude, then ascending index.
pub(crate) fn coefficient_order(a: (u64, f64), b: (u64, f64)) -> std::cmp::Ordering {
    b.1.abs()
        .partial_cmp(&a.1.abs())
        .unwrap_or(std::cmp::Ordering::Equal)
        .then(a.0.cmp(&b.0))
}

/// Index of the largest-magnitude entry under the crate's tie rule.
pub(crate) fn argmax_abs(spectrum: &[f64]) -> (ParityIndex, f64) {
    let mut best = (0u64, spectrum[0]);
    for (i, &c) in spectrum.iter().enumerate().skip(1) {
        if coefficient_order((i as u64, c), best).is_lt() {
            best = (i as u64, c);
        }
    }
    (ParityIndex(best.0), best.1)
}

/// All `A` with `|ĝ(A)| >= theta`, strongest first.
pub fn heavy_coeffs(g: &RealTable, theta: f64) -> Result<Vec<(ParityIndex, f64)>, BoolFnError> {
    if !(theta > 0.0) {
        return Err(BoolFnError::NonPositiveThreshold(theta));
    }
    let spectrum = wht(g);
    let mut out: Vec<(u64, f64)> = spectrum
        .values()
        .iter()
        .enumerate()
        .filter(|(_, c)| c.abs() >= theta)
        .map(|(a, &c)| (a as u64, c))
        .collect();
    out.sort_by(|&a, &b| coefficient_order(a, b));
    Ok(out.into_iter().map(|(a, c)| (ParityIndex(a), c)).collect())
}

/// `argmax_A |f̂(A)|` with the same tie rule as [`heavy_coeffs`].
pub fn best_parity(f: &RealTable) -> (ParityIndex, f64) {
    argmax_abs(wht(f).values())
}

/// Random DNF with exactly `s` terms of `term_len` distinct variables each;
/// literal polarities are fair coins.
pub fn gen_random_dnf(
    n: usize,
    s: usize,
    term_len: usize,
    seed: u64,
) -> Result<DnfFormula, BoolFnError> {
    if term_len > n {
        return Err(BoolFnError::TermTooLong { term_len, n });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let terms = (0..s)
        .map(|_| {
            let mut vars = sample_indices(&mut rng, n, term_len).into_vec();
            vars.sort_unstable();
            vars.into_iter()
                .map(|var| Literal {
                    var,
                    negated: rng.gen_bool(0.5),
                })
                .collect()
        })
        .collect();
    DnfFormula::new(n, terms)
}

/// Letter of the alphabet `{0, 1, y_1, ~y_1, ..., y_u, ~y_u}` (1-based `y`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WordSymbol {
    Zero,
    One,
    Var(usize),
    NegVar(usize),
}

impl FromStr for WordSymbol {
    type Err = BoolFnError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        let bad = || BoolFnError::MalformedSymbol(s.to_string());
        match t {
            "0" => return Ok(WordSymbol::Zero),
            "1" => return Ok(WordSymbol::One),
            _ => {}
        }
        let (negated, rest) = match t.strip_prefix(['~', '!']) {
            Some(r) => (true, r),
            None => (false, t),
        };
        let idx: usize = rest
            .strip_prefix('y')
            .ok_or_else(bad)?
            .parse()
            .map_err(|_| bad())?;
        if idx == 0 {
            return Err(bad());
        }
        Ok(if negated {
            WordSymbol::NegVar(idx)
        } else {
            WordSymbol::Var(idx)
        })
    }
}

impl fmt::Display for WordSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WordSymbol::Zero => write!(f, "0"),
            WordSymbol::One => write!(f, "1"),
            WordSymbol::Var(i) => write!(f, "y{i}"),
            WordSymbol::NegVar(i) => write!(f, "~y{i}"),
        }
    }
}

/// Parses a comma or whitespace separated word.
pub fn parse_word(s: &str) -> Result<Vec<WordSymbol>, BoolFnError> {
    s.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|tok| !tok.is_empty())
        .map(str::parse)
        .collect()
}

/// Builds `OR_{a in {0,1}^t} x^a y_a` over `n = t + u` variables.
///
/// Variables `x_1..x_t` are indices `0..t`, `y_1..y_u` are `t..t+u`. Position
/// `a` of the word is the integer whose bit `i` is `a_{i+1}`; `x_i^0 = x_i`
/// and `x_i^1 = ~x_i`. Positions holding the constant 0 contribute no term.
pub fn gen_lower_bound_family(
    t: usize,
    u: usize,
    word: &[WordSymbol],
) -> Result<DnfFormula, BoolFnError> {
    let expected = 1usize << t;
    if word.len() != expected {
        return Err(BoolFnError::WordLength {
            got: word.len(),
            expected,
        });
    }
    let n = t + u;
    let mut terms = Vec::new();
    for (a, sym) in word.iter().enumerate() {
        let mut term: Vec<Literal> = (0..t)
            .map(|i| Literal {
                var: i,
                negated: (a >> i) & 1 == 1,
            })
            .collect();
        match *sym {
            WordSymbol::Zero => continue,
            WordSymbol::One => {}
            WordSymbol::Var(j) | WordSymbol::NegVar(j) => {
                if j > u {
                    return Err(BoolFnError::MalformedSymbol(sym.to_string()));
                }
                term.push(Literal {
                    var: t + j - 1,
                    negated: matches!(sym, WordSymbol::NegVar(_)),
                });
            }
        }
        terms.push(term);
    }
    DnfFormula::new(n, terms)
}
