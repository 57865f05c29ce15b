//! Finite-alphabet Markov shifts, cylinder words and cylinder functions.
//!
//! Symbols are indices `0..N`. Words are admissible when every consecutive
//! transition has positive probability. Cylinder functions of order `n` are
//! stored on the admissible `n`-words; evaluating on a longer word reads
//! its first `n` symbols.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg;

/// Tolerance on row sums accepted by [`MarkovShift::new`].
pub const ROW_SUM_TOL: f64 = 1e-9;
/// Default cap on `alphabet_size^order` for refined chains.
pub const DEFAULT_REFINEMENT_CAP: usize = 4096;

/// A finite admissible word over the shift alphabet.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Word(Vec<usize>);

impl Word {
    pub fn new(symbols: Vec<usize>) -> Result<Self> {
        if symbols.is_empty() {
            return Err(Error::InvalidInput("words must have length >= 1".into()));
        }
        Ok(Word(symbols))
    }

    pub fn symbols(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `true` when `self` is a prefix of `other`, i.e. `[other] ⊂ [self]`.
    pub fn is_prefix_of(&self, other: &[usize]) -> bool {
        other.len() >= self.0.len() && other[..self.0.len()] == self.0[..]
    }

    pub fn extended(&self, symbol: usize) -> Word {
        let mut s = self.0.clone();
        s.push(symbol);
        Word(s)
    }
}

impl From<&[usize]> for Word {
    fn from(s: &[usize]) -> Self {
        Word(s.to_vec())
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.0 {
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

/// Irreducible row-stochastic Markov shift with its stationary measure.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovShift {
    transitions: DMatrix<f64>,
    stationary: Vec<f64>,
    labels: Vec<String>,
}

impl MarkovShift {
    /// Validate `rows` and compute the stationary vector.
    pub fn new(rows: &[Vec<f64>]) -> Result<Self> {
        let labels = (0..rows.len()).map(|i| i.to_string()).collect();
        Self::with_labels(rows, labels)
    }

    pub fn with_labels(rows: &[Vec<f64>], labels: Vec<String>) -> Result<Self> {
        let n = rows.len();
        if n == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(Error::NotSquare);
        }
        if labels.len() != n {
            return Err(Error::InvalidInput(format!(
                "{} labels for an alphabet of size {n}",
                labels.len()
            )));
        }
        for (i, row) in rows.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::InvalidProbability {
                        row: i,
                        col: j,
                        value: v,
                    });
                }
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::NotRowStochastic { row: i, sum });
            }
        }
        let transitions = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
        if !linalg::is_irreducible(&transitions) {
            return Err(Error::NotIrreducible);
        }
        let stationary = linalg::stationary_vector(&transitions);
        Ok(MarkovShift {
            transitions,
            stationary,
            labels,
        })
    }

    /// Full shift on `n` symbols with uniform transitions.
    pub fn full(n: usize) -> Self {
        let rows = vec![vec![1.0 / n as f64; n]; n];
        Self::new(&rows).expect("uniform full shift is valid")
    }

    pub fn alphabet_size(&self) -> usize {
        self.stationary.len()
    }

    pub fn transitions(&self) -> &DMatrix<f64> {
        &self.transitions
    }

    pub fn p(&self, from: usize, to: usize) -> f64 {
        self.transitions[(from, to)]
    }

    pub fn stationary(&self) -> &[f64] {
        &self.stationary
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn successors(&self, a: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.alphabet_size()).filter(move |&b| self.p(a, b) > 0.0)
    }

    pub fn is_admissible(&self, w: &[usize]) -> bool {
        !w.is_empty()
            && w.iter().all(|&s| s < self.alphabet_size())
            && w.windows(2).all(|p| self.p(p[0], p[1]) > 0.0)
    }

    pub(crate) fn check_admissible(&self, w: &[usize]) -> Result<()> {
        if self.is_admissible(w) {
            Ok(())
        } else {
            Err(Error::InadmissibleWord { word: w.to_vec() })
        }
    }

    /// All admissible words of length `n` in lexicographic order.
    pub fn admissible_words(&self, n: usize) -> Vec<Vec<usize>> {
        let mut words: Vec<Vec<usize>> = (0..self.alphabet_size()).map(|a| vec![a]).collect();
        for _ in 1..n {
            let mut next = Vec::new();
            for w in &words {
                let last = *w.last().expect("non-empty word");
                for b in self.successors(last) {
                    let mut e = w.clone();
                    e.push(b);
                    next.push(e);
                }
            }
            words = next;
        }
        words
    }

    /// Probability of the product of transitions along `w`.
    pub fn path_weight(&self, w: &[usize]) -> f64 {
        w.windows(2).map(|p| self.p(p[0], p[1])).product()
    }

    /// Markov measure of the cylinder `[w]`.
    pub fn cylinder_measure(&self, w: &Word) -> Result<f64> {
        let s = w.symbols();
        self.check_admissible(s)?;
        Ok(self.stationary[s[0]] * self.path_weight(s))
    }

    /// Whether the final symbol of `w` can be swapped for another one
    /// while keeping the word admissible.
    pub fn is_reduced(&self, w: &Word) -> Result<bool> {
        let s = w.symbols();
        self.check_admissible(s)?;
        let last = s[s.len() - 1];
        if s.len() == 1 {
            return Ok(self.alphabet_size() > 1);
        }
        let prev = s[s.len() - 2];
        Ok(self.successors(prev).any(|b| b != last))
    }

    pub fn parse_word(&self, text: &str) -> Result<Word> {
        parse_word(&self.labels, text).map_err(Error::InvalidInput)
    }

    /// Order-`refine_to` cylinder chain with rows of cylinders inside `[hole]` zeroed.
    pub fn survivor_matrix(&self, hole: &Word, refine_to: usize) -> Result<SurvivorMatrix> {
        self.survivor_matrix_with_cap(Some(hole), refine_to, DEFAULT_REFINEMENT_CAP)
    }

    /// Like [`survivor_matrix`](Self::survivor_matrix) with an explicit
    /// refinement cap; `hole = None` gives the closed chain.
    pub fn survivor_matrix_with_cap(
        &self,
        hole: Option<&Word>,
        refine_to: usize,
        cap: usize,
    ) -> Result<SurvivorMatrix> {
        let hole_len = hole.map_or(1, |h| h.len());
        if let Some(h) = hole {
            self.check_admissible(h.symbols())?;
        }
        if refine_to < hole_len.max(1) {
            return Err(Error::InvalidInput(format!(
                "refinement order {refine_to} is below the hole length {hole_len}"
            )));
        }
        check_refinement(self.alphabet_size(), refine_to, cap)?;
        let words = self.admissible_words(refine_to);
        let index: BTreeMap<&[usize], usize> =
            words.iter().enumerate().map(|(i, w)| (w.as_slice(), i)).collect();
        let k = words.len();
        let mut matrix = DMatrix::zeros(k, k);
        let mut in_hole = vec![false; k];
        for (i, w) in words.iter().enumerate() {
            if hole.is_some_and(|h| h.is_prefix_of(w)) {
                in_hole[i] = true;
                continue;
            }
            let last = w[refine_to - 1];
            for b in self.successors(last) {
                let mut next = w[1..].to_vec();
                next.push(b);
                matrix[(i, index[next.as_slice()])] = self.p(last, b);
            }
        }
        let initial = words
            .iter()
            .map(|w| self.stationary[w[0]] * self.path_weight(w))
            .collect();
        Ok(SurvivorMatrix {
            order: refine_to,
            words,
            matrix,
            in_hole,
            initial,
        })
    }

    /// Exact measure of the points whose first `n` symbols contain no
    /// occurrence of the hole word.
    pub fn survival_measure_exact(&self, hole: &Word, n: usize) -> Result<f64> {
        let sm = self.survivor_matrix(hole, hole.len())?;
        let steps = (n + 1).saturating_sub(hole.len());
        Ok(sm.survival(steps))
    }

    /// Base-system escape rate `-log r` of the survivor matrix.
    pub fn escape_rate(&self, hole: &Word) -> Result<f64> {
        let sm = self.survivor_matrix(hole, hole.len())?;
        let r = linalg::spectral_radius_nonnegative(&sm.matrix)?;
        Ok(if r > 0.0 { -r.ln() } else { f64::INFINITY })
    }
}

pub(crate) fn check_refinement(alphabet: usize, order: usize, cap: usize) -> Result<()> {
    let size = (alphabet as f64).powi(order as i32);
    if size > cap as f64 {
        return Err(Error::RefinementTooLarge {
            order,
            size: size.min(usize::MAX as f64) as usize,
            cap,
        });
    }
    Ok(())
}

/// Split `text` into symbols by greedy longest match against `labels`.
pub fn parse_word(labels: &[String], text: &str) -> std::result::Result<Word, String> {
    let mut rest = text.trim();
    let mut out = Vec::new();
    while !rest.is_empty() {
        let best = labels
            .iter()
            .enumerate()
            .filter(|(_, l)| !l.is_empty() && rest.starts_with(l.as_str()))
            .max_by_key(|(_, l)| l.len());
        match best {
            Some((i, l)) => {
                out.push(i);
                rest = &rest[l.len()..];
            }
            None => return Err(format!("unknown symbol at '{rest}' in word '{text}'")),
        }
    }
    Word::new(out).map_err(|e| e.to_string())
}

/// Substochastic chain on refined cylinders.
#[derive(Debug, Clone)]
pub struct SurvivorMatrix {
    pub order: usize,
    pub words: Vec<Vec<usize>>,
    pub matrix: DMatrix<f64>,
    pub in_hole: Vec<bool>,
    /// Cylinder measures of the refined words.
    pub initial: Vec<f64>,
}

impl SurvivorMatrix {
    /// `initial · matrix^steps · 1`.
    pub fn survival(&self, steps: usize) -> f64 {
        let mut v = self.initial.clone();
        for _ in 0..steps {
            v = linalg::row_times(&v, &self.matrix);
        }
        v.iter().sum()
    }

    pub fn spectral_radius(&self) -> Result<f64> {
        linalg::spectral_radius_nonnegative(&self.matrix)
    }
}

/// Function constant on cylinders of a fixed order.
#[derive(Debug, Clone, PartialEq)]
pub struct CylinderFunction {
    order: usize,
    values: BTreeMap<Vec<usize>, f64>,
    lattice: Option<f64>,
}

const LATTICE_REL_TOL: f64 = 1e-12;

impl CylinderFunction {
    /// Values must be given for exactly the admissible `order`-words.
    pub fn new(shift: &MarkovShift, order: usize, values: BTreeMap<Vec<usize>, f64>) -> Result<Self> {
        if order == 0 {
            return Err(Error::InvalidInput("cylinder order must be >= 1".into()));
        }
        let words = shift.admissible_words(order);
        if words.len() != values.len() || words.iter().any(|w| !values.contains_key(w)) {
            return Err(Error::InvalidInput(format!(
                "cylinder function of order {order} must define exactly the {} admissible words",
                words.len()
            )));
        }
        if let Some((w, v)) = values.iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite value {v} on {w:?}")));
        }
        Ok(CylinderFunction {
            order,
            values,
            lattice: None,
        })
    }

    pub fn from_fn(shift: &MarkovShift, order: usize, f: impl Fn(&[usize]) -> f64) -> Result<Self> {
        let values = shift
            .admissible_words(order)
            .into_iter()
            .map(|w| {
                let v = f(&w);
                (w, v)
            })
            .collect();
        Self::new(shift, order, values)
    }

    pub fn constant(shift: &MarkovShift, order: usize, c: f64) -> Self {
        Self::from_fn(shift, order, |_| c)
            .expect("constant function is defined on every admissible word")
    }

    /// Declare the values to lie on `λℤ`.
    pub fn with_lattice(mut self, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidInput(format!("lattice {lambda} must be positive")));
        }
        for v in self.values.values() {
            let q = v / lambda;
            if (q - q.round()).abs() > LATTICE_REL_TOL * q.abs().max(1.0) {
                return Err(Error::NonArithmeticCeiling);
            }
        }
        self.lattice = Some(lambda);
        Ok(self)
    }

    /// Constant function with lattice equal to the constant.
    pub fn ones(shift: &MarkovShift) -> Self {
        Self::constant(shift, 1, 1.0).with_lattice(1.0).expect("1 lies on ℤ")
    }

    pub(crate) fn without_lattice(mut self) -> Self {
        self.lattice = None;
        self
    }

    pub(crate) fn replace_values(&mut self, values: BTreeMap<Vec<usize>, f64>) {
        debug_assert!(values.keys().eq(self.values.keys()));
        self.values = values;
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn lattice(&self) -> Option<f64> {
        self.lattice
    }

    pub fn values(&self) -> &BTreeMap<Vec<usize>, f64> {
        &self.values
    }

    /// Value on the cylinder given by the first `order` symbols of `w`.
    pub fn value(&self, w: &[usize]) -> f64 {
        *self
            .values
            .get(&w[..self.order])
            .unwrap_or_else(|| panic!("cylinder function undefined on {:?}", &w[..self.order]))
    }

    pub fn get(&self, w: &[usize]) -> Option<f64> {
        if w.len() < self.order {
            return None;
        }
        self.values.get(&w[..self.order]).copied()
    }

    pub fn inf(&self) -> f64 {
        self.values.values().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn sup(&self) -> f64 {
        self.values.values().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Integer heights `value / λ` for arithmetic functions.
    pub fn heights(&self) -> Result<BTreeMap<Vec<usize>, u64>> {
        let lambda = self.lattice.ok_or(Error::NonArithmeticCeiling)?;
        self.values
            .iter()
            .map(|(w, v)| {
                if *v <= 0.0 {
                    return Err(Error::NonPositiveCeiling {
                        word: w.clone(),
                        value: *v,
                    });
                }
                Ok((w.clone(), (v / lambda).round() as u64))
            })
            .collect()
    }

    /// Same function viewed as constant on cylinders of a higher order.
    pub fn refine(&self, shift: &MarkovShift, order: usize) -> Result<Self> {
        if order < self.order {
            return Err(Error::InvalidInput(format!(
                "cannot refine order {} down to {order}",
                self.order
            )));
        }
        let mut out = Self::from_fn(shift, order, |w| self.value(w))?;
        out.lattice = self.lattice;
        Ok(out)
    }

    /// `λ · self`; the lattice scales along.
    pub fn scaled(&self, lambda: f64) -> Self {
        CylinderFunction {
            order: self.order,
            values: self.values.iter().map(|(w, v)| (w.clone(), v * lambda)).collect(),
            lattice: self.lattice.map(|l| l * lambda),
        }
    }

    /// Pointwise sum. The result has lattice `gcd`-compatible only when both
    /// share the same lattice.
    pub fn sum(&self, shift: &MarkovShift, other: &Self) -> Result<Self> {
        let order = self.order.max(other.order);
        let mut out = Self::from_fn(shift, order, |w| self.value(w) + other.value(w))?;
        if let (Some(a), Some(b)) = (self.lattice, other.lattice) {
            if (a - b).abs() <= LATTICE_REL_TOL * a.max(b) {
                out = out.with_lattice(a)?;
            }
        }
        Ok(out)
    }

    /// `self + χ∘θ − χ`, defined on cylinders of order `max(n, order(χ) + 1)`.
    pub fn plus_coboundary(&self, shift: &MarkovShift, chi: &Self) -> Result<Self> {
        let q = chi.order;
        let order = self.order.max(q + 1);
        let mut out =
            Self::from_fn(shift, order, |w| self.value(w) + chi.value(&w[1..]) - chi.value(w))?;
        if let (Some(a), Some(b)) = (self.lattice, chi.lattice) {
            if (a - b).abs() <= LATTICE_REL_TOL * a.max(b) {
                out = out.with_lattice(a)?;
            }
        }
        Ok(out)
    }

    /// Integral against the stationary Markov measure.
    pub fn integral(&self, shift: &MarkovShift) -> f64 {
        self.values
            .iter()
            .map(|(w, v)| v * shift.stationary()[w[0]] * shift.path_weight(w))
            .sum()
    }
}

/// `Σ_{k<steps} f(w_{k+1}, …, w_{k+n})`.
pub fn birkhoff_sum(shift: &MarkovShift, f: &CylinderFunction, w: &Word, steps: usize) -> Result<f64> {
    let s = w.symbols();
    shift.check_admissible(s)?;
    if steps == 0 {
        return Ok(0.0);
    }
    let needed = steps + f.order() - 1;
    if s.len() < needed {
        return Err(Error::WordTooShort {
            len: s.len(),
            needed,
        });
    }
    Ok((0..steps).map(|k| f.value(&s[k..])).sum())
}

/// Upper and lower escape rates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EscapeRateEstimate {
    pub upper: f64,
    pub lower: f64,
    pub converged: bool,
}

impl EscapeRateEstimate {
    pub fn exact(rate: f64) -> Self {
        EscapeRateEstimate {
            upper: rate,
            lower: rate,
            converged: true,
        }
    }

    pub fn contains(&self, rate: f64) -> bool {
        self.lower <= rate && rate <= self.upper
    }
}
