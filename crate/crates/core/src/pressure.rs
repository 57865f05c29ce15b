//! Induced pressure over hole-avoiding word collections.
//!
//! Two evaluations are offered: the defining sum over words with
//! `t − η < S_wφ ≤ t`, done as a dynamic program over word suffixes and
//! accumulated heights, and the root of `β ↦ log r(W(β))` where `W(β)` is
//! the survivor chain weighted by `e^{−βφ}`.

use std::collections::HashMap;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::io::{csv, fmt17};
use crate::linalg;
use crate::open::{escape_rate_flow, Hole};
use crate::shift::{check_refinement, CylinderFunction, MarkovShift, DEFAULT_REFINEMENT_CAP};
use crate::suspension::SuspensionSystem;

/// `p(x) = log p_{x₁x₂}` with its Gibbs constant.
#[derive(Debug, Clone)]
pub struct Potential {
    shift: MarkovShift,
    pub p: CylinderFunction,
    pub gibbs_constant: f64,
}

/// Longest words on which the Gibbs bound is checked at construction.
pub const GIBBS_CHECK_LEN: usize = 8;

/// `e^{S_w p}/μ([w]) = max_s p_{w_k,s}/π_{w_1}`.
fn gibbs_ratio(shift: &MarkovShift, first: usize, last: usize) -> f64 {
    let top = (0..shift.alphabet_size())
        .map(|s| shift.p(last, s))
        .fold(0.0, f64::max);
    top / shift.stationary()[first]
}

pub fn gibbs_potential(shift: &MarkovShift) -> Result<Potential> {
    let p = CylinderFunction::from_fn(shift, 2, |w| shift.p(w[0], w[1]).ln())?;
    // the ratio only depends on the first and last symbol of w
    let n = shift.alphabet_size();
    let mut k: f64 = 1.0;
    for a in 0..n {
        for b in 0..n {
            let r = gibbs_ratio(shift, a, b);
            k = k.max(r).max(1.0 / r);
        }
    }
    let pot = Potential {
        shift: shift.clone(),
        p,
        gibbs_constant: k,
    };
    for len in 1..=GIBBS_CHECK_LEN {
        if (n as f64).powi(len as i32) > 1e5 {
            break;
        }
        for w in shift.admissible_words(len) {
            let r = pot.exp_sum(&w) / (shift.stationary()[w[0]] * shift.path_weight(&w));
            if !(r <= k * (1.0 + 1e-12) && r * k >= 1.0 - 1e-12) {
                return Err(Error::InvalidInput(format!(
                    "Gibbs bound K = {k} violated on {w:?} (ratio {r})"
                )));
            }
        }
    }
    Ok(pot)
}

impl Potential {
    pub fn shift(&self) -> &MarkovShift {
        &self.shift
    }

    /// `e^{S_w p} = Π p_{w_l w_{l+1}} · max_s p_{w_k s}`.
    pub fn exp_sum(&self, w: &[usize]) -> f64 {
        let last = w[w.len() - 1];
        let top = (0..self.shift.alphabet_size())
            .map(|s| self.shift.p(last, s))
            .fold(0.0, f64::max);
        self.shift.path_weight(w) * top
    }
}

/// Words of length `≥ m` none of whose `m`-windows equals the hole word.
#[derive(Debug, Clone)]
pub struct WordCollection {
    pub hole: Hole,
    pub m: usize,
}

impl WordCollection {
    pub fn new(hole: Hole) -> Self {
        let m = hole.len();
        WordCollection { hole, m }
    }

    pub fn contains(&self, w: &[usize]) -> bool {
        w.len() >= self.m && w.windows(self.m).all(|win| win != self.hole.symbols())
    }
}

/// Integer heights of an arithmetic ceiling and the sup over unseen symbols.
struct Heights<'a> {
    shift: &'a MarkovShift,
    heights: HashMap<Vec<usize>, i64>,
    n: usize,
    tails: HashMap<Vec<usize>, i64>,
}

impl<'a> Heights<'a> {
    fn new(shift: &'a MarkovShift, phi: &CylinderFunction) -> Result<Self> {
        let heights = phi
            .heights()?
            .into_iter()
            .map(|(w, h)| (w, h as i64))
            .collect();
        Ok(Heights {
            shift,
            heights,
            n: phi.order(),
            tails: HashMap::new(),
        })
    }

    fn complete(&self, w: &[usize]) -> i64 {
        if w.len() < self.n {
            return 0;
        }
        w.windows(self.n).map(|win| self.heights[win]).sum()
    }

    /// `max` over admissible continuations `y` of `Σ_{k<|w|, window incomplete}` heights.
    fn sup_incomplete(&mut self, w: &[usize]) -> i64 {
        if self.n == 1 {
            return 0;
        }
        let key = w[w.len().saturating_sub(self.n - 1)..].to_vec();
        if let Some(&v) = self.tails.get(&key) {
            return v;
        }
        let start = w.len().saturating_sub(self.n - 1);
        let mut best = i64::MIN;
        let mut stack = vec![w.to_vec()];
        while let Some(x) = stack.pop() {
            if x.len() == w.len() + self.n - 1 {
                let s: i64 = (start..w.len()).map(|k| self.heights[&x[k..k + self.n]]).sum();
                best = best.max(s);
                continue;
            }
            for b in self.shift.successors(*x.last().expect("non-empty")) {
                let mut y = x.clone();
                y.push(b);
                stack.push(y);
            }
        }
        self.tails.insert(key, best);
        best
    }

    fn sup_sum(&mut self, w: &[usize]) -> i64 {
        self.complete(w) + self.sup_incomplete(w)
    }
}

/// `(1/t)·log Σ_{w ∈ C, t−η < S_wφ ≤ t} e^{S_w p}` with `t`, `η` in the
/// ceiling's time unit. `S_wφ` takes the sup over the continuation of `w`.
pub fn induced_pressure_truncated(
    pot: &Potential,
    phi: &CylinderFunction,
    coll: &WordCollection,
    t: f64,
    eta: f64,
) -> Result<f64> {
    let shift = pot.shift();
    let lambda = phi.lattice().ok_or(Error::NonArithmeticCeiling)?;
    let tn = (t / lambda).round();
    if (tn * lambda - t).abs() > 1e-9 * t.abs().max(1.0) {
        return Err(Error::InvalidInput(format!("t = {t} is not a multiple of the lattice {lambda}")));
    }
    if eta <= phi.sup() {
        return Err(Error::InvalidInput(format!(
            "eta = {eta} must exceed sup phi = {}",
            phi.sup()
        )));
    }
    let tn = tn as i64;
    let lo = (tn as f64 - eta / lambda).floor() as i64; // S > t − η  ⇔  S ≥ lo + 1 for integers
    let in_window = |s: i64| s > lo && s <= tn && (s as f64) > tn as f64 - eta / lambda;
    let mut h = Heights::new(shift, phi)?;
    let m = coll.m;
    let q = m.max(h.n).max(2) - 1;

    // log-sum-exp accumulator
    let mut terms: Vec<f64> = Vec::new();
    let top = |a: usize| (0..shift.alphabet_size()).map(|s| shift.p(a, s)).fold(0.0, f64::max);

    for len in m..q {
        for w in shift.admissible_words(len) {
            if coll.contains(&w) && in_window(h.sup_sum(&w)) {
                terms.push(pot.exp_sum(&w).ln());
            }
        }
    }

    // layer of words of length `len`: (last q symbols, complete sum) -> weight · e^{offset}
    let mut layer: HashMap<(Vec<usize>, i64), f64> = HashMap::new();
    for w in shift.admissible_words(q) {
        if q >= m && !coll.contains(&w) {
            continue;
        }
        *layer.entry((w.clone(), h.complete(&w))).or_default() += shift.path_weight(&w);
    }
    let mut offset = 0.0;
    let mut len = q;
    while !layer.is_empty() {
        if len >= m {
            let mut total = 0.0;
            for ((suffix, s), wgt) in &layer {
                let full = s + h.sup_incomplete(suffix);
                if in_window(full) {
                    total += wgt * top(suffix[q - 1]);
                }
            }
            if total > 0.0 {
                terms.push(total.ln() + offset);
            }
        }
        let mut next: HashMap<(Vec<usize>, i64), f64> = HashMap::new();
        for ((suffix, s), wgt) in layer {
            let last = suffix[q - 1];
            for b in shift.successors(last) {
                let mut ext = suffix.clone();
                ext.push(b);
                if ext.len() >= m && ext[ext.len() - m..] == *coll.hole.symbols() {
                    continue;
                }
                let add = if ext.len() >= h.n { h.heights[&ext[ext.len() - h.n..]] } else { 0 };
                let s2 = s + add;
                // once the complete sum passes t every extension stays outside the window
                if s2 > tn {
                    continue;
                }
                let key = (ext[1..].to_vec(), s2);
                *next.entry(key).or_default() += wgt * shift.p(last, b);
            }
        }
        let scale = next.values().cloned().fold(0.0, f64::max);
        if scale > 0.0 {
            for v in next.values_mut() {
                *v /= scale;
            }
            offset += scale.ln();
        }
        layer = next;
        len += 1;
    }
    if terms.is_empty() {
        return Err(Error::WindowEmpty);
    }
    let mx = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let log_total = mx + terms.iter().map(|v| (v - mx).exp()).sum::<f64>().ln();
    Ok(log_total / t)
}

/// Survivor chain on `max(m, n)`-words weighted by `e^{−βφ(C)}`.
pub struct WeightedSurvivor {
    words: Vec<Vec<usize>>,
    base: DMatrix<f64>,
    phi: Vec<f64>,
}

impl WeightedSurvivor {
    pub fn new(shift: &MarkovShift, phi: &CylinderFunction, coll: &WordCollection) -> Result<Self> {
        let q = coll.m.max(phi.order());
        check_refinement(shift.alphabet_size(), q, DEFAULT_REFINEMENT_CAP)?;
        let sm = shift.survivor_matrix(coll.hole.word(), q)?;
        let phi_vals = sm.words.iter().map(|w| phi.value(w)).collect();
        Ok(WeightedSurvivor {
            words: sm.words,
            base: sm.matrix,
            phi: phi_vals,
        })
    }

    pub fn matrix(&self, beta: f64) -> DMatrix<f64> {
        let mut m = self.base.clone();
        for (i, f) in self.phi.iter().enumerate() {
            let w = (-beta * f).exp();
            m.row_mut(i).scale_mut(w);
        }
        m
    }

    /// `P_𝟙(p − βφ, C) = log r(W(β))`.
    pub fn log_radius(&self, beta: f64) -> Result<f64> {
        let r = linalg::spectral_radius_nonnegative(&self.matrix(beta))?;
        Ok(r.ln())
    }

    pub fn words(&self) -> &[Vec<usize>] {
        &self.words
    }
}

const ROOT_BETA_TOL: f64 = 1e-12;
const BETA_FLOOR: f64 = -50.0;

/// `β*` with `r(W(β*)) = 1`, i.e. `inf{β : P_𝟙(p − βφ, C) ≤ 0}`.
pub fn induced_pressure_via_root(pot: &Potential, phi: &CylinderFunction, coll: &WordCollection) -> Result<f64> {
    if phi.inf() <= 0.0 {
        return Err(Error::InvalidInput("ceiling must be positive".into()));
    }
    let ws = WeightedSurvivor::new(pot.shift(), phi, coll)?;
    let f = |b: f64| ws.log_radius(b);
    let mut hi = 0.0;
    if f(hi)? >= 0.0 {
        return Err(Error::NoBracket);
    }
    let mut lo = -1.0;
    loop {
        let v = f(lo)?;
        if v >= 0.0 {
            break;
        }
        if v == f64::NEG_INFINITY || lo <= BETA_FLOOR {
            return Err(Error::NoBracket);
        }
        hi = lo;
        lo = (2.0 * lo).max(BETA_FLOOR);
    }
    while hi - lo > ROOT_BETA_TOL {
        let mid = 0.5 * (lo + hi);
        if f(mid)? >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PressureReport {
    pub rho: f64,
    pub beta_root: f64,
    pub beta_truncated: f64,
    pub root_gap: f64,
    pub truncated_gap: f64,
    pub root_ok: bool,
    pub truncated_ok: bool,
}

impl PressureReport {
    pub fn passed(&self) -> bool {
        self.root_ok && self.truncated_ok
    }

    pub fn to_csv(&self) -> String {
        csv(
            &["method", "beta", "rho", "abs_gap"],
            [
                vec!["root".into(), fmt17(self.beta_root), fmt17(self.rho), fmt17(self.root_gap)],
                vec![
                    "truncated".into(),
                    fmt17(self.beta_truncated),
                    fmt17(self.rho),
                    fmt17(self.truncated_gap),
                ],
            ],
        )
    }
}

pub const ROOT_GAP_TOL: f64 = 1e-8;
pub const TRUNCATED_GAP_TOL: f64 = 0.05;
pub const DEFAULT_T: f64 = 200.0;

/// Compare both pressure evaluations with `−ρ(A, φ)`, using `t = 200` and `η = sup φ + λ`.
pub fn check_pressure_equals_minus_rho(sys: &SuspensionSystem, hole: &Hole) -> Result<PressureReport> {
    let pot = gibbs_potential(sys.base())?;
    let coll = WordCollection::new(hole.clone());
    let phi = sys.ceiling();
    let rho = escape_rate_flow(sys, hole)?.upper;
    let beta_root = induced_pressure_via_root(&pot, phi, &coll)?;
    let lambda = sys.lattice_scale();
    let t = (DEFAULT_T / lambda).round() * lambda;
    let eta = phi.sup() + lambda;
    let beta_truncated = induced_pressure_truncated(&pot, phi, &coll, t, eta)?;
    let root_gap = (beta_root + rho).abs();
    let truncated_gap = (beta_truncated + rho).abs();
    Ok(PressureReport {
        rho,
        beta_root,
        beta_truncated,
        root_gap,
        truncated_gap,
        root_ok: root_gap < ROOT_GAP_TOL,
        truncated_ok: truncated_gap < TRUNCATED_GAP_TOL,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuperadditivityReport {
    pub p1: f64,
    pub p2: f64,
    pub p12: f64,
    /// `1/P_{φ₁+φ₂}`
    pub lhs: f64,
    /// `1/P_{φ₁} + 1/P_{φ₂}`
    pub rhs: f64,
    pub holds: bool,
}

/// `1/P_{φ₁+φ₂} ≥ 1/P_{φ₁} + 1/P_{φ₂}` up to the root tolerance carried through `1/P`.
pub fn superadditivity_check(
    pot: &Potential,
    coll: &WordCollection,
    phi1: &CylinderFunction,
    phi2: &CylinderFunction,
) -> Result<SuperadditivityReport> {
    let shift = pot.shift();
    let sum = phi1.sum(shift, phi2)?;
    let p1 = induced_pressure_via_root(pot, phi1, coll)?;
    let p2 = induced_pressure_via_root(pot, phi2, coll)?;
    let p12 = induced_pressure_via_root(pot, &sum, coll)?;
    for v in [p1, p2, p12] {
        if v >= 0.0 {
            return Err(Error::PressureNotNegative { value: v });
        }
    }
    let lhs = 1.0 / p12;
    let rhs = 1.0 / p1 + 1.0 / p2;
    let slack = 1e-10 + 4.0 * ROOT_BETA_TOL * [p1, p2, p12].iter().map(|p| p.powi(-2)).sum::<f64>();
    Ok(SuperadditivityReport {
        p1,
        p2,
        p12,
        lhs,
        rhs,
        holds: lhs >= rhs - slack,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::suspension::build_suspension;

    fn stepped(s: &MarkovShift) -> CylinderFunction {
        CylinderFunction::from_fn(s, 1, |w| 1.0 + w[0] as f64)
            .unwrap()
            .with_lattice(1.0)
            .unwrap()
    }

    fn golden_rate() -> f64 {
        2f64.ln() - ((1.0 + 5f64.sqrt()) / 2.0).ln()
    }

    fn coll(s: &MarkovShift, w: &[usize]) -> WordCollection {
        WordCollection::new(Hole::from_symbols(s, w).unwrap())
    }

    #[test]
    fn gibbs_constants() {
        let full = MarkovShift::full(2);
        let pot = gibbs_potential(&full).unwrap();
        assert_eq!(pot.gibbs_constant, 1.0);
        assert!((pot.p.value(&[0, 1]) - 0.5f64.ln()).abs() < 1e-15);
        let r = pot.exp_sum(&[0, 1]) / 0.25;
        assert!((r - 1.0).abs() < 1e-15);

        let asym = MarkovShift::new(&[vec![0.9, 0.1], vec![0.2, 0.8]]).unwrap();
        let pot = gibbs_potential(&asym).unwrap();
        assert!((pot.gibbs_constant - 2.7).abs() < 1e-12);
        // the word [1, 0] attains the bound
        let w = [1, 0];
        let r = pot.exp_sum(&w) / asym.cylinder_measure(&crate::Word::new(w.to_vec()).unwrap()).unwrap();
        assert!((r - 2.7).abs() < 1e-12);
    }

    #[test]
    fn collection_membership() {
        let s = MarkovShift::full(2);
        let c = coll(&s, &[0, 0]);
        assert!(c.contains(&[0, 1, 0, 1]));
        assert!(!c.contains(&[1, 0, 0, 1]));
        assert!(!c.contains(&[1]));
    }

    #[test]
    fn truncated_examples() {
        let s = MarkovShift::full(2);
        let pot = gibbs_potential(&s).unwrap();
        let one = CylinderFunction::ones(&s);
        let v = induced_pressure_truncated(&pot, &one, &coll(&s, &[0]), 200.0, 2.0).unwrap();
        assert!((v + 2f64.ln()).abs() < 0.02);
        let v = induced_pressure_truncated(&pot, &one, &coll(&s, &[0, 0]), 200.0, 2.0).unwrap();
        assert!((v + golden_rate()).abs() < 0.02);
        let v = induced_pressure_truncated(&pot, &stepped(&s), &coll(&s, &[0]), 200.0, 3.0).unwrap();
        assert!((v + 0.5 * 2f64.ln()).abs() < 0.05);
    }

    #[test]
    fn root_examples() {
        let s = MarkovShift::full(2);
        let pot = gibbs_potential(&s).unwrap();
        let one = CylinderFunction::ones(&s);
        let b = induced_pressure_via_root(&pot, &one, &coll(&s, &[0])).unwrap();
        assert!((b + 2f64.ln()).abs() < 1e-10);
        let b00 = induced_pressure_via_root(&pot, &one, &coll(&s, &[0, 0])).unwrap();
        assert!((b00 + golden_rate()).abs() < 1e-10);
        let two = one.scaled(2.0);
        let b2 = induced_pressure_via_root(&pot, &two, &coll(&s, &[0, 0])).unwrap();
        assert!((b2 - b00 / 2.0).abs() < 1e-11);
    }

    #[test]
    fn equivalence_reports() {
        let s = MarkovShift::full(2);
        for (phi, w) in [
            (CylinderFunction::ones(&s), vec![0]),
            (stepped(&s), vec![0]),
            (CylinderFunction::ones(&s), vec![0, 0]),
        ] {
            let sys = build_suspension(&s, &phi).unwrap();
            let r = check_pressure_equals_minus_rho(&sys, &Hole::from_symbols(&s, &w).unwrap()).unwrap();
            assert!(r.passed(), "{w:?}: {r:?}");
        }
    }

    #[test]
    fn superadditivity_examples() {
        let s = MarkovShift::full(2);
        let pot = gibbs_potential(&s).unwrap();
        let one = CylinderFunction::ones(&s);
        let c = coll(&s, &[0]);
        let r = superadditivity_check(&pot, &c, &one, &one).unwrap();
        assert!((r.lhs + 2.0 / 2f64.ln()).abs() < 1e-9);
        assert!((r.lhs - r.rhs).abs() < 1e-9);
        let r = superadditivity_check(&pot, &c, &one, &stepped(&s)).unwrap();
        assert!(r.holds, "{r:?}");
    }
}
