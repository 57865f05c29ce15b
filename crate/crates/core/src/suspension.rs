//! Special flows over Markov shifts under arithmetic cylinder ceilings.
//!
//! A `λ`-arithmetic ceiling is normalized to integer heights `k_C = φ(C)/λ`.
//! The time-one map of the flow is then the Markov chain on blocks
//! `C × [k, k+1)`, which is what every other module works with.

use std::collections::BTreeMap;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::shift::{check_refinement, CylinderFunction, MarkovShift, DEFAULT_REFINEMENT_CAP};

/// A block `C × [level, level+1)` of the normalized flow.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Block {
    pub word: Vec<usize>,
    pub level: usize,
}

impl Block {
    pub fn label(&self) -> String {
        let w: String = self.word.iter().map(|s| s.to_string()).collect();
        format!("{w}@{}", self.level)
    }
}

#[derive(Debug, Clone)]
pub struct SuspensionSystem {
    base: MarkovShift,
    ceiling: CylinderFunction,
    lattice_scale: f64,
    heights: BTreeMap<Vec<usize>, usize>,
    blocks: Vec<Block>,
    first_block: BTreeMap<Vec<usize>, usize>,
    block_matrix: DMatrix<f64>,
    block_measure: Vec<f64>,
    total_mass: f64,
}

/// Build the block chain of the flow under an arithmetic ceiling.
pub fn build_suspension(base: &MarkovShift, ceiling: &CylinderFunction) -> Result<SuspensionSystem> {
    if let Some((w, v)) = ceiling.values().iter().find(|(_, v)| **v <= 0.0) {
        return Err(Error::NonPositiveCeiling {
            word: w.clone(),
            value: *v,
        });
    }
    let lambda = ceiling.lattice().ok_or(Error::NonArithmeticCeiling)?;
    let heights: BTreeMap<Vec<usize>, usize> = ceiling
        .heights()?
        .into_iter()
        .map(|(w, h)| (w, h as usize))
        .collect();

    let mut blocks = Vec::new();
    let mut first_block = BTreeMap::new();
    for (w, &h) in &heights {
        first_block.insert(w.clone(), blocks.len());
        for level in 0..h {
            blocks.push(Block {
                word: w.clone(),
                level,
            });
        }
    }

    let b = blocks.len();
    let mut block_matrix = DMatrix::zeros(b, b);
    let mut block_measure = Vec::with_capacity(b);
    let n = ceiling.order();
    for (i, blk) in blocks.iter().enumerate() {
        let w = &blk.word;
        block_measure.push(base.stationary()[w[0]] * base.path_weight(w));
        if blk.level + 1 < heights[w] {
            block_matrix[(i, i + 1)] = 1.0;
            continue;
        }
        let last = w[n - 1];
        for s in base.successors(last) {
            let mut next = w[1..].to_vec();
            next.push(s);
            block_matrix[(i, first_block[&next])] = base.p(last, s);
        }
    }
    let total_mass = heights
        .iter()
        .map(|(w, &h)| h as f64 * base.stationary()[w[0]] * base.path_weight(w))
        .sum();

    Ok(SuspensionSystem {
        base: base.clone(),
        ceiling: ceiling.clone(),
        lattice_scale: lambda,
        heights,
        blocks,
        first_block,
        block_matrix,
        block_measure,
        total_mass,
    })
}

impl SuspensionSystem {
    pub fn base(&self) -> &MarkovShift {
        &self.base
    }

    /// The ceiling in external time units.
    pub fn ceiling(&self) -> &CylinderFunction {
        &self.ceiling
    }

    pub fn order(&self) -> usize {
        self.ceiling.order()
    }

    pub fn lattice_scale(&self) -> f64 {
        self.lattice_scale
    }

    /// Integer height `k_C` of an `n`-word (or of the first `n` symbols of a longer word).
    pub fn height(&self, w: &[usize]) -> usize {
        self.heights[&w[..self.order()]]
    }

    pub fn heights(&self) -> &BTreeMap<Vec<usize>, usize> {
        &self.heights
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn block_index(&self, word: &[usize], level: usize) -> Option<usize> {
        let first = *self.first_block.get(word)?;
        (level < self.heights[word]).then_some(first + level)
    }

    pub fn block_matrix(&self) -> &DMatrix<f64> {
        &self.block_matrix
    }

    pub fn block_measure(&self) -> &[f64] {
        &self.block_measure
    }

    /// `μ(φ)` in normalized (lattice = 1) units.
    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    /// `μ(φ)` in external time units.
    pub fn mean_ceiling(&self) -> f64 {
        self.total_mass * self.lattice_scale
    }

    /// Normalized integer Birkhoff sum `Σ_{j<steps} k(w_{j+1..j+n})`.
    pub fn lap_sum(&self, w: &[usize], steps: usize) -> usize {
        (0..steps).map(|j| self.height(&w[j..])).sum()
    }

    /// Same flow with blocks addressed by words of a higher order.
    pub fn refined(&self, order: usize) -> Result<SuspensionSystem> {
        self.refined_with_cap(order, DEFAULT_REFINEMENT_CAP)
    }

    pub fn refined_with_cap(&self, order: usize, cap: usize) -> Result<SuspensionSystem> {
        if order == self.order() {
            return Ok(self.clone());
        }
        check_refinement(self.base.alphabet_size(), order, cap)?;
        let ceiling = self.ceiling.refine(&self.base, order)?;
        build_suspension(&self.base, &ceiling)
    }
}

/// Round `φ` onto the lattice `ε/2` (half up) and report the realized sup-error.
pub fn rationalize_ceiling(ceiling: &CylinderFunction, epsilon: f64) -> Result<(CylinderFunction, f64)> {
    let inf = ceiling.inf();
    if inf <= 0.0 {
        let (w, v) = ceiling
            .values()
            .iter()
            .find(|(_, v)| **v <= 0.0)
            .expect("inf <= 0 implies a non-positive value");
        return Err(Error::NonPositiveCeiling {
            word: w.clone(),
            value: *v,
        });
    }
    if epsilon.is_nan() || epsilon <= 0.0 || epsilon >= inf {
        return Err(Error::EpsilonTooLarge { epsilon, inf });
    }
    if ceiling.lattice().is_some() {
        return Ok((ceiling.clone(), 0.0));
    }
    let lambda = epsilon / 2.0;
    let mut values = BTreeMap::new();
    let mut err: f64 = 0.0;
    for (w, v) in ceiling.values() {
        let q = (v / lambda + 0.5).floor() * lambda;
        err = err.max((q - v).abs());
        values.insert(w.clone(), q);
    }
    let psi = rebuild(ceiling, values).with_lattice(lambda)?;
    Ok((psi, err))
}

fn rebuild(template: &CylinderFunction, values: BTreeMap<Vec<usize>, f64>) -> CylinderFunction {
    // same key set as the template, so construction cannot fail
    let mut out = template.clone().without_lattice();
    out.replace_values(values);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn full2() -> MarkovShift {
        MarkovShift::full(2)
    }

    fn one_plus_ind1(shift: &MarkovShift) -> CylinderFunction {
        CylinderFunction::from_fn(shift, 1, |w| 1.0 + w[0] as f64)
            .unwrap()
            .with_lattice(1.0)
            .unwrap()
    }

    #[test]
    fn unit_ceiling_reproduces_base() {
        let s = full2();
        let sys = build_suspension(&s, &CylinderFunction::ones(&s)).unwrap();
        assert_eq!(sys.blocks().len(), 2);
        assert_eq!(sys.block_matrix(), s.transitions());
        assert_eq!(sys.total_mass(), 1.0);
    }

    #[test]
    fn two_level_block() {
        let s = full2();
        let sys = build_suspension(&s, &one_plus_ind1(&s)).unwrap();
        let labels: Vec<String> = sys.blocks().iter().map(Block::label).collect();
        assert_eq!(labels, ["0@0", "1@0", "1@1"]);
        assert_eq!(sys.total_mass(), 1.5);
        let expected = DMatrix::from_row_slice(3, 3, &[0.5, 0.5, 0.0, 0.0, 0.0, 1.0, 0.5, 0.5, 0.0]);
        assert_eq!(sys.block_matrix(), &expected);
        let v: Vec<f64> = sys.block_measure().iter().map(|m| m / sys.total_mass()).collect();
        let vm = crate::linalg::row_times(&v, sys.block_matrix());
        for (a, b) in v.iter().zip(&vm) {
            assert!((a - 1.0 / 3.0).abs() < 1e-15);
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn rotation_ceiling() {
        let s = MarkovShift::new(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let phi = CylinderFunction::constant(&s, 1, 2.0).with_lattice(2.0).unwrap();
        // lattice 2 normalizes to height 1; lattice 1 gives the 4-cycle
        assert_eq!(build_suspension(&s, &phi).unwrap().blocks().len(), 2);
        let phi = CylinderFunction::constant(&s, 1, 2.0).with_lattice(1.0).unwrap();
        let sys = build_suspension(&s, &phi).unwrap();
        assert_eq!(sys.blocks().len(), 4);
        assert_eq!(sys.total_mass(), 2.0);
        for i in 0..4 {
            assert_eq!(sys.block_matrix().row(i).iter().filter(|v| **v == 1.0).count(), 1);
        }
    }

    #[test]
    fn rejects_non_arithmetic() {
        let s = full2();
        let phi = CylinderFunction::from_fn(&s, 1, |w| [1.0, 2f64.sqrt()][w[0]]).unwrap();
        assert_eq!(build_suspension(&s, &phi).unwrap_err(), Error::NonArithmeticCeiling);
    }

    #[test]
    fn rationalize_examples() {
        let s = full2();
        let phi = one_plus_ind1(&s);
        let (psi, e) = rationalize_ceiling(&phi, 0.3).unwrap();
        assert_eq!(psi, phi);
        assert_eq!(e, 0.0);

        let phi = CylinderFunction::from_fn(&s, 1, |w| [1.0, 2f64.sqrt()][w[0]]).unwrap();
        let (psi, e) = rationalize_ceiling(&phi, 0.01).unwrap();
        assert_eq!(psi.value(&[0]), 1.0);
        assert!((psi.value(&[1]) - 1.415).abs() < 1e-12);
        assert!(e <= 0.005 && (e - 0.000_786_4).abs() < 1e-6);
        assert_eq!(psi.lattice(), Some(0.005));

        let small = CylinderFunction::constant(&s, 1, 0.3);
        assert!(matches!(
            rationalize_ceiling(&small, 0.5),
            Err(Error::EpsilonTooLarge { .. })
        ));
    }

    #[test]
    fn refinement_keeps_mass() {
        let s = full2();
        let sys = build_suspension(&s, &one_plus_ind1(&s)).unwrap();
        let r = sys.refined(3).unwrap();
        assert_eq!(r.blocks().len(), 12);
        assert!((r.total_mass() - 1.5).abs() < 1e-15);
        assert_eq!(r.block_index(&[1, 0, 1], 1), Some(7));
    }
}
