//! Holes in the flow and the open block operator.
//!
//! Two matrix representations are provided. The refined one addresses
//! blocks by `max(m, n)`-words and zeroes the rows of the hole blocks. The
//! reduced one keeps the `n`-word block chain and appends the iterates
//! `L̄ᵏ 1_Ā`, `k < k₀`, as extra basis vectors; it is much smaller for long
//! holes but has negative entries, so its radius comes from `det(id − zM)`.

use std::collections::BTreeMap;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{self, PerronRoot, PERRON_MAX_ITER, PERRON_TOL};
use crate::shift::{EscapeRateEstimate, MarkovShift, Word};
use crate::suspension::{Block, SuspensionSystem};
use crate::zeta;

/// Cylinder hole `[a₁…a_m] × [0, 1)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Hole {
    word: Word,
}

impl Hole {
    pub fn new(shift: &MarkovShift, word: Word) -> Result<Self> {
        shift.check_admissible(word.symbols())?;
        Ok(Hole { word })
    }

    pub fn from_symbols(shift: &MarkovShift, symbols: &[usize]) -> Result<Self> {
        Self::new(shift, Word::new(symbols.to_vec())?)
    }

    pub fn parse(shift: &MarkovShift, text: &str) -> Result<Self> {
        Self::new(shift, shift.parse_word(text)?)
    }

    pub fn word(&self) -> &Word {
        &self.word
    }

    pub fn symbols(&self) -> &[usize] {
        self.word.symbols()
    }

    pub fn len(&self) -> usize {
        self.word.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Data of the reduced open matrix for a hole with `m ≥ n`.
#[derive(Debug, Clone, PartialEq)]
pub struct HoleQuantities {
    pub word: Vec<usize>,
    pub m: usize,
    pub n: usize,
    pub alpha: f64,
    pub k0: usize,
    /// `c[k-1] = c_k` for `k = 1..k₀-1`.
    pub c: Vec<f64>,
    pub l_of_k: BTreeMap<usize, usize>,
    pub t_index: usize,
    pub r_index: usize,
}

pub fn hole_quantities(sys: &SuspensionSystem, hole: &Hole) -> Result<HoleQuantities> {
    let a = hole.symbols();
    let (m, n) = (a.len(), sys.order());
    if m < n {
        return Err(Error::HoleShorterThanCeilingOrder { hole_len: m, order: n });
    }
    if !sys.base().is_reduced(hole.word())? {
        return Err(Error::NotReduced { word: a.to_vec() });
    }
    let base = sys.base();
    let alpha = base.path_weight(&a[n - 1..]);
    let k0 = sys.lap_sum(a, m - n);
    let mut c = vec![0.0; k0.saturating_sub(1)];
    let mut l_of_k = BTreeMap::new();
    for l in 1..m - n {
        if a[l..] == a[..m - l] {
            let k = sys.lap_sum(a, l);
            c[k - 1] = base.path_weight(&a[..=l]);
            l_of_k.insert(k, l);
        }
    }
    let t_index = sys.block_index(&a[..n], 0).expect("hole prefix is an admissible n-word");
    let r_index = sys.block_index(&a[m - n..], 0).expect("hole suffix is an admissible n-word");
    Ok(HoleQuantities {
        word: a.to_vec(),
        m,
        n,
        alpha,
        k0,
        c,
        l_of_k,
        t_index,
        r_index,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Representation {
    Refined,
    Cristadoro,
}

#[derive(Debug, Clone)]
pub struct OpenMatrix {
    pub representation: Representation,
    pub matrix: DMatrix<f64>,
    pub basis_labels: Vec<String>,
    /// Lattice constant of the ceiling, to convert rates to external time.
    pub lattice_scale: f64,
}

/// A union of blocks `C × [k, k+1)` over `order`-words.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockHole {
    pub order: usize,
    pub blocks: Vec<Block>,
}

impl BlockHole {
    /// The block form of a cylinder hole.
    pub fn from_hole(sys: &SuspensionSystem, hole: &Hole) -> Self {
        let order = hole.len().max(sys.order());
        let blocks = sys
            .base()
            .admissible_words(order)
            .into_iter()
            .filter(|w| hole.word().is_prefix_of(w))
            .map(|word| Block { word, level: 0 })
            .collect();
        BlockHole { order, blocks }
    }

    /// `C × [level, level+1)` for a single word `C` of order at least `n`.
    pub fn single(word: &[usize], level: usize) -> Self {
        BlockHole {
            order: word.len(),
            blocks: vec![Block {
                word: word.to_vec(),
                level,
            }],
        }
    }

    /// Blocks of the refined system of order `self.order` contained in the hole.
    pub(crate) fn mask(&self, refined: &SuspensionSystem) -> Result<Vec<bool>> {
        let mut mask = vec![false; refined.blocks().len()];
        for b in &self.blocks {
            let i = refined
                .block_index(&b.word, b.level)
                .ok_or_else(|| Error::InvalidInput(format!("{} is not a block", b.label())))?;
            mask[i] = true;
        }
        Ok(mask)
    }

    /// The hole `Φ₁⁻¹(self)`, expressed with words one symbol longer.
    pub fn preimage(&self, sys: &SuspensionSystem) -> Result<BlockHole> {
        let q = self.order.max(sys.order());
        let inner = sys.refined(q)?;
        let mask = self.lift(sys, q)?.mask(&inner)?;
        let outer = sys.refined(q + 1)?;
        let mut blocks = Vec::new();
        for b in outer.blocks() {
            let image = if b.level + 1 < outer.height(&b.word) {
                inner.block_index(&b.word[..q], b.level + 1)
            } else {
                inner.block_index(&b.word[1..], 0)
            };
            if mask[image.expect("image block exists")] {
                blocks.push(b.clone());
            }
        }
        Ok(BlockHole {
            order: q + 1,
            blocks,
        })
    }

    /// The same set described by words of a higher order.
    pub fn lift(&self, sys: &SuspensionSystem, order: usize) -> Result<BlockHole> {
        if order < self.order {
            return Err(Error::InvalidInput(format!(
                "cannot lower a block hole from order {} to {order}",
                self.order
            )));
        }
        let words = sys.base().admissible_words(order);
        let mut blocks = Vec::new();
        for b in &self.blocks {
            for w in words.iter().filter(|w| w[..self.order] == b.word[..]) {
                blocks.push(Block {
                    word: w.clone(),
                    level: b.level,
                });
            }
        }
        blocks.sort();
        Ok(BlockHole { order, blocks })
    }
}

fn refined_parts(sys: &SuspensionSystem, hole: &BlockHole) -> Result<(SuspensionSystem, DMatrix<f64>)> {
    let order = hole.order.max(sys.order());
    let refined = sys.refined(order)?;
    let mask = hole.lift(sys, order)?.mask(&refined)?;
    let mut matrix = refined.block_matrix().clone();
    for (i, &zero) in mask.iter().enumerate() {
        if zero {
            matrix.row_mut(i).fill(0.0);
        }
    }
    Ok((refined, matrix))
}

/// Block chain on `max(m, n)`-word blocks with the hole rows zeroed.
pub fn build_open_refined(sys: &SuspensionSystem, hole: &Hole) -> Result<OpenMatrix> {
    build_open_blocks(sys, &BlockHole::from_hole(sys, hole))
}

pub fn build_open_blocks(sys: &SuspensionSystem, hole: &BlockHole) -> Result<OpenMatrix> {
    let (refined, matrix) = refined_parts(sys, hole)?;
    Ok(OpenMatrix {
        representation: Representation::Refined,
        matrix,
        basis_labels: refined.blocks().iter().map(Block::label).collect(),
        lattice_scale: sys.lattice_scale(),
    })
}

/// Reduced open matrix of dimension `#blocks + k₀ − 1`.
///
/// For `m = n` there are no extra basis vectors; the hole is itself a block
/// and the matrix is `M̄` with row `t` removed.
pub fn build_open_cristadoro(sys: &SuspensionSystem, hole: &Hole) -> Result<OpenMatrix> {
    let h = hole_quantities(sys, hole)?;
    let b = sys.blocks().len();
    let mut labels: Vec<String> = sys.blocks().iter().map(Block::label).collect();
    if h.k0 == 0 {
        let mut matrix = sys.block_matrix().clone();
        matrix.row_mut(h.t_index).fill(0.0);
        return Ok(OpenMatrix {
            representation: Representation::Cristadoro,
            matrix,
            basis_labels: labels,
            lattice_scale: sys.lattice_scale(),
        });
    }
    let dim = b + h.k0 - 1;
    let mut matrix = DMatrix::zeros(dim, dim);
    matrix
        .view_mut((0, 0), (b, b))
        .copy_from(sys.block_matrix());
    if h.k0 == 1 {
        matrix[(h.t_index, h.r_index)] -= h.alpha;
    } else {
        matrix[(h.t_index, b)] = -h.alpha;
        for k in 1..h.k0 {
            let row = b + k - 1;
            matrix[(row, b)] = -h.c[k - 1];
            if k < h.k0 - 1 {
                matrix[(row, b + k)] = 1.0;
            } else {
                matrix[(row, h.r_index)] += 1.0;
            }
            labels.push(format!("L^{k} 1_A"));
        }
    }
    Ok(OpenMatrix {
        representation: Representation::Cristadoro,
        matrix,
        basis_labels: labels,
        lattice_scale: sys.lattice_scale(),
    })
}

/// Perron root of the refined representation with iteration diagnostics.
pub fn perron_details(mat: &OpenMatrix, tol: f64) -> Result<PerronRoot> {
    match mat.representation {
        Representation::Refined => linalg::perron_root(&mat.matrix, tol, PERRON_MAX_ITER),
        Representation::Cristadoro => Err(Error::InvalidInput(
            "the reduced representation has negative entries; use spectral_radius".into(),
        )),
    }
}

/// Leading eigenvalue of the open operator.
///
/// The reduced representation is not nonnegative, so its radius is read off
/// the smallest zero `z ≥ 1` of `det(id − zM)` instead of a power iteration.
pub fn spectral_radius(mat: &OpenMatrix, tol: f64) -> Result<f64> {
    match mat.representation {
        Representation::Refined => Ok(perron_details(mat, tol)?.value),
        Representation::Cristadoro => {
            let p = zeta::char_poly(&mat.matrix)?;
            if p.degree() == 0 {
                return Ok(0.0);
            }
            match zeta::smallest_root_widening(&p, 2.0) {
                Ok(z) => Ok(1.0 / z),
                Err(Error::NoSignChange { .. }) => Ok(0.0),
                Err(e) => Err(e),
            }
        }
    }
}

fn rate_from_radius(r: f64, lattice_scale: f64) -> EscapeRateEstimate {
    let rate = if r > 0.0 { (-r.ln()).max(0.0) } else { f64::INFINITY };
    EscapeRateEstimate::exact(rate / lattice_scale)
}

pub fn escape_rate_refined(sys: &SuspensionSystem, hole: &Hole) -> Result<EscapeRateEstimate> {
    let mat = build_open_refined(sys, hole)?;
    Ok(rate_from_radius(spectral_radius(&mat, PERRON_TOL)?, sys.lattice_scale()))
}

pub fn escape_rate_cristadoro(sys: &SuspensionSystem, hole: &Hole) -> Result<EscapeRateEstimate> {
    let mat = build_open_cristadoro(sys, hole)?;
    Ok(rate_from_radius(spectral_radius(&mat, PERRON_TOL)?, sys.lattice_scale()))
}

pub fn escape_rate_blocks(sys: &SuspensionSystem, hole: &BlockHole) -> Result<EscapeRateEstimate> {
    let mat = build_open_blocks(sys, hole)?;
    Ok(rate_from_radius(spectral_radius(&mat, PERRON_TOL)?, sys.lattice_scale()))
}

/// `ρ(A, φ)` in external time units. Uses the reduced representation when
/// the hole is reduced and at least as long as the ceiling order.
pub fn escape_rate_flow(sys: &SuspensionSystem, hole: &Hole) -> Result<EscapeRateEstimate> {
    let reduced = sys.base().is_reduced(hole.word())?;
    if hole.len() >= sys.order() && reduced {
        escape_rate_cristadoro(sys, hole)
    } else {
        escape_rate_refined(sys, hole)
    }
}

/// Normalized mass of blocks that have not met the hole during the first `t` laps,
/// for `t = 0..=t_max`.
pub fn survival_curve_flow(sys: &SuspensionSystem, hole: &Hole, t_max: usize) -> Result<Vec<f64>> {
    survival_curve_blocks(sys, &BlockHole::from_hole(sys, hole), t_max)
}

pub fn survival_curve_blocks(sys: &SuspensionSystem, hole: &BlockHole, t_max: usize) -> Result<Vec<f64>> {
    let (refined, matrix) = refined_parts(sys, hole)?;
    let mass = refined.total_mass();
    let mut v: Vec<f64> = refined.block_measure().iter().map(|m| m / mass).collect();
    let mut out = Vec::with_capacity(t_max + 1);
    out.push(v.iter().sum::<f64>().min(1.0));
    for _ in 0..t_max {
        v = linalg::row_times(&v, &matrix);
        out.push(v.iter().sum());
    }
    Ok(out)
}
