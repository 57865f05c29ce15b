//! Trajectory sampling on the block chain and the deviation diagnostic `P_k^ε`.
//!
//! Sample `i` draws from `ChaCha8Rng` seeded with the run seed on stream `i`,
//! and results are aggregated as integer histograms, so outputs depend only
//! on `(seed, samples)` and not on the thread schedule.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::io::{csv, fmt17};
use crate::open::{BlockHole, Hole};
use crate::shift::{CylinderFunction, EscapeRateEstimate, MarkovShift};
use crate::suspension::SuspensionSystem;

pub const MIN_SAMPLES: usize = 100;
pub const DEFAULT_CONFIDENCE_Z: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationConfig {
    pub seed: u64,
    pub samples: usize,
    /// Number of lattice steps.
    pub t_max: usize,
    pub confidence_z: f64,
}

impl SimulationConfig {
    pub fn new(seed: u64, samples: usize, t_max: usize) -> Result<Self> {
        let cfg = SimulationConfig {
            seed,
            samples,
            t_max,
            confidence_z: DEFAULT_CONFIDENCE_Z,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples < MIN_SAMPLES {
            return Err(Error::InvalidInput(format!(
                "samples = {} must be at least {MIN_SAMPLES}",
                self.samples
            )));
        }
        if self.confidence_z.is_nan() || self.confidence_z <= 0.0 {
            return Err(Error::InvalidInput("confidence_z must be positive".into()));
        }
        Ok(())
    }

    fn rng(&self, sample: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(sample as u64);
        rng
    }
}

/// Cumulative weights per row for inverse-CDF draws.
struct Sampler {
    rows: Vec<Vec<(usize, f64)>>,
}

impl Sampler {
    fn from_rows(rows: impl Iterator<Item = Vec<(usize, f64)>>) -> Self {
        let rows = rows
            .map(|r| {
                let total: f64 = r.iter().map(|(_, w)| w).sum();
                let mut acc = 0.0;
                r.into_iter()
                    .filter(|(_, w)| *w > 0.0)
                    .map(|(j, w)| {
                        acc += w / total;
                        (j, acc)
                    })
                    .collect()
            })
            .collect();
        Sampler { rows }
    }

    fn draw(&self, row: usize, rng: &mut ChaCha8Rng) -> usize {
        let r = &self.rows[row];
        let u: f64 = rng.gen();
        match r.iter().find(|(_, c)| u < *c) {
            Some((j, _)) => *j,
            None => r[r.len() - 1].0,
        }
    }
}

/// Survival fractions at lattice steps `0..=t_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct SurvivalTable {
    pub lattice_scale: f64,
    pub samples: usize,
    pub confidence_z: f64,
    pub estimate: Vec<f64>,
    pub stderr: Vec<f64>,
}

impl SurvivalTable {
    /// An exact curve, with zero standard errors.
    pub fn exact(curve: Vec<f64>, lattice_scale: f64) -> Self {
        let n = curve.len();
        SurvivalTable {
            lattice_scale,
            samples: 0,
            confidence_z: DEFAULT_CONFIDENCE_Z,
            estimate: curve,
            stderr: vec![0.0; n],
        }
    }

    pub fn to_csv(&self) -> String {
        csv(
            &["t", "estimate", "stderr"],
            (0..self.estimate.len()).map(|t| {
                vec![
                    fmt17(t as f64 * self.lattice_scale),
                    fmt17(self.estimate[t]),
                    fmt17(self.stderr[t]),
                ]
            }),
        )
    }
}

/// Fraction of blocks drawn from `μ̄` whose first `t` lattice steps avoid the hole.
pub fn estimate_survival(sys: &SuspensionSystem, hole: &Hole, cfg: &SimulationConfig) -> Result<SurvivalTable> {
    cfg.validate()?;
    let order = hole.len().max(sys.order());
    let refined = sys.refined(order)?;
    let in_hole = BlockHole::from_hole(sys, hole).lift(sys, order)?.mask(&refined)?;
    let m = refined.block_matrix();
    let chain = Sampler::from_rows((0..m.nrows()).map(|i| {
        (0..m.ncols())
            .filter(|&j| m[(i, j)] > 0.0)
            .map(|j| (j, m[(i, j)]))
            .collect()
    }));
    let start = Sampler::from_rows(std::iter::once(
        refined.block_measure().iter().cloned().enumerate().collect(),
    ));
    let t_max = cfg.t_max;

    // hits[τ] counts samples first entering the hole at step τ; τ = t_max + 1 means never
    let hits = (0..cfg.samples)
        .into_par_iter()
        .fold(
            || vec![0u64; t_max + 2],
            |mut acc, i| {
                let mut rng = cfg.rng(i);
                let mut b = start.draw(0, &mut rng);
                let mut tau = t_max + 1;
                for t in 0..=t_max {
                    if in_hole[b] {
                        tau = t;
                        break;
                    }
                    if t < t_max {
                        b = chain.draw(b, &mut rng);
                    }
                }
                acc[tau] += 1;
                acc
            },
        )
        .reduce(
            || vec![0u64; t_max + 2],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );

    let n = cfg.samples as f64;
    let mut alive = cfg.samples as u64;
    let mut estimate = Vec::with_capacity(t_max + 1);
    let mut stderr = Vec::with_capacity(t_max + 1);
    for t in 0..=t_max {
        // survived through t means no hit at steps 0..t
        if t > 0 {
            alive -= hits[t - 1];
        }
        let p = alive as f64 / n;
        estimate.push(p);
        stderr.push((p * (1.0 - p) / n).sqrt());
    }
    Ok(SurvivalTable {
        lattice_scale: refined.lattice_scale(),
        samples: cfg.samples,
        confidence_z: cfg.confidence_z,
        estimate,
        stderr,
    })
}

pub const MIN_FIT_POINTS: usize = 5;

/// Bracket the escape rate from the decay between the first window point and
/// each later one, with the estimates widened by `z` standard errors.
pub fn fit_escape_rate(table: &SurvivalTable, window: std::ops::RangeInclusive<usize>) -> Result<EscapeRateEstimate> {
    let (t0, t1) = (*window.start(), *window.end());
    if t1 >= table.estimate.len() || t1 < t0 || t1 - t0 + 1 < MIN_FIT_POINTS {
        return Err(Error::InvalidInput(format!(
            "fit window {t0}..={t1} needs at least {MIN_FIT_POINTS} points inside 0..={}",
            table.estimate.len().saturating_sub(1)
        )));
    }
    if let Some(t) = (t0..=t1).find(|&t| table.estimate[t] <= 0.0) {
        return Err(Error::AllMassEscaped { t });
    }
    let z = table.confidence_z;
    let lo_est = |t: usize| table.estimate[t] - z * table.stderr[t];
    let hi_est = |t: usize| table.estimate[t] + z * table.stderr[t];
    let mut lower = f64::INFINITY;
    let mut upper = f64::NEG_INFINITY;
    for t in t0 + 1..=t1 {
        let dt = (t - t0) as f64 * table.lattice_scale;
        let slow = -(hi_est(t) / lo_est(t0).max(0.0)).ln() / dt;
        let fast = if lo_est(t) > 0.0 {
            -(lo_est(t) / hi_est(t0)).ln() / dt
        } else {
            f64::INFINITY
        };
        lower = lower.min(slow);
        upper = upper.max(fast);
    }
    let lower = lower.max(0.0);
    let mid = 0.5 * (upper + lower);
    Ok(EscapeRateEstimate {
        upper,
        lower,
        converged: upper.is_finite() && upper - lower < 0.1 * mid,
    })
}

/// `|S_lφ/l − μ(φ)| ≥ ε`, shared by the sampler and the exact oracle.
fn deviates(sum: f64, l: usize, mean: f64, epsilon: f64) -> bool {
    (sum / l as f64 - mean).abs() >= epsilon * (1.0 - 1e-12)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeviationRow {
    pub k: usize,
    pub p_hat: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeviationEstimate {
    pub epsilon: f64,
    pub mean: f64,
    /// Largest `l` in the sup.
    pub l_max: usize,
    pub samples: usize,
    pub rows: Vec<DeviationRow>,
    /// `exp` of the least-squares slope of `log p̂` against `k` on the tail.
    pub zeta_hat: Option<f64>,
}

impl DeviationEstimate {
    pub fn to_csv(&self) -> String {
        csv(
            &["k", "epsilon", "p_hat", "stderr"],
            self.rows
                .iter()
                .map(|r| vec![r.k.to_string(), fmt17(self.epsilon), fmt17(r.p_hat), fmt17(r.stderr)]),
        )
    }
}

pub fn l_max_for(k_values: &[usize]) -> usize {
    4 * k_values.iter().copied().max().unwrap_or(1)
}

/// Fraction of orbits with `sup_{k ≤ l ≤ L_max} |S_lφ/l − μ(φ)| ≥ ε`, `L_max = 4·max k`.
pub fn estimate_deviation_prob(
    shift: &MarkovShift,
    phi: &CylinderFunction,
    epsilon: f64,
    k_values: &[usize],
    cfg: &SimulationConfig,
) -> Result<DeviationEstimate> {
    cfg.validate()?;
    if epsilon.is_nan() || epsilon <= 0.0 {
        return Err(Error::InvalidInput(format!("epsilon = {epsilon} must be positive")));
    }
    if k_values.is_empty() || k_values.contains(&0) {
        return Err(Error::InvalidInput("k values must be positive".into()));
    }
    let l_max = l_max_for(k_values);
    let mean = phi.integral(shift);
    let n = phi.order();
    let alphabet = shift.alphabet_size();
    let chain = Sampler::from_rows((0..alphabet).map(|a| shift.successors(a).map(|b| (b, shift.p(a, b))).collect()));
    let start = Sampler::from_rows(std::iter::once(shift.stationary().iter().cloned().enumerate().collect()));
    // integer heights keep the sums exact when φ is arithmetic
    let heights = phi.heights().ok();
    let lambda = phi.lattice().unwrap_or(1.0);

    // last[l] counts samples whose largest deviating l is l (0 = never)
    let last = (0..cfg.samples)
        .into_par_iter()
        .fold(
            || vec![0u64; l_max + 1],
            |mut acc, i| {
                let mut rng = cfg.rng(i);
                let mut w = Vec::with_capacity(l_max + n);
                w.push(start.draw(0, &mut rng));
                while w.len() < l_max + n - 1 {
                    let b = chain.draw(w[w.len() - 1], &mut rng);
                    w.push(b);
                }
                let mut int_sum = 0u64;
                let mut sum = 0.0;
                let mut last_dev = 0;
                for l in 1..=l_max {
                    let win = &w[l - 1..l - 1 + n];
                    let s = match &heights {
                        Some(h) => {
                            int_sum += h[win];
                            int_sum as f64 * lambda
                        }
                        None => {
                            sum += phi.value(win);
                            sum
                        }
                    };
                    if deviates(s, l, mean, epsilon) {
                        last_dev = l;
                    }
                }
                acc[last_dev] += 1;
                acc
            },
        )
        .reduce(
            || vec![0u64; l_max + 1],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );

    let total = cfg.samples as f64;
    let rows: Vec<DeviationRow> = k_values
        .iter()
        .map(|&k| {
            let count: u64 = last[k..].iter().sum();
            let p = count as f64 / total;
            DeviationRow {
                k,
                p_hat: p,
                stderr: (p * (1.0 - p) / total).sqrt(),
            }
        })
        .collect();
    let zeta_hat = tail_decay(&rows.iter().map(|r| (r.k, r.p_hat)).collect::<Vec<_>>());
    Ok(DeviationEstimate {
        epsilon,
        mean,
        l_max,
        samples: cfg.samples,
        rows,
        zeta_hat,
    })
}

/// `exp(slope)` of `log p` against `k` over the upper half of the positive points.
pub fn tail_decay(points: &[(usize, f64)]) -> Option<f64> {
    let pos: Vec<(f64, f64)> = points
        .iter()
        .filter(|(_, p)| *p > 0.0)
        .map(|(k, p)| (*k as f64, p.ln()))
        .collect();
    if pos.len() < 2 {
        return None;
    }
    let tail = &pos[(pos.len() / 2).min(pos.len() - 2)..];
    let n = tail.len() as f64;
    let mx = tail.iter().map(|p| p.0).sum::<f64>() / n;
    let my = tail.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = tail.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = tail.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    Some((sxy / sxx).exp())
}

/// Exact `P_k^ε` with the same `L_max` truncation, by a dynamic program over
/// the current `n`-window and the integer height sum.
pub fn exact_deviation_prob(
    shift: &MarkovShift,
    phi: &CylinderFunction,
    epsilon: f64,
    k: usize,
    l_max: usize,
) -> Result<f64> {
    let heights = phi.heights()?;
    let lambda = phi.lattice().ok_or(Error::NonArithmeticCeiling)?;
    let mean = phi.integral(shift);
    let mut absorbed = 0.0;
    let mut layer: HashMap<(Vec<usize>, u64), f64> = HashMap::new();
    for w in shift.admissible_words(phi.order()) {
        let p = shift.stationary()[w[0]] * shift.path_weight(&w);
        *layer.entry((w.clone(), heights[&w])).or_default() += p;
    }
    for l in 1..=l_max {
        if l >= k {
            layer.retain(|(_, s), p| {
                if deviates(*s as f64 * lambda, l, mean, epsilon) {
                    absorbed += *p;
                    false
                } else {
                    true
                }
            });
        }
        if l == l_max {
            break;
        }
        let mut next: HashMap<(Vec<usize>, u64), f64> = HashMap::new();
        for ((w, s), p) in layer {
            let last = w[w.len() - 1];
            for b in shift.successors(last) {
                let mut x = w[1..].to_vec();
                x.push(b);
                let h = heights[&x];
                *next.entry((x, s + h)).or_default() += p * shift.p(last, b);
            }
        }
        layer = next;
    }
    Ok(absorbed)
}
