#![allow(dead_code)]

use suspension_escape::open::{escape_rate_blocks, escape_rate_flow, BlockHole, Hole};
use suspension_escape::pressure::{gibbs_potential, induced_pressure_via_root, WordCollection};
use suspension_escape::suspension::{build_suspension, rationalize_ceiling, SuspensionSystem};
use suspension_escape::{CylinderFunction, MarkovShift};

pub fn full2() -> MarkovShift {
    MarkovShift::full(2)
}

pub fn biased2() -> MarkovShift {
    MarkovShift::new(&[vec![0.9, 0.1], vec![0.2, 0.8]]).unwrap()
}

pub fn sparse3() -> MarkovShift {
    MarkovShift::new(&[vec![0.5, 0.3, 0.2], vec![0.2, 0.5, 0.3], vec![0.4, 0.0, 0.6]]).unwrap()
}

pub fn systems() -> Vec<(&'static str, MarkovShift)> {
    vec![
        ("full2", full2()),
        ("biased2", biased2()),
        ("sparse3", sparse3()),
        ("full3", MarkovShift::full(3)),
    ]
}

pub fn stepped(s: &MarkovShift) -> CylinderFunction {
    CylinderFunction::from_fn(s, 1, |w| 1.0 + (w[0] == 1) as u8 as f64)
        .unwrap()
        .with_lattice(1.0)
        .unwrap()
}

pub fn ceilings(s: &MarkovShift) -> Vec<(&'static str, CylinderFunction)> {
    vec![
        ("one", CylinderFunction::ones(s)),
        ("stepped", stepped(s)),
        (
            "half",
            CylinderFunction::from_fn(s, 1, |w| 1.0 + 0.5 * (w[0] == 0) as u8 as f64)
                .unwrap()
                .with_lattice(0.5)
                .unwrap(),
        ),
        (
            "pairs",
            CylinderFunction::from_fn(s, 2, |w| 1.0 + ((w[0] + w[1]) % 2) as f64)
                .unwrap()
                .with_lattice(1.0)
                .unwrap(),
        ),
    ]
}

pub struct Cell {
    pub name: String,
    pub sys: SuspensionSystem,
    pub hole: Hole,
}

/// Reduced holes one and two symbols longer than the ceiling order.
pub fn zeta_grid() -> Vec<Cell> {
    let mut out = Vec::new();
    for (sn, s) in systems() {
        for (cn, phi) in ceilings(&s) {
            let sys = build_suspension(&s, &phi).unwrap();
            let n = phi.order();
            for len in n + 1..=n + 2 {
                for w in s.admissible_words(len) {
                    let hole = Hole::from_symbols(&s, &w).unwrap();
                    if s.is_reduced(hole.word()).unwrap() {
                        out.push(Cell {
                            name: format!("{sn}/{cn}/{w:?}"),
                            sys: sys.clone(),
                            hole,
                        });
                    }
                }
            }
        }
    }
    out
}

/// Holes of length at most 3 on the 2-symbol systems and 2 on the others.
pub fn pressure_grid() -> Vec<Cell> {
    let mut out = Vec::new();
    for (sn, s) in systems() {
        let max_len = if s.alphabet_size() == 2 { 3 } else { 2 };
        for (cn, phi) in ceilings(&s) {
            let sys = build_suspension(&s, &phi).unwrap();
            for len in 1..=max_len {
                for w in s.admissible_words(len) {
                    out.push(Cell {
                        name: format!("{sn}/{cn}/{w:?}"),
                        sys: sys.clone(),
                        hole: Hole::from_symbols(&s, &w).unwrap(),
                    });
                }
            }
        }
    }
    out
}

pub struct FamilySpec {
    pub name: &'static str,
    pub shift: MarkovShift,
    pub ceiling: CylinderFunction,
    pub word: Vec<usize>,
}

/// Periodic points whose orbit weight `c_o` lies in `[1/3, 1/2]`.
pub fn family_grid() -> Vec<FamilySpec> {
    let f2 = full2();
    let s3 = sparse3();
    let f3 = MarkovShift::full(3);
    let pairs = |s: &MarkovShift| ceilings(s).pop().unwrap().1;
    vec![
        FamilySpec { name: "full2/one/0", ceiling: CylinderFunction::ones(&f2), shift: f2.clone(), word: vec![0] },
        FamilySpec { name: "full2/stepped/1", ceiling: stepped(&f2), shift: f2.clone(), word: vec![1] },
        FamilySpec { name: "full2/stepped/0", ceiling: stepped(&f2), shift: f2.clone(), word: vec![0] },
        FamilySpec { name: "full2/pairs/0", ceiling: pairs(&f2), shift: f2.clone(), word: vec![0] },
        FamilySpec { name: "sparse3/one/0", ceiling: CylinderFunction::ones(&s3), shift: s3.clone(), word: vec![0] },
        FamilySpec { name: "sparse3/stepped/1", ceiling: stepped(&s3), shift: s3.clone(), word: vec![1] },
        FamilySpec { name: "full3/stepped/2", ceiling: stepped(&f3), shift: f3.clone(), word: vec![2] },
    ]
}

pub fn rho(sys: &SuspensionSystem, hole: &Hole) -> f64 {
    escape_rate_flow(sys, hole).unwrap().upper
}

/// Random material for the property suites.
#[derive(Debug, Clone)]
pub struct Sample {
    pub rows: Vec<Vec<f64>>,
    pub heights: Vec<u32>,
    pub extra: Vec<u32>,
    pub hole: Vec<usize>,
    pub scale: f64,
    pub chi: Vec<i32>,
    pub jitter: Vec<f64>,
}

impl Sample {
    pub fn shift(&self) -> MarkovShift {
        MarkovShift::new(&self.rows).unwrap()
    }

    pub fn ceiling(&self, s: &MarkovShift, h: &[u32]) -> CylinderFunction {
        CylinderFunction::from_fn(s, 1, |w| h[w[0]] as f64)
            .unwrap()
            .with_lattice(1.0)
            .unwrap()
    }

    pub fn hole(&self, s: &MarkovShift) -> Hole {
        Hole::from_symbols(s, &self.hole).unwrap()
    }
}

pub mod strategies {
    use super::Sample;
    use proptest::prelude::*;

    /// Strictly positive rows, so every word is admissible.
    fn rows(n: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
        prop::collection::vec(prop::collection::vec(0.05f64..1.0, n), n).prop_map(|rows| {
            rows.into_iter()
                .map(|r| {
                    let s: f64 = r.iter().sum();
                    r.into_iter().map(|x| x / s).collect()
                })
                .collect()
        })
    }

    pub fn sample() -> impl Strategy<Value = Sample> {
        (2usize..=3)
            .prop_flat_map(|n| {
                (
                    rows(n),
                    prop::collection::vec(1u32..=3, n),
                    prop::collection::vec(0u32..=2, n),
                    prop::collection::vec(0..n, 1..=3),
                    0.25f64..4.0,
                    prop::collection::vec(-1i32..=1, n),
                    prop::collection::vec(0.0f64..1.0, n),
                )
            })
            .prop_map(|(rows, heights, extra, hole, scale, chi, jitter)| Sample {
                rows,
                heights,
                extra,
                hole,
                scale,
                chi,
                jitter,
            })
    }
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}

/// `A ⊂ B` gives `ρ(A) ≤ ρ(B)`.
pub fn hole_monotonicity(x: &Sample) -> Result<(), String> {
    let s = x.shift();
    let sys = build_suspension(&s, &x.ceiling(&s, &x.heights)).unwrap();
    let big = x.hole(&s);
    let mut longer = x.hole.clone();
    longer.push(x.hole[0]);
    let small = Hole::from_symbols(&s, &longer).unwrap();
    let (rb, rs) = (rho(&sys, &big), rho(&sys, &small));
    if rs <= rb + 1e-12 {
        Ok(())
    } else {
        Err(format!("rho({longer:?}) = {rs} > rho({:?}) = {rb}", x.hole))
    }
}

/// `φ ≤ ψ` gives `ρ(φ) ≥ ρ(ψ)`.
pub fn ceiling_monotonicity(x: &Sample) -> Result<(), String> {
    let s = x.shift();
    let hole = x.hole(&s);
    let higher: Vec<u32> = x.heights.iter().zip(&x.extra).map(|(h, e)| h + e).collect();
    let lo = rho(&build_suspension(&s, &x.ceiling(&s, &x.heights)).unwrap(), &hole);
    let hi = rho(&build_suspension(&s, &x.ceiling(&s, &higher)).unwrap(), &hole);
    if hi <= lo * (1.0 + 1e-12) + 1e-14 {
        Ok(())
    } else {
        Err(format!("raising the ceiling raised the rate: {lo} -> {hi}"))
    }
}

/// `ρ(A, λφ) = ρ(A, φ)/λ`.
pub fn scaling(x: &Sample) -> Result<(), String> {
    let s = x.shift();
    let hole = x.hole(&s);
    let phi = x.ceiling(&s, &x.heights);
    let r = rho(&build_suspension(&s, &phi).unwrap(), &hole);
    let rs = rho(&build_suspension(&s, &phi.scaled(x.scale)).unwrap(), &hole);
    if (rs - r / x.scale).abs() <= 1e-10 {
        Ok(())
    } else {
        Err(format!("rho(lambda phi) = {rs}, rho(phi)/lambda = {}", r / x.scale))
    }
}

/// Adding `χ∘θ − χ` leaves the rate unchanged.
pub fn coboundary(x: &Sample) -> Result<(), String> {
    let s = x.shift();
    let hole = x.hole(&s);
    // lift the heights so the perturbed ceiling stays positive
    let h: Vec<u32> = x.heights.iter().map(|h| h + 2).collect();
    let phi = x.ceiling(&s, &h);
    let chi = CylinderFunction::from_fn(&s, 1, |w| x.chi[w[0]] as f64)
        .unwrap()
        .with_lattice(1.0)
        .unwrap();
    let moved = phi.plus_coboundary(&s, &chi).unwrap().with_lattice(1.0).unwrap();
    let r0 = rho(&build_suspension(&s, &phi).unwrap(), &hole);
    let r1 = rho(&build_suspension(&s, &moved).unwrap(), &hole);
    if (r0 - r1).abs() <= 1e-9 {
        Ok(())
    } else {
        Err(format!("coboundary changed the rate: {r0} -> {r1}"))
    }
}

/// `ρ(φ)` from the pressure root and `ρ(ψ)` for the rounded ceiling, with `q = e/inf φ`.
fn sandwich_parts(x: &Sample) -> (f64, f64, f64) {
    let s = x.shift();
    let hole = x.hole(&s);
    let phi = CylinderFunction::from_fn(&s, 1, |w| x.heights[w[0]] as f64 + 0.5 * x.jitter[w[0]] + 0.01).unwrap();
    let pot = gibbs_potential(&s).unwrap();
    let exact = -induced_pressure_via_root(&pot, &phi, &WordCollection::new(hole.clone())).unwrap();
    let (psi, e) = rationalize_ceiling(&phi, 0.2).unwrap();
    let approx = rho(&build_suspension(&s, &psi).unwrap(), &hole);
    (exact, approx, e / phi.inf())
}

fn bracket(approx: f64, lo: f64, hi: f64) -> Result<(), String> {
    if lo - 1e-10 <= approx && approx <= hi + 1e-10 {
        Ok(())
    } else {
        Err(format!("rho(psi) = {approx} outside [{lo}, {hi}]"))
    }
}

/// `(1 − q)·ρ(φ) ≤ ρ(ψ) ≤ (1 + q)·ρ(φ)` as literally stated.
pub fn continuity_sandwich_linear(x: &Sample) -> Result<(), String> {
    let (exact, approx, q) = sandwich_parts(x);
    bracket(approx, (1.0 - q) * exact, (1.0 + q) * exact)
}

/// `ρ(φ)/(1 + q) ≤ ρ(ψ) ≤ ρ(φ)/(1 − q)`, from monotonicity and scaling.
pub fn continuity_sandwich(x: &Sample) -> Result<(), String> {
    let (exact, approx, q) = sandwich_parts(x);
    bracket(approx, exact / (1.0 + q), exact / (1.0 - q))
}

/// Every level of a block column casts the same shadow.
pub fn block_shadow(x: &Sample) -> Result<(), String> {
    let s = x.shift();
    let h: Vec<u32> = x.heights.iter().map(|h| h + 1).collect();
    let sys = build_suspension(&s, &x.ceiling(&s, &h)).unwrap();
    let a = x.hole[0];
    let levels = h[a] as usize;
    let rates: Vec<f64> = (0..levels)
        .map(|l| escape_rate_blocks(&sys, &BlockHole::single(&[a], l)).unwrap().upper)
        .collect();
    if rates.iter().all(|r| (r - rates[0]).abs() <= 1e-10) {
        Ok(())
    } else {
        Err(format!("levels of [{a}] give {rates:?}"))
    }
}

/// `1/ρ(φ₁+φ₂) ≤ 1/ρ(φ₁) + 1/ρ(φ₂)`.
pub fn reciprocal_sublinearity(x: &Sample) -> Result<(), String> {
    let s = x.shift();
    let hole = x.hole(&s);
    let phi1 = x.ceiling(&s, &x.heights);
    let h2: Vec<u32> = x.extra.iter().map(|e| e + 1).collect();
    let phi2 = x.ceiling(&s, &h2);
    let sum = phi1.sum(&s, &phi2).unwrap().with_lattice(1.0).unwrap();
    let r = |f: &CylinderFunction| rho(&build_suspension(&s, f).unwrap(), &hole);
    let (r1, r2, r12) = (r(&phi1), r(&phi2), r(&sum));
    if 1.0 / r12 <= 1.0 / r1 + 1.0 / r2 + 1e-10 {
        Ok(())
    } else {
        Err(format!("1/rho12 = {} > {}", 1.0 / r12, 1.0 / r1 + 1.0 / r2))
    }
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    rel_close(a, b, tol)
}
