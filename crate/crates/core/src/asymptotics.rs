//! Shrinking holes `A_ν = [x₁…x_{νp}]` around a periodic point.
//!
//! The open zeta function splits as `f_ν = g₁ + μ_ν·g₂,ν` with `g₁`
//! independent of `ν`. Zeroing the coefficients of `μ_ν, …, μ_νᵏ` in
//! `f_ν(1 + s₁μ_ν + … + s_kμ_νᵏ)` gives the expansion coefficients `s_i`.
//! Everything here works on the normalized (integer-height) lattice;
//! `*_external` accessors convert to the ceiling's own time unit.

use crate::error::{Error, Result};
use crate::io::{csv, fmt17};
use crate::open::Hole;
use crate::shift::{CylinderFunction, MarkovShift, Word};
use crate::suspension::{build_suspension, SuspensionSystem};
use crate::zeta::{self, Polynomial, RationalFunction, ZetaBundle};

#[derive(Debug, Clone)]
pub struct PeriodicOrbitFamily {
    sys: SuspensionSystem,
    base_word: Vec<usize>,
    pub p: usize,
    /// Ceiling order after padding to a multiple of `p`.
    pub n: usize,
    /// `S_pφ(x)` in lattice units.
    pub o: usize,
    pub c_o: f64,
    pub mu_w: f64,
    pub mu_t: f64,
    pub nu_min: usize,
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 { a } else { gcd(b, a % b) }
}

fn smallest_period(w: &[usize]) -> usize {
    let p = w.len();
    (1..=p)
        .find(|&d| p.is_multiple_of(d) && (0..p).all(|i| w[i] == w[(i + d) % p]))
        .expect("the full length is a period")
}

pub fn build_family(
    shift: &MarkovShift,
    ceiling: &CylinderFunction,
    base_word: &[usize],
) -> Result<PeriodicOrbitFamily> {
    let x = base_word.to_vec();
    let p = x.len();
    shift.check_admissible(&x)?;
    if shift.p(x[p - 1], x[0]) <= 0.0 {
        return Err(Error::NotCyclicallyAdmissible { word: x });
    }
    let period = smallest_period(&x);
    if period != p {
        return Err(Error::NotPrimePeriod { word: x, period });
    }
    let doubled: Vec<usize> = x.iter().chain(x.iter()).copied().collect();
    if !shift.is_reduced(&Word::new(doubled)?)? {
        return Err(Error::NotReduced { word: x });
    }
    let n = ceiling.order() / gcd(ceiling.order(), p) * p;
    let padded = ceiling.refine(shift, n)?;
    let sys = build_suspension(shift, &padded)?;

    let mut cycle = x.clone();
    cycle.push(x[0]);
    let c_o = shift.path_weight(&cycle);
    if c_o >= 1.0 {
        return Err(Error::NonShrinkingFamily { c_o });
    }
    let long = repeat(&x, (p + n) / p + 1);
    let o = sys.lap_sum(&long, p);
    let mu_w = shift.cylinder_measure(&Word::new(x.clone())?)?;
    let mu_t = shift.cylinder_measure(&Word::new(long[..n].to_vec())?)?;
    Ok(PeriodicOrbitFamily {
        sys,
        base_word: x,
        p,
        n,
        o,
        c_o,
        mu_w,
        mu_t,
        nu_min: n / p + 1,
    })
}

fn repeat(x: &[usize], times: usize) -> Vec<usize> {
    x.iter().copied().cycle().take(x.len() * times).collect()
}

impl PeriodicOrbitFamily {
    pub fn system(&self) -> &SuspensionSystem {
        &self.sys
    }

    pub fn base_word(&self) -> &[usize] {
        &self.base_word
    }

    fn check_nu(&self, nu: usize) -> Result<()> {
        if nu < self.nu_min {
            return Err(Error::InvalidInput(format!(
                "nu = {nu} is below nu_min = {}",
                self.nu_min
            )));
        }
        Ok(())
    }

    pub fn hole_word(&self, nu: usize) -> Vec<usize> {
        repeat(&self.base_word, nu)
    }

    pub fn hole(&self, nu: usize) -> Result<Hole> {
        Hole::from_symbols(self.sys.base(), &self.hole_word(nu))
    }

    /// `μ(A_ν) = (μ_w/c_o)·c_oᵛ`
    pub fn mu_nu(&self, nu: usize) -> f64 {
        self.mu_w * self.c_o.powi(nu as i32 - 1)
    }

    pub fn k0(&self, nu: usize) -> usize {
        (nu - self.n / self.p) * self.o
    }

    pub fn s(&self, nu: usize) -> usize {
        nu - self.n / self.p
    }

    /// `μ(φ)` on the normalized lattice.
    pub fn total_mass(&self) -> f64 {
        self.sys.total_mass()
    }

    pub fn lattice_scale(&self) -> f64 {
        self.sys.lattice_scale()
    }

    /// `(1 − c_o)/μ(φ)` in external units.
    pub fn local_rate(&self) -> f64 {
        (1.0 - self.c_o) / self.sys.mean_ceiling()
    }

    pub fn bundle(&self, nu: usize) -> Result<ZetaBundle> {
        self.check_nu(nu)?;
        zeta::zeta_op_factorized(&self.sys, &self.hole(nu)?)
    }

    fn denominator(&self) -> Polynomial {
        &Polynomial::one() - &Polynomial::monomial(self.c_o, self.o)
    }

    /// `g₁ = (1 − z)·G/(1 − c_o z^o)`
    pub fn g1(&self, bundle: &ZetaBundle) -> RationalFunction {
        RationalFunction::new(bundle.zeta_cl.clone(), self.denominator())
    }

    /// `g₂,ν` over the common denominator `1 − c_o z^o`.
    pub fn g2(&self, bundle: &ZetaBundle, nu: usize) -> RationalFunction {
        let den = self.denominator();
        let first = (&bundle.cofactor_tr * &den)
            .shift_up(self.k0(nu))
            .scale(1.0 / self.mu_t);
        let weight = self.c_o.powf(1.0 - self.n as f64 / self.p as f64) / self.mu_w;
        let second = bundle.zeta_cl.shift_up(self.o * self.s(nu)).scale(weight);
        RationalFunction::new(&first - &second, den)
    }

    /// Smallest zero `z_ν ≥ 1` of `f_ν`, searched in `[1, 1 + γμ_ν]` with
    /// `γ = 4s₁` doubled until the bracket holds a root.
    pub fn z_nu(&self, nu: usize) -> Result<f64> {
        Ok(1.0 + self.offset_nu(nu)?)
    }

    /// `z_ν − 1`, kept separately since it is of the order of `μ_ν`.
    pub fn offset_nu(&self, nu: usize) -> Result<f64> {
        let bundle = self.bundle(nu)?;
        self.offset_from_bundle(&bundle, nu)
    }

    fn offset_from_bundle(&self, bundle: &ZetaBundle, nu: usize) -> Result<f64> {
        let s1 = (1.0 - self.c_o) / self.total_mass();
        let mut gamma = 4.0 * s1;
        loop {
            let hi = gamma * self.mu_nu(nu);
            match zeta::smallest_root_geq_one(&bundle.zeta_op, 1.0 + hi) {
                Err(Error::NoSignChange { .. }) if gamma < 1e12 => gamma *= 2.0,
                // below ~1e-12 the expanded polynomial cannot tell z_ν from 1
                Ok(z) if z - 1.0 < 1e-9 => {
                    if let Some(d) = bundle.offset_in(hi) {
                        return Ok(d);
                    }
                    return Ok(bundle.polish_offset(z));
                }
                other => return other.map(|z| bundle.polish_offset(z)),
            }
        }
    }

    /// `ρ(A_ν, φ)` in external units.
    pub fn rho(&self, nu: usize) -> Result<f64> {
        Ok(self.offset_nu(nu)?.ln_1p() / self.lattice_scale())
    }
}

/// `s₁ … s_k` in normalized units at a fixed `ν`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpansionCoefficients {
    pub s: Vec<f64>,
    pub nu: usize,
    pub k: usize,
    pub lattice_scale: f64,
}

impl ExpansionCoefficients {
    /// `s_i / λ^i`, the coefficients for a ceiling measured in external time.
    pub fn external(&self) -> Vec<f64> {
        self.s
            .iter()
            .enumerate()
            .map(|(i, s)| s / self.lattice_scale.powi(i as i32 + 1))
            .collect()
    }

    /// `Σ s_i μⁱ`
    pub fn increment(&self, mu: f64) -> f64 {
        self.s.iter().enumerate().map(|(i, s)| s * mu.powi(i as i32 + 1)).sum()
    }

    pub fn partial_sum(&self, mu: f64) -> f64 {
        1.0 + self.increment(mu)
    }
}

/// Truncated product of two power series.
fn series_mul(a: &[f64], b: &[f64], len: usize) -> Vec<f64> {
    let mut out = vec![0.0; len];
    for (i, x) in a.iter().enumerate().take(len) {
        for (j, y) in b.iter().enumerate().take(len - i) {
            out[i + j] += x * y;
        }
    }
    out
}

/// `Σ_l coeffs[l]·wˡ` as a power series in `μ`, truncated at degree `len − 1`.
fn compose(coeffs: &[f64], w: &[f64], len: usize) -> Vec<f64> {
    let mut out = vec![0.0; len];
    let mut power = vec![0.0; len];
    power[0] = 1.0;
    for c in coeffs {
        for (o, p) in out.iter_mut().zip(&power) {
            *o += c * p;
        }
        power = series_mul(&power, w, len);
    }
    out
}

/// Solve for `s₁…s_k` from the Taylor coefficients of `g₁` and `g₂,ν` at 1.
pub fn solve_coefficients(g1: &[f64], g2: &[f64], k: usize) -> Result<Vec<f64>> {
    let a1 = g1.get(1).copied().unwrap_or(0.0);
    if a1.abs() < 1e-12 {
        return Err(Error::DegenerateLinearTerm { value: a1 });
    }
    let len = k + 1;
    let mut w = vec![0.0; len];
    for j in 1..=k {
        w[j] = 0.0;
        let f1 = compose(&g1[..len.min(g1.len())], &w, len);
        let f2 = compose(&g2[..k.min(g2.len())], &w, len);
        let coeff = f1[j] + f2[j - 1];
        w[j] = -coeff / a1;
    }
    Ok(w[1..].to_vec())
}

pub fn expansion_coeffs(fam: &PeriodicOrbitFamily, nu: usize, k: usize) -> Result<ExpansionCoefficients> {
    let bundle = fam.bundle(nu)?;
    expansion_from_bundle(fam, &bundle, nu, k)
}

fn expansion_from_bundle(
    fam: &PeriodicOrbitFamily,
    bundle: &ZetaBundle,
    nu: usize,
    k: usize,
) -> Result<ExpansionCoefficients> {
    if k == 0 {
        return Err(Error::InvalidInput("expansion order k must be >= 1".into()));
    }
    let t1 = zeta::taylor_at_one(&fam.g1(bundle), k)?;
    let t2 = zeta::taylor_at_one(&fam.g2(bundle, nu), k)?;
    let s = solve_coefficients(&t1, &t2, k)?;
    Ok(ExpansionCoefficients {
        s,
        nu,
        k,
        lattice_scale: fam.lattice_scale(),
    })
}

/// Closed forms of `s₁, s₂` (normalized units).
pub fn s1_s2_closed_form(fam: &PeriodicOrbitFamily, nu: usize) -> Result<(f64, f64)> {
    let bundle = fam.bundle(nu)?;
    Ok(closed_form_from_bundle(fam, &bundle, nu))
}

fn closed_form_from_bundle(fam: &PeriodicOrbitFamily, bundle: &ZetaBundle, nu: usize) -> (f64, f64) {
    let mass = fam.total_mass();
    let c_o = fam.c_o;
    let s1 = (1.0 - c_o) / mass;
    let g = &bundle.g;
    let c = &bundle.cofactor_tr;
    let bracket = fam.k0(nu) as f64 - g.derivative().eval(1.0) / g.eval(1.0)
        - c_o * fam.o as f64 / (1.0 - c_o)
        + c.derivative().eval(1.0) / c.eval(1.0)
        + mass * c_o.powf(1.0 - fam.n as f64 / fam.p as f64) / (fam.mu_w * (1.0 - c_o));
    (s1, s1 * s1 * bracket)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpansionRow {
    pub nu: usize,
    pub mu_nu: f64,
    pub z_nu: f64,
    pub s1: f64,
    pub s2: f64,
    pub partial_sum: f64,
    pub residual_over_mu_k: f64,
}

/// `|z_ν − (1 + Σ s_i μ_νⁱ)| / μ_νᵏ` along `ν`.
pub fn verify_expansion(
    fam: &PeriodicOrbitFamily,
    nus: impl IntoIterator<Item = usize>,
    k: usize,
) -> Result<Vec<ExpansionRow>> {
    nus.into_iter()
        .map(|nu| {
            let bundle = fam.bundle(nu)?;
            let delta = fam.offset_from_bundle(&bundle, nu)?;
            let coeffs = expansion_from_bundle(fam, &bundle, nu, k.max(2))?;
            let mu = fam.mu_nu(nu);
            let truncated = ExpansionCoefficients {
                s: coeffs.s[..k].to_vec(),
                ..coeffs.clone()
            };
            let tail = truncated.increment(mu);
            Ok(ExpansionRow {
                nu,
                mu_nu: mu,
                z_nu: 1.0 + delta,
                s1: coeffs.s[0],
                s2: coeffs.s[1],
                partial_sum: 1.0 + tail,
                residual_over_mu_k: (delta - tail).abs() / mu.powi(k as i32),
            })
        })
        .collect()
}

pub fn expansion_csv(rows: &[ExpansionRow]) -> String {
    csv(
        &["nu", "mu_nu", "z_nu", "s1", "s2", "partial_sum", "residual_over_mu_k"],
        rows.iter().map(|r| {
            vec![
                r.nu.to_string(),
                fmt17(r.mu_nu),
                fmt17(r.z_nu),
                fmt17(r.s1),
                fmt17(r.s2),
                fmt17(r.partial_sum),
                fmt17(r.residual_over_mu_k),
            ]
        }),
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct SecondOrderRow {
    pub nu: usize,
    pub mu_nu: f64,
    pub rho: f64,
    /// `(ρ(A_ν) − s₁μ_ν)/(ν·μ_ν²)`
    pub value: f64,
}

/// Rows converging to `s₁²·S_pφ(x)`, all in external units.
pub fn second_order_check(
    fam: &PeriodicOrbitFamily,
    nus: impl IntoIterator<Item = usize>,
) -> Result<Vec<SecondOrderRow>> {
    let s1 = fam.local_rate();
    nus.into_iter()
        .map(|nu| {
            let rho = fam.rho(nu)?;
            let mu = fam.mu_nu(nu);
            Ok(SecondOrderRow {
                nu,
                mu_nu: mu,
                rho,
                value: (rho - s1 * mu) / (nu as f64 * mu * mu),
            })
        })
        .collect()
}

/// `s₁²·S_pφ(x)` in external units.
pub fn second_order_limit(fam: &PeriodicOrbitFamily) -> f64 {
    let s1 = fam.local_rate();
    s1 * s1 * fam.o as f64 * fam.lattice_scale()
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalRateRow {
    pub nu: usize,
    pub mu_nu: f64,
    /// `ρ(A_ν, φ)/μ_ν`
    pub ratio: f64,
    /// `ρ(A_ν, 𝟙)/μ_ν`
    pub ratio_unit: f64,
}

/// `ρ(A_ν, φ)/μ_ν` next to the base-system ratio `ρ(A_ν, 𝟙)/μ_ν`.
pub fn local_rate_sweep(
    shift: &MarkovShift,
    ceiling: &CylinderFunction,
    base_word: &[usize],
    nus: impl IntoIterator<Item = usize>,
) -> Result<Vec<LocalRateRow>> {
    let fam = build_family(shift, ceiling, base_word)?;
    let unit = build_family(shift, &CylinderFunction::ones(shift), base_word)?;
    nus.into_iter()
        .map(|nu| {
            let mu = fam.mu_nu(nu);
            Ok(LocalRateRow {
                nu,
                mu_nu: mu,
                ratio: fam.rho(nu)? / mu,
                ratio_unit: unit.rho(nu)? / mu,
            })
        })
        .collect()
}

pub fn local_rate_csv(rows: &[LocalRateRow]) -> String {
    csv(
        &["nu", "mu_nu", "rho_over_mu", "rho_unit_over_mu"],
        rows.iter().map(|r| {
            vec![
                r.nu.to_string(),
                fmt17(r.mu_nu),
                fmt17(r.ratio),
                fmt17(r.ratio_unit),
            ]
        }),
    )
}
