//! Polynomials in `z`, characteristic polynomials `det(id - zM)`, cofactors,
//! the weighted correlation polynomial and the factorized open zeta function.

use std::ops::{Add, Mul, Sub};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::open::{self, Hole, HoleQuantities};
use crate::suspension::SuspensionSystem;

/// Largest matrix accepted by [`char_poly`].
pub const CHAR_POLY_DIM_CAP: usize = 400;
/// Coefficient tolerance for the factorization and deflation checks.
pub const IDENTITY_TOL: f64 = 1e-9;

/// Real polynomial with ascending coefficients. The zero polynomial has no coefficients.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

impl Polynomial {
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        while coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        Polynomial { coeffs }
    }

    pub fn one() -> Self {
        Polynomial::new(vec![1.0])
    }

    /// `c · z^k`
    pub fn monomial(c: f64, k: usize) -> Self {
        let mut v = vec![0.0; k + 1];
        v[k] = c;
        Polynomial::new(v)
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    /// Coefficient of `z^k` (zero beyond the degree).
    pub fn coeff(&self, k: usize) -> f64 {
        self.coeffs.get(k).copied().unwrap_or(0.0)
    }

    /// Degree; `0` for constants and for the zero polynomial.
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn eval(&self, z: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * z + c)
    }

    /// `Σ |c_k| |z|^k`, the natural scale of rounding errors in [`eval`](Self::eval).
    pub fn abs_eval(&self, z: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * z.abs() + c.abs())
    }

    pub fn derivative(&self) -> Self {
        Polynomial::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| k as f64 * c)
                .collect(),
        )
    }

    pub fn scale(&self, s: f64) -> Self {
        Polynomial::new(self.coeffs.iter().map(|c| c * s).collect())
    }

    /// `z^k · self`
    pub fn shift_up(&self, k: usize) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        let mut v = vec![0.0; k];
        v.extend_from_slice(&self.coeffs);
        Polynomial::new(v)
    }

    /// Coefficients of `q(w) = p(a + w)`.
    pub fn taylor_shift(&self, a: f64) -> Self {
        let mut c = self.coeffs.clone();
        let d = c.len();
        for i in 0..d {
            for j in (i..d.saturating_sub(1)).rev() {
                c[j] += a * c[j + 1];
            }
        }
        Polynomial::new(c)
    }

    /// Largest absolute coefficient difference.
    pub fn max_deviation(&self, other: &Self) -> f64 {
        let n = self.coeffs.len().max(other.coeffs.len());
        (0..n)
            .map(|k| (self.coeff(k) - other.coeff(k)).abs())
            .fold(0.0, f64::max)
    }
}

impl Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Polynomial::new((0..n).map(|k| self.coeff(k) + rhs.coeff(k)).collect())
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Polynomial::new((0..n).map(|k| self.coeff(k) - rhs.coeff(k)).collect())
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        if self.is_zero() || rhs.is_zero() {
            return Polynomial::default();
        }
        let mut v = vec![0.0; self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in rhs.coeffs.iter().enumerate() {
                v[i + j] += a * b;
            }
        }
        Polynomial::new(v)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RationalFunction {
    pub numerator: Polynomial,
    pub denominator: Polynomial,
}

impl RationalFunction {
    pub fn new(numerator: Polynomial, denominator: Polynomial) -> Self {
        RationalFunction {
            numerator,
            denominator,
        }
    }

    pub fn eval(&self, z: f64) -> f64 {
        self.numerator.eval(z) / self.denominator.eval(z)
    }

    /// First `order + 1` Taylor coefficients at `z = 1`.
    pub fn taylor_at_one(&self, order: usize) -> Result<Vec<f64>> {
        taylor_at_one(self, order)
    }
}

/// Taylor coefficients of `f` at `z = 1`, by re-centring both polynomials
/// at 1 and dividing the truncated series.
pub fn taylor_at_one(f: &RationalFunction, order: usize) -> Result<Vec<f64>> {
    let num = f.numerator.taylor_shift(1.0);
    let den = f.denominator.taylor_shift(1.0);
    let d0 = den.coeff(0);
    if d0 == 0.0 || d0.abs() <= 1e-14 * f.denominator.abs_eval(1.0) {
        return Err(Error::PoleAtOne);
    }
    let mut q = Vec::with_capacity(order + 1);
    for j in 0..=order {
        let s: f64 = (1..=j).map(|i| den.coeff(i) * q[j - i]).sum();
        q.push((num.coeff(j) - s) / d0);
    }
    Ok(q)
}

/// `det(id - z·M)` by the Faddeev-LeVerrier trace recursion.
pub fn char_poly(m: &DMatrix<f64>) -> Result<Polynomial> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(Error::NotSquare);
    }
    if n > CHAR_POLY_DIM_CAP {
        return Err(Error::DimensionTooLarge {
            dim: n,
            cap: CHAR_POLY_DIM_CAP,
        });
    }
    // c[j] is the coefficient of λ^j in det(λ - M)
    let mut c = vec![0.0; n + 1];
    c[n] = 1.0;
    let mut mk = DMatrix::<f64>::zeros(n, n);
    for k in 1..=n {
        let mut next = m * &mk;
        for i in 0..n {
            next[(i, i)] += c[n - k + 1];
        }
        mk = next;
        let am = m * &mk;
        c[n - k] = -am.trace() / k as f64;
    }
    // det(id - zM) = z^n det(1/z - M)
    Ok(Polynomial::new((0..=n).map(|k| c[n - k]).collect()))
}

/// `G` with `p = (1 - z)·G`.
pub fn deflate_at_one(p: &Polynomial) -> Result<Polynomial> {
    let value = p.eval(1.0);
    if value.abs() >= IDENTITY_TOL {
        return Err(Error::NoZeroAtOne { value });
    }
    let d = p.coefficients().len();
    if d <= 1 {
        return Ok(Polynomial::default());
    }
    let mut g = Vec::with_capacity(d - 1);
    let mut acc = 0.0;
    for k in 0..d - 1 {
        acc += p.coeff(k);
        g.push(acc);
    }
    let g = Polynomial::new(g);
    let back = &Polynomial::new(vec![1.0, -1.0]) * &g;
    let residual = back.max_deviation(p);
    if residual >= IDENTITY_TOL {
        return Err(Error::NoZeroAtOne { value: residual });
    }
    Ok(g)
}

/// Signed cofactor `(−1)^{t+r} det[id − z·M]_{t,r}` (0-based indices).
pub fn cofactor_poly(m: &DMatrix<f64>, t: usize, r: usize) -> Result<Polynomial> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(Error::NotSquare);
    }
    if t >= n || r >= n {
        return Err(Error::InvalidInput(format!(
            "cofactor index ({t}, {r}) outside a {n}x{n} matrix"
        )));
    }
    if n == 1 {
        return Ok(Polynomial::one());
    }
    let minor = m.clone().remove_row(t).remove_column(t);
    let ctt = char_poly(&minor)?;
    if t == r {
        return Ok(ctt);
    }
    // Expanding det(id − zM') along row t, where row t of M' is e_r,
    // gives C_tt − z·C_tr.
    let mut mp = m.clone();
    mp.row_mut(t).fill(0.0);
    mp[(t, r)] = 1.0;
    let d = char_poly(&mp)?;
    let diff = &ctt - &d;
    Ok(Polynomial::new(diff.coefficients().iter().skip(1).copied().collect()))
}

/// `φ_A(z) = 1 + Σ_k c_k z^k`.
pub fn correlation_poly(h: &HoleQuantities) -> Polynomial {
    let mut v = vec![1.0];
    v.extend_from_slice(&h.c);
    Polynomial::new(v)
}

/// Everything entering the factorization of `det(id − z·M̄_op)`.
#[derive(Debug, Clone)]
pub struct ZetaBundle {
    pub zeta_cl: Polynomial,
    pub g: Polynomial,
    pub cofactor_tr: Polynomial,
    pub corr_poly: Polynomial,
    /// `ζ_cl·φ_A + C_tr·α·z^{k₀}`.
    pub zeta_op: Polynomial,
    /// `det(id − z·M̄_op)` computed from the assembled matrix.
    pub zeta_op_direct: Polynomial,
    /// Largest coefficient deviation between the two.
    pub deviation: f64,
    pub hole: HoleQuantities,
}

impl ZetaBundle {
    /// Smallest zero `z ≥ 1` of `ζ_op`, i.e. `exp(ρ)` in normalized time.
    pub fn leading_zero(&self) -> Result<f64> {
        Ok(1.0 + self.leading_offset()?)
    }

    /// `z − 1` for the leading zero, to full relative precision.
    pub fn leading_offset(&self) -> Result<f64> {
        Ok(self.polish_offset(smallest_root_widening(&self.zeta_op, 2.0)?))
    }

    /// Newton steps on `δ·G(1+δ)·φ_A(1+δ) − α·C_tr(1+δ)·(1+δ)^{k₀}` at `δ = z − 1`,
    /// which keeps relative precision in `δ` when the zero is close to 1.
    pub fn polish_offset(&self, z0: f64) -> f64 {
        let d0 = z0 - 1.0;
        if d0 <= 0.0 {
            return d0;
        }
        self.newton_offset(d0).unwrap_or(d0)
    }

    /// `δ·G(1+δ)·φ_A(1+δ) − α·C_tr(1+δ)·(1+δ)^{k₀}`, which is `−ζ_op(1+δ)`.
    pub fn offset_equation(&self, d: f64) -> f64 {
        let z = 1.0 + d;
        d * self.g.eval(z) * self.corr_poly.eval(z) - self.hole.alpha * self.cofactor_tr.eval(z) * z.powi(self.hole.k0 as i32)
    }

    /// Zero of [`Self::offset_equation`] in `(0, hi]`, by bisection and Newton steps.
    pub fn offset_in(&self, hi: f64) -> Option<f64> {
        let f = |d: f64| self.offset_equation(d);
        if !(f(0.0) < 0.0 && f(hi) > 0.0) {
            return None;
        }
        let (mut lo, mut up) = (0.0, hi);
        for _ in 0..200 {
            let mid = 0.5 * (lo + up);
            if f(mid) > 0.0 {
                up = mid;
            } else {
                lo = mid;
            }
            if up - lo <= 1e-15 * up {
                break;
            }
        }
        let d = 0.5 * (lo + up);
        Some(self.newton_offset(d).unwrap_or(d))
    }

    fn newton_offset(&self, d0: f64) -> Option<f64> {
        let h = &self.g * &self.corr_poly;
        let dh = h.derivative();
        let c = &self.cofactor_tr;
        let dc = c.derivative();
        let (alpha, k0) = (self.hole.alpha, self.hole.k0 as i32);
        let mut d = d0;
        for _ in 0..8 {
            let z = 1.0 + d;
            let pk = z.powi(k0);
            let f = d * h.eval(z) - alpha * c.eval(z) * pk;
            let df = h.eval(z) + d * dh.eval(z) - alpha * (dc.eval(z) * pk + c.eval(z) * k0 as f64 * z.powi(k0 - 1));
            let step = f / df;
            if !step.is_finite() || step.abs() > 1e-6 * d {
                return None;
            }
            d -= step;
            if step.abs() <= 1e-17 * d {
                break;
            }
        }
        Some(d)
    }

    /// `|C_tr(1)·μ(φ) − μ_t·G(1)|` with `μ_t` the measure of the first `n` hole symbols.
    pub fn cofactor_gap(&self, sys: &SuspensionSystem) -> f64 {
        let t = &self.hole.word[..self.hole.n];
        let mu_t = sys.base().stationary()[t[0]] * sys.base().path_weight(t);
        (self.cofactor_tr.eval(1.0) * sys.total_mass() - mu_t * self.g.eval(1.0)).abs()
    }
}

/// Assemble the factorized open zeta function and check it against the
/// determinant of the reduced open matrix.
pub fn zeta_op_factorized(sys: &SuspensionSystem, hole: &Hole) -> Result<ZetaBundle> {
    let h = open::hole_quantities(sys, hole)?;
    if h.k0 == 0 {
        return Err(Error::InvalidInput(
            "the factorization needs a hole longer than the ceiling order (k0 >= 1)".into(),
        ));
    }
    let m = sys.block_matrix();
    let zeta_cl = char_poly(m)?;
    let g = deflate_at_one(&zeta_cl)?;
    let cofactor_tr = cofactor_poly(m, h.t_index, h.r_index)?;
    let corr_poly = correlation_poly(&h);
    let zeta_op = &(&zeta_cl * &corr_poly) + &cofactor_tr.scale(h.alpha).shift_up(h.k0);
    let op = open::build_open_cristadoro(sys, hole)?;
    let zeta_op_direct = char_poly(&op.matrix)?;
    let deviation = zeta_op.max_deviation(&zeta_op_direct);
    if deviation >= IDENTITY_TOL {
        return Err(Error::FactorizationMismatch { deviation });
    }
    Ok(ZetaBundle {
        zeta_cl,
        g,
        cofactor_tr,
        corr_poly,
        zeta_op,
        zeta_op_direct,
        deviation,
        hole: h,
    })
}

const ROOT_TOL: f64 = 1e-14;

fn bisect(p: &Polynomial, mut lo: f64, mut hi: f64) -> f64 {
    let mut flo = p.eval(lo);
    for _ in 0..300 {
        if hi - lo <= ROOT_TOL * lo.abs().max(1.0) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let fm = p.eval(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    let mut x = 0.5 * (lo + hi);
    let dp = p.derivative();
    let width = (hi - lo).max(ROOT_TOL);
    for _ in 0..5 {
        let d = dp.eval(x);
        if d == 0.0 {
            break;
        }
        let next = x - p.eval(x) / d;
        if !next.is_finite() || (next - x).abs() > width {
            break;
        }
        x = next;
    }
    x
}

/// Sorted real roots of `p` in `[a, b]`, including roots of even multiplicity.
/// Critical points from the derivative split `[a, b]` into monotone pieces.
fn real_roots_in(p: &Polynomial, a: f64, b: f64) -> Vec<f64> {
    match p.coefficients().len() {
        0 | 1 => return Vec::new(),
        2 => {
            let x = -p.coeff(0) / p.coeff(1);
            return if (a..=b).contains(&x) { vec![x] } else { Vec::new() };
        }
        _ => {}
    }
    let crit = real_roots_in(&p.derivative(), a, b);
    let mut knots = Vec::with_capacity(crit.len() + 2);
    knots.push(a);
    knots.extend(crit.iter().copied().filter(|&x| x > a && x < b));
    knots.push(b);
    let near_zero = |x: f64| p.eval(x).abs() <= 1e-12 * p.abs_eval(x);
    let mut roots: Vec<f64> = Vec::new();
    let push = |x: f64, roots: &mut Vec<f64>| {
        if roots.last().is_none_or(|&l| x - l > 1e-12 * x.abs().max(1.0)) {
            roots.push(x);
        }
    };
    for w in knots.windows(2) {
        let (x, y) = (w[0], w[1]);
        let (fx, fy) = (p.eval(x), p.eval(y));
        if near_zero(x) {
            push(x, &mut roots);
        } else if (fx < 0.0) != (fy < 0.0) && !near_zero(y) {
            push(bisect(p, x, y), &mut roots);
        }
    }
    if near_zero(b) {
        push(b, &mut roots);
    }
    roots
}

/// Smallest real root of `p` in `[1, bracket_hi]`.
pub fn smallest_root_geq_one(p: &Polynomial, bracket_hi: f64) -> Result<f64> {
    let p1 = p.eval(1.0);
    if p1.abs() < 1e-12 {
        return Ok(1.0);
    }
    if p1 < 0.0 {
        return Err(Error::InvalidInput(format!(
            "polynomial is negative at z = 1 ({p1}); a root lies below 1"
        )));
    }
    real_roots_in(p, 1.0, bracket_hi)
        .first()
        .copied()
        .ok_or(Error::NoSignChange {
            lo: 1.0,
            hi: bracket_hi,
        })
}

/// [`smallest_root_geq_one`] with the upper bracket doubled until a root is found.
pub fn smallest_root_widening(p: &Polynomial, bracket_hi: f64) -> Result<f64> {
    let mut hi = bracket_hi.max(1.0 + 1e-9);
    loop {
        match smallest_root_geq_one(p, hi) {
            Err(Error::NoSignChange { .. }) if hi < 1e15 => hi *= 2.0,
            other => return other,
        }
    }
}
