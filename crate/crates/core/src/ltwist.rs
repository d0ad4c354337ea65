//! Additive twists `L(f (x) e(x), s) = sum a_f(n) e(nx) n^{-s}`.
//!
//! At a cusp `a/c` with `level | c` the twist is evaluated by splitting its
//! Mellin integral at height `1/c` and mapping the lower half through the
//! matrix realizing the cusp, which gives two exponentially convergent sums:
//!
//! ```text
//! L(a/c, s) = sum_n a(n) e(na/c) Q(s, 2 pi n/c) n^{-s}
//!           + eps_k (c/2pi)^{k-2s} Gamma(k-s)/Gamma(s)
//!               * sum_n a(n) e(-nd/c) Q(k-s, 2 pi n/c) n^{s-k}
//! ```
//!
//! with `Q(s, x) = Gamma(s, x)/Gamma(s)` and `eps_k` the functional-equation sign.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::arith::{divisor_bound_constant, factorial};
use crate::cusps::Cusp;
use crate::error::{Error, Result};
use crate::form::QExpansion;

const TWO_PI: f64 = 2.0 * PI;

/// Where a twist is evaluated.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Twist {
    Real(f64),
    Cusp(Cusp),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LValue {
    pub value: Complex64,
    /// Rigorous bound on the truncation error of `value`.
    pub abs_tail_bound: f64,
    pub s: Complex64,
    pub twist: Twist,
}

/// `e(t) = exp(2 pi i t)`.
#[inline]
pub fn e(t: f64) -> Complex64 {
    Complex64::from_polar(1.0, TWO_PI * t)
}

/// Table of `e(j/c)` for `0 <= j < c`.
pub fn roots_of_unity(c: i64) -> Vec<Complex64> {
    let cf = c as f64;
    (0..c).map(|j| e(j as f64 / cf)).collect()
}

/// Smallest `M0` with `sum_{n > M0} d(n) n^{(k-1)/2 - sigma} <= tol`, using
/// `d(n) <= C_theta n^theta` and an integral comparison. `None` if the
/// series is not absolutely convergent.
pub fn series_truncation(weight: u32, sigma: f64, tol: f64) -> Option<(usize, f64)> {
    let base = sigma - (f64::from(weight) - 1.0) / 2.0;
    let mut best: Option<(usize, f64)> = None;
    // theta below 0.1 would need primes up to 2^(1/theta)
    for step in 4..=20 {
        let theta = f64::from(step) * 0.025;
        let beta = base - theta;
        if beta <= 1.0 {
            break;
        }
        let c_theta = divisor_bound_constant(theta);
        // C/(beta-1) M0^{1-beta} <= tol
        let m0 = ((tol * (beta - 1.0) / c_theta).ln() / (1.0 - beta)).exp().ceil();
        if !m0.is_finite() || m0 > 1e15 {
            continue;
        }
        let m0 = (m0 as usize).max(1);
        let bound = c_theta / (beta - 1.0) * (m0 as f64).powf(1.0 - beta);
        if best.is_none_or(|(m, _)| m0 < m) {
            best = Some((m0, bound));
        }
    }
    best
}

/// Upper bound for `sum_{n > m0} d(n) n^{(k-1)/2 - sigma}`.
pub fn series_tail_bound(weight: u32, sigma: f64, m0: usize) -> f64 {
    let base = sigma - (f64::from(weight) - 1.0) / 2.0;
    let m = m0.max(1) as f64;
    (4..=20)
        .map(|step| f64::from(step) * 0.025)
        .filter(|theta| base - theta > 1.0)
        .map(|theta| {
            let beta = base - theta;
            divisor_bound_constant(theta) / (beta - 1.0) * m.powf(1.0 - beta)
        })
        .fold(f64::INFINITY, f64::min)
}

/// `L(f (x) e(x), s)` by direct summation; requires `Re s >= (k+1)/2 + 1/2`.
pub fn ltwist_series(f: &QExpansion, x: f64, s: Complex64, tol: f64) -> Result<LValue> {
    let k = f64::from(f.weight());
    if s.re < (k + 1.0) / 2.0 + 0.5 {
        return Err(Error::OutOfRange(format!("Re s = {} is below (k+1)/2 + 1/2 = {}", s.re, k / 2.0 + 1.0)));
    }
    let (m0, tail) = series_truncation(f.weight(), s.re, tol).ok_or(Error::InsufficientCoefficients {
        required: usize::MAX,
        available: f.truncation(),
    })?;
    if m0 > f.truncation() {
        return Err(Error::InsufficientCoefficients { required: m0, available: f.truncation() });
    }
    let xr = x.rem_euclid(1.0);
    let mut acc = Complex64::new(0.0, 0.0);
    for n in 1..=m0 {
        let nf = n as f64;
        let phase = e((nf * xr).fract());
        acc += f.coeff_f64(n) * phase * (-s * nf.ln()).exp();
    }
    Ok(LValue { value: acc, abs_tail_bound: tail, s, twist: Twist::Real(x) })
}

/// Per-modulus tables for the split-integral evaluation of all critical
/// values `L(a/c, s)`, `s = 1..k-1`, at every cusp with denominator `c`.
///
/// Results are returned divided by `c^scale_pow`. The truncation is chosen
/// so that the error at order `s` is at most `tol * max(1, c^{k-2s}) / c^scale_pow`.
pub struct CuspEvaluator<'f> {
    f: &'f QExpansion,
    c: i64,
    sign: f64,
    terms: usize,
    orders: usize,
    /// `w_direct[(n-1) * orders + (s-1)]`
    w_direct: Vec<f64>,
    w_dual: Vec<f64>,
    tails: Vec<f64>,
    phases: Vec<Complex64>,
}

/// `sum_{n > n0} d(n) n^{(k-1)/2} Q(s', 2 pi n / c) Gamma(s') / (2 pi n)^{s'}` bounded via
/// `d(n) <= 2 sqrt(n)` and `Gamma(s', x) <= s' x^{s'-1} e^{-x}` (`x >= s' - 1`),
/// which gives the geometric majorant `g(n) = 2 s' / (2 pi c^{s'-1}) n^{k/2-1} e^{-2 pi n/c}`.
/// Returns `None` when `n0` is below the range where the majorant is decreasing.
fn gamma_sum_tail(weight: u32, order: u32, c: f64, n0: usize) -> Option<f64> {
    let p = f64::from(weight) / 2.0 - 1.0;
    let lambda = TWO_PI / c;
    let n1 = (n0 + 1) as f64;
    if lambda * n1 < f64::from(order) - 1.0 {
        return None;
    }
    let rho_ln = p * (1.0 + 1.0 / n1).ln() - lambda;
    if rho_ln >= 0.0 {
        return None;
    }
    let sp = f64::from(order);
    let ln_g = (2.0 * sp).ln() - TWO_PI.ln() - (sp - 1.0) * c.ln() + p * n1.ln() - lambda * n1;
    Some(ln_g.exp() / (1.0 - rho_ln.exp()))
}

/// Smallest `n0` for which [`gamma_sum_tail`] times `factor` is at most `tol`.
fn gamma_sum_cutoff(weight: u32, order: u32, c: f64, factor: f64, tol: f64) -> (usize, f64) {
    let ok = |n: usize| gamma_sum_tail(weight, order, c, n).map(|t| t * factor).filter(|&t| t <= tol);
    let mut hi = 1usize;
    while ok(hi).is_none() {
        hi *= 2;
        assert!(hi < 1 << 40, "tail search diverged");
    }
    let mut lo = hi / 2;
    if ok(lo).is_some() {
        lo = 0;
    }
    // invariant: ok(hi), !ok(lo) (lo = 0 treated as failing)
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if ok(mid).is_some() {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    (hi, ok(hi).expect("checked"))
}

impl<'f> CuspEvaluator<'f> {
    /// Tables for modulus `c`; `sign` is the functional-equation sign.
    pub fn new(f: &'f QExpansion, c: i64, sign: i8, scale_pow: f64, tol: f64) -> Result<Self> {
        if c <= 0 || c % f.level() as i64 != 0 {
            return Err(Error::WrongLevel { c, level: f.level() });
        }
        let k = f.weight();
        let orders = (k - 1) as usize;
        let cf = c as f64;
        let lnc = cf.ln();

        // prefactors of the two sums before the Q(., x) n^{-.} weights
        let dual_pref: Vec<f64> = (1..k)
            .map(|s| {
                let e = f64::from(k) - 2.0 * f64::from(s);
                let ln = e * (cf / TWO_PI).ln() + factorial(k - s - 1).ln() - factorial(s - 1).ln();
                (ln - scale_pow * lnc).exp()
            })
            .collect();
        let mut terms = 1usize;
        let mut tails = vec![0.0; orders];
        for s in 1..k {
            let envelope = (f64::from(k) - 2.0 * f64::from(s)).max(0.0) * lnc;
            let tol_s = (tol.ln() + envelope - scale_pow * lnc).exp();
            // the first sum, rescaled from Gamma(s,x)/(2 pi n)^s to Q(s,x) n^{-s}
            let f1 = (TWO_PI.powi(s as i32) / factorial(s - 1)) * (-scale_pow * lnc).exp();
            let f2 = dual_pref[(s - 1) as usize] * TWO_PI.powi((k - s) as i32) / factorial(k - s - 1);
            let (n1, t1) = gamma_sum_cutoff(k, s, cf, f1, tol_s / 2.0);
            let (n2, t2) = gamma_sum_cutoff(k, k - s, cf, f2, tol_s / 2.0);
            terms = terms.max(n1).max(n2);
            tails[(s - 1) as usize] = t1 + t2;
        }
        if terms > f.truncation() {
            return Err(Error::InsufficientCoefficients { required: terms, available: f.truncation() });
        }
        // tails at the common cutoff are no larger than at the per-order cutoffs
        for s in 1..k {
            let f1 = (TWO_PI.powi(s as i32) / factorial(s - 1)) * (-scale_pow * lnc).exp();
            let f2 = dual_pref[(s - 1) as usize] * TWO_PI.powi((k - s) as i32) / factorial(k - s - 1);
            let t1 = gamma_sum_tail(k, s, cf, terms).map_or(f64::INFINITY, |t| t * f1);
            let t2 = gamma_sum_tail(k, k - s, cf, terms).map_or(f64::INFINITY, |t| t * f2);
            tails[(s - 1) as usize] = tails[(s - 1) as usize].min(t1 + t2);
        }

        let mut w_direct = vec![0.0; terms * orders];
        let mut w_dual = vec![0.0; terms * orders];
        let direct_scale = (-scale_pow * lnc).exp();
        let mut q = vec![0.0; orders + 1];
        for n in 1..=terms {
            let nf = n as f64;
            let x = TWO_PI * nf / cf;
            // Q(1, x) = e^{-x}; Q(s+1, x) = Q(s, x) + e^{-x} x^s / s!
            let ex = (-x).exp();
            let mut term = ex;
            q[1] = ex;
            for s in 1..orders {
                term *= x / s as f64;
                q[s + 1] = q[s] + term;
            }
            let lnn = nf.ln();
            let row = (n - 1) * orders;
            for s in 1..=orders {
                w_direct[row + s - 1] = q[s] * (-(s as f64) * lnn).exp() * direct_scale;
                let ks = orders + 1 - s;
                w_dual[row + s - 1] = dual_pref[s - 1] * q[ks] * (-(ks as f64) * lnn).exp();
            }
        }
        Ok(CuspEvaluator {
            f,
            c,
            sign: f64::from(sign),
            terms,
            orders,
            w_direct,
            w_dual,
            tails,
            phases: roots_of_unity(c),
        })
    }

    pub fn modulus(&self) -> i64 {
        self.c
    }

    pub fn terms(&self) -> usize {
        self.terms
    }

    /// Truncation bound for order `s` in output units.
    pub fn tail_bound(&self, s: u32) -> f64 {
        self.tails[(s - 1) as usize]
    }

    /// The two sums separately (without the sign), for `s = 1..k-1`.
    /// `dual_num` is the numerator of `-d/c`, any representative.
    pub fn split_sums(&self, a: i64, dual_num: i64) -> (Vec<Complex64>, Vec<Complex64>) {
        let c = self.c;
        let a = a.rem_euclid(c) as usize;
        let b = dual_num.rem_euclid(c) as usize;
        let cu = c as usize;
        let mut direct = vec![Complex64::new(0.0, 0.0); self.orders];
        let mut dual = vec![Complex64::new(0.0, 0.0); self.orders];
        let (mut i1, mut i2) = (0usize, 0usize);
        let coeffs = self.f.floats();
        for n in 0..self.terms {
            i1 += a;
            if i1 >= cu {
                i1 -= cu;
            }
            i2 += b;
            if i2 >= cu {
                i2 -= cu;
            }
            let an = coeffs[n];
            let t1 = self.phases[i1] * an;
            let t2 = self.phases[i2] * an;
            let row = n * self.orders;
            let w1 = &self.w_direct[row..row + self.orders];
            let w2 = &self.w_dual[row..row + self.orders];
            for s in 0..self.orders {
                direct[s] += t1 * w1[s];
                dual[s] += t2 * w2[s];
            }
        }
        (direct, dual)
    }

    /// `L(a/c, s) / c^scale_pow` for `s = 1..k-1` (index `s-1`).
    pub fn lvalues(&self, a: i64, dual_num: i64) -> Vec<Complex64> {
        let (direct, dual) = self.split_sums(a, dual_num);
        direct.iter().zip(&dual).map(|(x, y)| x + self.sign * y).collect()
    }

    pub fn lvalues_at(&self, cusp: &Cusp) -> Vec<Complex64> {
        self.lvalues(cusp.a, cusp.dual_numerator())
    }
}

/// Default relative tolerance for cusp evaluations.
pub const DEFAULT_TOL: f64 = 1e-13;

/// Functional-equation sign of `f`, calibrated on first use and cached.
pub fn fe_sign(f: &QExpansion) -> Result<i8> {
    if let Some(&s) = f.fe_sign.get() {
        return Ok(s);
    }
    let s = calibrate_fe_sign(f)?.sign;
    let _ = f.fe_sign.set(s);
    Ok(s)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SignCalibration {
    pub sign: i8,
    /// `(L - direct) / dual`, which should be `+-1` up to rounding.
    pub solved: f64,
    /// `|L - direct - sign * dual| / |L|` for the chosen sign.
    pub residual: f64,
    /// The same residual for the rejected sign.
    pub rejected_residual: f64,
    /// Whether the sign equals `(-1)^k`.
    pub matches_minus_one_pow_k: bool,
    /// Whether the sign equals `i^k`.
    pub matches_i_pow_k: bool,
}

/// Solves for the sign in the split-integral identity at a self-dual
/// (level one) or simplest (level `N`) cusp, at `s = k - 1` where the
/// plain series converges absolutely.
pub fn calibrate_fe_sign(f: &QExpansion) -> Result<SignCalibration> {
    let k = f.weight();
    let n = f.level() as i64;
    let cusp = if n == 1 { Cusp::new(0, 1)? } else { Cusp::new(1, n)? };
    let s = k - 1;
    let series = ltwist_series(f, cusp.value(), Complex64::new(f64::from(s), 0.0), 1e-12)?.value;
    let eval = CuspEvaluator::new(f, cusp.c, 1, 0.0, 1e-15)?;
    let (direct, dual) = eval.split_sums(cusp.a, cusp.dual_numerator());
    let (d1, d2) = (direct[(s - 1) as usize], dual[(s - 1) as usize]);
    let res = |sg: f64| (series - d1 - sg * d2).norm() / series.norm();
    let (rp, rm) = (res(1.0), res(-1.0));
    let solved = ((series - d1) / d2).re;
    const THRESHOLD: f64 = 1e-9;
    let (sign, residual, rejected) = if rp <= rm { (1i8, rp, rm) } else { (-1i8, rm, rp) };
    if residual > THRESHOLD || rejected <= THRESHOLD {
        return Err(Error::Calibration(solved));
    }
    let minus_one_pow_k = if k.is_multiple_of(2) { 1 } else { -1 };
    let i_pow_k = if k.is_multiple_of(4) { 1 } else { -1 };
    Ok(SignCalibration {
        sign,
        solved,
        residual,
        rejected_residual: rejected,
        matches_minus_one_pow_k: sign == minus_one_pow_k,
        matches_i_pow_k: sign == i_pow_k,
    })
}

/// `L(f (x) e(a/c), s)` at an integer `1 <= s <= k-1`; `tol` is relative to
/// the size envelope `max(1, c^{k-2s})`.
pub fn ltwist_cusp(f: &QExpansion, cusp: &Cusp, s: u32, tol: f64) -> Result<LValue> {
    ltwist_cusp_with_dual(f, cusp.a, cusp.c, cusp.dual, s, tol)
}

/// As [`ltwist_cusp`] with an explicit lower-right entry `d` (`a d = 1 mod c`).
pub fn ltwist_cusp_with_dual(f: &QExpansion, a: i64, c: i64, d: i64, s: u32, tol: f64) -> Result<LValue> {
    let k = f.weight();
    if s == 0 || s >= k {
        return Err(Error::OutOfRange(format!("s = {s} outside 1..={}", k - 1)));
    }
    if c <= 0 || crate::arith::gcd(a, c) != 1 || (i128::from(a) * i128::from(d) - 1).rem_euclid(i128::from(c)) != 0 {
        return Err(Error::NotACusp { a, c });
    }
    let sign = fe_sign(f)?;
    let eval = CuspEvaluator::new(f, c, sign, 0.0, tol)?;
    let vals = eval.lvalues(a, -d);
    Ok(LValue {
        value: vals[(s - 1) as usize],
        abs_tail_bound: eval.tail_bound(s),
        s: Complex64::new(f64::from(s), 0.0),
        twist: Twist::Cusp(Cusp::new(a, c)?),
    })
}

/// `Lambda(f (x) e(a/c), s) = Gamma(s) (c/2pi)^s L(f (x) e(a/c), s)`.
pub fn completed_lambda(f: &QExpansion, cusp: &Cusp, s: u32) -> Result<Complex64> {
    let l = ltwist_cusp(f, cusp, s, DEFAULT_TOL)?;
    Ok(lambda_factor(cusp.c, s) * l.value)
}

pub fn lambda_factor(c: i64, s: u32) -> f64 {
    factorial(s - 1) * (c as f64 / TWO_PI).powi(s as i32)
}

/// Completed values `Lambda(a/c, s)` for all `s = 1..k-1`, sharing one table.
pub fn completed_lambdas(eval: &CuspEvaluator<'_>, cusp: &Cusp) -> Vec<Complex64> {
    eval.lvalues_at(cusp)
        .iter()
        .enumerate()
        .map(|(i, l)| lambda_factor(cusp.c, i as u32 + 1) * l)
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct CriticalRow {
    pub sigma: u32,
    pub abs_value: f64,
    /// `c^{max(0, k - 2 sigma)}`.
    pub envelope: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CriticalValueReport {
    pub cusp: Cusp,
    pub rows: Vec<CriticalRow>,
    pub max_ratio: f64,
}

/// `|L(a/c, sigma)|` against `c^{max(0, k-2 sigma)}` for every critical integer.
pub fn critical_value_bounds_report(f: &QExpansion, cusp: &Cusp) -> Result<CriticalValueReport> {
    let eval = CuspEvaluator::new(f, cusp.c, fe_sign(f)?, 0.0, DEFAULT_TOL)?;
    Ok(critical_report_with(&eval, cusp, f.weight()))
}

pub fn critical_report_with(eval: &CuspEvaluator<'_>, cusp: &Cusp, k: u32) -> CriticalValueReport {
    let vals = eval.lvalues_at(cusp);
    let cf = cusp.c as f64;
    let rows: Vec<CriticalRow> = vals
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let sigma = i as u32 + 1;
            let envelope = cf.powf((f64::from(k) - 2.0 * f64::from(sigma)).max(0.0));
            CriticalRow { sigma, abs_value: v.norm(), envelope, ratio: v.norm() / envelope }
        })
        .collect();
    let max_ratio = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    CriticalValueReport { cusp: *cusp, rows, max_ratio }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::form::{build_delta, build_level_one_eigenform};

    fn delta() -> QExpansion {
        build_delta(8000).unwrap()
    }

    #[test]
    fn series_refinement_and_periodicity() {
        let f = delta();
        let s = Complex64::new(11.0, 0.0);
        let a = ltwist_series(&f, 0.0, s, 1e-12).unwrap();
        let b = ltwist_series(&f, 0.0, s, 1e-9).unwrap();
        assert!((a.value - b.value).norm() <= a.abs_tail_bound + b.abs_tail_bound);
        assert!((a.value - b.value).norm() < 1e-9);
        let one = ltwist_series(&f, 1.0, s, 1e-12).unwrap();
        assert!((one.value - a.value).norm() < 1e-15);
    }

    #[test]
    fn series_at_half_matches_direct_sum() {
        let f = delta();
        let v = ltwist_series(&f, 0.5, Complex64::new(11.0, 0.0), 1e-12).unwrap().value;
        // direct oracle: sum tau(n) (-1)^n / n^11 at two truncations
        let direct = |m: usize| -> f64 {
            (1..=m).map(|n| f.coeff_f64(n) * if n % 2 == 0 { 1.0 } else { -1.0 } / (n as f64).powi(11)).sum()
        };
        let (d1, d2) = (direct(1000), direct(2000));
        assert!((d1 - d2).abs() < 1e-13);
        assert!((v.re - d2).abs() < 1e-12 && v.im.abs() < 1e-12);
    }

    #[test]
    fn series_requires_convergence_region() {
        let f = delta();
        assert!(matches!(ltwist_series(&f, 0.0, Complex64::new(6.5, 0.0), 1e-9), Err(Error::OutOfRange(_))));
        let small = build_delta(10).unwrap();
        match ltwist_series(&small, 0.0, Complex64::new(7.0, 0.0), 1e-12) {
            Err(Error::InsufficientCoefficients { required, available }) => {
                assert_eq!(available, 10);
                assert!(required > 10);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn conjugation_symmetry() {
        let f = delta();
        let s = Complex64::new(11.0, 2.5);
        let x = 0.2917;
        let a = ltwist_series(&f, x, s, 1e-12).unwrap().value;
        let b = ltwist_series(&f, -x, s.conj(), 1e-12).unwrap().value;
        assert!((a.conj() - b).norm() < 1e-12);
    }

    #[test]
    fn delta_sign_and_paths_at_unit_cusp() {
        let f = delta();
        let cal = calibrate_fe_sign(&f).unwrap();
        assert_eq!(cal.sign, 1);
        assert!(cal.matches_i_pow_k && cal.matches_minus_one_pow_k);
        let cusp = Cusp::new(0, 1).unwrap();
        let afe = ltwist_cusp(&f, &cusp, 11, 1e-13).unwrap().value;
        let ser = ltwist_series(&f, 0.0, Complex64::new(11.0, 0.0), 1e-14).unwrap().value;
        assert!((afe - ser).norm() < 1e-9);
        // s = 1 from the functional equation at c = 1
        let l1 = ltwist_cusp(&f, &cusp, 1, 1e-13).unwrap().value;
        let fe = factorial(10) / TWO_PI.powi(10) * ser;
        assert!((l1 - fe).norm() < 1e-9 * fe.norm());
    }

    #[test]
    fn sign_for_weight_18_is_i_pow_k() {
        let f = build_level_one_eigenform(18, 800).unwrap();
        let cal = calibrate_fe_sign(&f).unwrap();
        assert_eq!(cal.sign, -1);
        assert!(cal.matches_i_pow_k);
        assert!(!cal.matches_minus_one_pow_k);
        assert!((cal.solved + 1.0).abs() < 1e-9);
    }

    #[test]
    fn dual_representative_independence() {
        let f = delta();
        for cusp in crate::cusps::enumerate_omega_c(5) {
            for s in 1..12 {
                let a = ltwist_cusp_with_dual(&f, cusp.a, 5, cusp.dual, s, 1e-13).unwrap().value;
                let b = ltwist_cusp_with_dual(&f, cusp.a, 5, cusp.dual + 5, s, 1e-13).unwrap().value;
                assert_eq!(a, b);
            }
        }
        assert!(ltwist_cusp_with_dual(&f, 2, 5, 2, 3, 1e-13).is_err());
    }

    #[test]
    fn tail_bounds_hold_against_refinement() {
        let f = delta();
        let cusp = Cusp::new(3, 17).unwrap();
        for s in [1, 4, 6, 9, 11] {
            let coarse = ltwist_cusp(&f, &cusp, s, 1e-6).unwrap();
            let fine = ltwist_cusp(&f, &cusp, s, 1e-14).unwrap();
            let diff = (coarse.value - fine.value).norm();
            assert!(diff <= coarse.abs_tail_bound + fine.abs_tail_bound + 1e-13 * fine.value.norm(), "s={s}");
        }
    }

    #[test]
    fn functional_equation_at_small_cusps() {
        let f = delta();
        for c in [2i64, 7, 12, 31] {
            for cusp in crate::cusps::enumerate_omega_c(c) {
                let lhs = completed_lambda(&f, &cusp, 3).unwrap();
                let rhs = completed_lambda(&f, &cusp.dual_cusp(), 9).unwrap();
                assert!((lhs - rhs).norm() <= 1e-9 * lhs.norm());
                let central = completed_lambda(&f, &cusp, 6).unwrap();
                let central_dual = completed_lambda(&f, &cusp.dual_cusp(), 6).unwrap();
                assert!((central.norm() - central_dual.norm()).abs() <= 1e-9 * central.norm().max(1e-300));
            }
        }
    }

    #[test]
    fn unit_cusp_lambda_ratio_is_constant_sign() {
        let f = delta();
        let cusp = Cusp::new(0, 1).unwrap();
        for s in 1..12 {
            let r = completed_lambda(&f, &cusp, s).unwrap() / completed_lambda(&f, &cusp, 12 - s).unwrap();
            assert!((r - 1.0).norm() < 1e-10, "s={s} r={r}");
        }
    }

    #[test]
    fn critical_values_right_edge() {
        let f = delta();
        let bound: f64 = (1..=f.truncation()).map(|n| f.coeff_f64(n).abs() / (n as f64).powi(11)).sum();
        assert!(bound <= 1.8);
        let rep = critical_value_bounds_report(&f, &Cusp::new(2, 9).unwrap()).unwrap();
        assert!(rep.rows[10].abs_value <= bound);
        let central = critical_value_bounds_report(&f, &Cusp::new(0, 1).unwrap()).unwrap();
        assert!(central.rows[5].abs_value.is_finite());
    }

    #[test]
    fn level_check() {
        let f = delta();
        let g = QExpansion::new(12, 3, f.coeffs()[..50].to_vec(), false).unwrap();
        assert!(matches!(CuspEvaluator::new(&g, 5, 1, 0.0, 1e-10), Err(Error::WrongLevel { .. })));
    }
}
