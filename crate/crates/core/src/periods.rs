//! Period vectors `u_l(r) = int_r^{i infinity} f(z) z^l dz`, the cocycle
//! `sigma_f(g)(X, Y) = int_{g infinity}^{infinity} f(z) (Xz + Y)^{k-2} dz`
//! and period polynomials.
//!
//! Periods are assembled from critical values of additive twists:
//!
//! ```text
//! u_l(r) = sum_{j <= l} C(l, j) r^{l-j} (-2 pi i)^{-j-1} j! L(f (x) e(r), j + 1)
//! ```

use std::f64::consts::PI;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::{ToPrimitive, Zero};

use crate::arith::{binomial, factorial};
use crate::cusps::{mat_mul, Cusp, GammaMatrix};
use crate::error::{Error, Result};
use crate::form::QExpansion;
use crate::ltwist::{fe_sign, roots_of_unity, CuspEvaluator, DEFAULT_TOL};
use crate::par::Exec;
use crate::special::integrate_vec;

const TWO_PI: f64 = 2.0 * PI;

#[derive(Clone, Debug, PartialEq)]
pub struct PeriodVector {
    /// `u_0 .. u_{k-2}`.
    pub entries: Vec<Complex64>,
    pub cusp: Cusp,
    /// The point `num/den` the periods are taken at; `cusp` is its class mod 1.
    pub num: i64,
    pub den: i64,
    pub error_bound: f64,
}

impl PeriodVector {
    pub fn point(&self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

/// `P(X, Y) = sum_i p_i X^i Y^{n-i}`.
#[derive(Clone, Debug, PartialEq)]
pub struct HomogeneousPoly {
    pub coeffs: Vec<Complex64>,
}

impl HomogeneousPoly {
    pub fn zero(degree: usize) -> Self {
        HomogeneousPoly { coeffs: vec![Complex64::zero(); degree + 1] }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn eval(&self, x: Complex64, y: Complex64) -> Complex64 {
        let n = self.degree();
        self.coeffs
            .iter()
            .enumerate()
            .map(|(i, p)| p * x.powu(i as u32) * y.powu((n - i) as u32))
            .sum()
    }

    /// Coefficients of the one-variable polynomial `P(1, -X)`, lowest degree first.
    pub fn at_one_minus_x(&self) -> Vec<Complex64> {
        let n = self.degree();
        (0..=n)
            .map(|m| {
                let p = self.coeffs[n - m];
                if m % 2 == 0 {
                    p
                } else {
                    -p
                }
            })
            .collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn sub(&self, other: &Self) -> Self {
        HomogeneousPoly { coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect() }
    }

    pub fn add(&self, other: &Self) -> Self {
        HomogeneousPoly { coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect() }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PeriodPolynomial {
    /// `b_0 .. b_{k-2}`, lowest degree first.
    pub coeffs: Vec<Complex64>,
    pub matrix: GammaMatrix,
}

impl PeriodPolynomial {
    pub fn eval(&self, x: Complex64) -> Complex64 {
        self.coeffs.iter().rev().fold(Complex64::zero(), |acc, b| acc * x + b)
    }
}

/// The constant `C` in `u~ = u / (C c^{k-2})` and the functional-equation sign.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormalizationConvention {
    pub constant: Complex64,
    pub sign: i8,
    pub reduced: bool,
}

impl NormalizationConvention {
    /// `C = Gamma(k-1) i / (2 pi)^{k-1}`, which makes `u~_0 = eps L(-d/c, k-1)` exactly.
    pub fn calibrated(f: &QExpansion) -> Result<Self> {
        let k = f.weight();
        Ok(NormalizationConvention {
            constant: Complex64::new(0.0, factorial(k - 2) / TWO_PI.powi(k as i32 - 1)),
            sign: fe_sign(f)?,
            reduced: false,
        })
    }

    /// `C = Gamma(k-1) i / (2 pi)^{k-2}`.
    pub fn reduced(f: &QExpansion) -> Result<Self> {
        let k = f.weight();
        Ok(NormalizationConvention {
            constant: Complex64::new(0.0, factorial(k - 2) / TWO_PI.powi(k as i32 - 2)),
            sign: fe_sign(f)?,
            reduced: true,
        })
    }

    pub fn name(&self) -> &'static str {
        if self.reduced {
            "reduced"
        } else {
            "calibrated"
        }
    }
}

/// `j! (i / 2pi)^{j+1} = (-2 pi i)^{-j-1} j!` for `j = 0..k-2`.
fn moment_weights(k: u32) -> Vec<Complex64> {
    let step = Complex64::new(0.0, 1.0 / TWO_PI);
    let mut p = step;
    (0..k - 1)
        .map(|j| {
            let w = p * factorial(j);
            p *= step;
            w
        })
        .collect()
}

/// `u_l` from `L(r, s)` for `s = 1..k-1`.
pub(crate) fn assemble(lvals: &[Complex64], r: f64, weights: &[Complex64]) -> Vec<Complex64> {
    let n = lvals.len();
    let terms: Vec<Complex64> = lvals.iter().zip(weights).map(|(l, w)| l * w).collect();
    (0..n)
        .map(|l| {
            let mut acc = Complex64::zero();
            let mut rp = 1.0;
            // j = l down to 0, so r^{l-j} grows with the loop
            for j in (0..=l).rev() {
                acc += terms[j] * (binomial(l as u32, j as u32) * rp);
                rp *= r;
            }
            acc
        })
        .collect()
}

fn assembled_error(tails: &[f64], r: f64) -> f64 {
    let n = tails.len();
    (0..n)
        .map(|l| {
            (0..=l)
                .map(|j| {
                    binomial(l as u32, j as u32) * r.abs().powi((l - j) as i32) * factorial(j as u32)
                        / TWO_PI.powi(j as i32 + 1)
                        * tails[j]
                })
                .sum::<f64>()
        })
        .fold(0.0, f64::max)
}

/// Periods at the cusp `a/c` (with `0 <= a < c`).
pub fn period_vector(f: &QExpansion, cusp: &Cusp, tol: f64) -> Result<PeriodVector> {
    period_vector_at(f, cusp.a, cusp.c, tol)
}

/// Periods at an arbitrary rational `num/den`, `den != 0`, `level | den`.
pub fn period_vector_at(f: &QExpansion, num: i64, den: i64, tol: f64) -> Result<PeriodVector> {
    if den == 0 {
        return Err(Error::OutOfRange("the point at infinity has no periods".into()));
    }
    let (num, den) = if den < 0 { (-num, -den) } else { (num, den) };
    let cusp = Cusp::new(num.rem_euclid(den), den)?;
    let eval = CuspEvaluator::new(f, den, fe_sign(f)?, 0.0, tol)?;
    let lvals = eval.lvalues_at(&cusp);
    let r = num as f64 / den as f64;
    let entries = assemble(&lvals, r, &moment_weights(f.weight()));
    let tails: Vec<f64> = (1..f.weight()).map(|s| eval.tail_bound(s)).collect();
    Ok(PeriodVector { entries, cusp, num, den, error_bound: assembled_error(&tails, r) })
}

/// Normalized periods `u~_l = u_l / (C c^{k-2})` for all of `Omega_c`, sharing
/// one evaluator. The `c^{k-2}` is folded into the L-value tables.
pub fn normalized_periods_over(
    f: &QExpansion,
    c: i64,
    conv: &NormalizationConvention,
    exec: Exec,
) -> Result<Vec<PeriodVector>> {
    let cusps = crate::cusps::enumerate_omega_c(c);
    normalized_periods_for(f, c, &cusps, conv, exec)
}

/// As [`normalized_periods_over`] for a chosen subset of cusps with denominator `c`.
pub fn normalized_periods_for(
    f: &QExpansion,
    c: i64,
    cusps: &[Cusp],
    conv: &NormalizationConvention,
    exec: Exec,
) -> Result<Vec<PeriodVector>> {
    let k = f.weight();
    let eval = CuspEvaluator::new(f, c, conv.sign, f64::from(k) - 2.0, DEFAULT_TOL)?;
    let weights: Vec<Complex64> = moment_weights(k).into_iter().map(|w| w / conv.constant).collect();
    let tails: Vec<f64> = (1..k).map(|s| eval.tail_bound(s)).collect();
    Ok(exec.map(cusps, |cusp| {
        let r = cusp.value();
        let entries = assemble(&eval.lvalues_at(cusp), r, &weights);
        PeriodVector {
            entries,
            cusp: *cusp,
            num: cusp.a,
            den: cusp.c,
            error_bound: assembled_error(&tails, r) / conv.constant.norm(),
        }
    }))
}

pub fn normalized_period_vector(f: &QExpansion, cusp: &Cusp, conv: &NormalizationConvention) -> Result<PeriodVector> {
    let mut v = normalized_periods_for(f, cusp.c, &[*cusp], conv, Exec::Sequential)?;
    Ok(v.pop().expect("one cusp"))
}

/// `max_l |u~_l - eps L(-d/c, k-1) (a/c)^l|` together with `|u~_0 - eps L(-d/c, k-1)|`.
pub fn dominant_term_residual(f: &QExpansion, cusp: &Cusp, conv: &NormalizationConvention) -> Result<(f64, f64)> {
    let k = f.weight();
    let u = normalized_period_vector(f, cusp, conv)?;
    let eval = CuspEvaluator::new(f, cusp.c, conv.sign, 0.0, DEFAULT_TOL)?;
    let dual = cusp.dual_cusp();
    let lead = f64::from(conv.sign) * eval.lvalues_at(&dual)[(k - 2) as usize];
    let r = cusp.value();
    let mut worst = 0.0f64;
    let mut rp = 1.0;
    for e in &u.entries {
        worst = worst.max((e - lead * rp).norm());
        rp *= r;
    }
    Ok((worst, (u.entries[0] - lead).norm()))
}

/// Periods by direct quadrature of `f` on the vertical line, with per-entry
/// error estimates.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadraturePeriods {
    pub values: Vec<Complex64>,
    pub errors: Vec<f64>,
    /// `int |integrand_l|`, the scale against which cancellation is measured.
    pub l1_norms: Vec<f64>,
}

/// Evaluates `f(x + it)` at `x = num/c` from the q-expansion.
struct LineEvaluator<'a> {
    coeffs: &'a [f64],
    phases: Vec<Complex64>,
    c: usize,
    half_k: f64,
}

impl LineEvaluator<'_> {
    /// Terms needed so the remainder is below `e^{-50}` in absolute terms.
    fn cutoff(&self, t: f64) -> usize {
        let mut n = 1usize;
        while TWO_PI * n as f64 * t - self.half_k * (n as f64).ln() < 50.0 {
            n = n + 1 + n / 8;
        }
        n
    }

    fn eval(&self, num: usize, t: f64) -> Result<Complex64> {
        let n_max = self.cutoff(t);
        if n_max > self.coeffs.len() {
            return Err(Error::InsufficientCoefficients { required: n_max, available: self.coeffs.len() });
        }
        let q = (-TWO_PI * t).exp();
        let mut qn = 1.0;
        let mut idx = 0usize;
        let mut acc = Complex64::zero();
        for a in &self.coeffs[..n_max] {
            qn *= q;
            idx = (idx + num) % self.c;
            acc += self.phases[idx] * (a * qn);
        }
        Ok(acc)
    }
}

/// Independent evaluation of `u_0 .. u_{k-2}` at `a/c`: the line from `a/c` up
/// to `a/c + i/c` is mapped by the cusp matrix to the line above `-d/c`, and
/// both halves are integrated numerically.
pub fn period_quadrature_vector(f: &QExpansion, cusp: &Cusp) -> Result<QuadraturePeriods> {
    let k = f.weight();
    let dim = (k - 1) as usize;
    let c = cusp.c;
    let cf = c as f64;
    if c % f.level() as i64 != 0 {
        return Err(Error::WrongLevel { c, level: f.level() });
    }
    let sign = Complex64::new(0.0, 1.0).powu(k);
    let line = LineEvaluator { coeffs: f.floats(), phases: roots_of_unity(c), c: c as usize, half_k: f64::from(k) / 2.0 };
    line.eval(1, 1.0 / cf)?;
    let r = cusp.value();
    let a = cusp.a as usize;
    let dn = cusp.dual_numerator() as usize;
    let upper_end = {
        let mut t = 10.0f64;
        while TWO_PI * t < 60.0 + f64::from(k) * ((cf * t).ln() + (1.0 + t).ln()) {
            t *= 1.25;
        }
        t
    };
    let i = Complex64::new(0.0, 1.0);
    // components 0..dim: the integrand; dim..2 dim: its modulus
    let integrand = |t: f64, out: &mut [[f64; 2]], scale: Option<&[f64]>| {
        let up = line.eval(a, t).unwrap_or(Complex64::new(f64::NAN, 0.0)) * i;
        let low = line.eval(dn, t).unwrap_or(Complex64::new(f64::NAN, 0.0))
            * i
            * sign
            * (cf * t).powi(k as i32)
            / (cf * cf * t * t);
        let z_up = Complex64::new(r, t);
        let z_low = Complex64::new(r, 1.0 / (cf * cf * t));
        let (mut p_up, mut p_low) = (Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0));
        for l in 0..dim {
            let v = up * p_up + low * p_low;
            let s = scale.map_or(1.0, |s| s[l]);
            out[l] = [v.re / s, v.im / s];
            if scale.is_none() {
                out[dim + l] = [v.norm(), 0.0];
            }
            p_up *= z_up;
            p_low *= z_low;
        }
    };
    let lo = 1.0 / cf;
    let (coarse, _) = integrate_vec(|t, out| integrand(t, out, None), lo, upper_end, 2 * dim, 0.0, 96);
    let norms: Vec<f64> = (0..dim).map(|l| coarse[dim + l][0].max(f64::MIN_POSITIVE)).collect();
    let (fine, err) = integrate_vec(|t, out| integrand(t, out, Some(&norms)), lo, upper_end, dim, 1e-13, 6000);
    let values: Vec<Complex64> = fine.iter().zip(&norms).map(|(v, s)| Complex64::new(v[0], v[1]) * *s).collect();
    if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::Quadrature(f64::NAN));
    }
    if err > 1e-9 {
        return Err(Error::Quadrature(err));
    }
    Ok(QuadraturePeriods { values, errors: norms.iter().map(|s| s * err.max(1e-15)).collect(), l1_norms: norms })
}

/// `u_l` at `a/c` by quadrature.
pub fn period_quadrature_oracle(f: &QExpansion, cusp: &Cusp, l: u32) -> Result<Complex64> {
    if l + 2 > f.weight() {
        return Err(Error::OutOfRange(format!("l = {l} above k-2")));
    }
    Ok(period_quadrature_vector(f, cusp)?.values[l as usize])
}

/// `sigma_f(g)`, zero when `g` fixes infinity.
pub fn sigma_poly(f: &QExpansion, g: &GammaMatrix, tol: f64) -> Result<HomogeneousPoly> {
    let n = (f.weight() - 2) as usize;
    if g.c == 0 {
        return Ok(HomogeneousPoly::zero(n));
    }
    let u = period_vector_at(f, g.a, g.c, tol)?;
    Ok(HomogeneousPoly {
        coeffs: u.entries.iter().enumerate().map(|(i, e)| e * binomial(n as u32, i as u32)).collect(),
    })
}

/// Integer coefficients of `(aX + cY)^i (bX + dY)^{n-i}` indexed by the power of `X`.
fn substitution_row(g: &GammaMatrix, i: usize, n: usize) -> Vec<BigInt> {
    let lin_pow = |x: i64, y: i64, e: usize| -> Vec<BigInt> {
        let mut p = vec![BigInt::from(1)];
        for _ in 0..e {
            let mut q = vec![BigInt::zero(); p.len() + 1];
            for (m, c) in p.iter().enumerate() {
                q[m + 1] += c * x;
                q[m] += c * y;
            }
            p = q;
        }
        p
    };
    let left = lin_pow(g.a, g.c, i);
    let right = lin_pow(g.b, g.d, n - i);
    let mut out = vec![BigInt::zero(); n + 1];
    for (u, x) in left.iter().enumerate() {
        for (v, y) in right.iter().enumerate() {
            out[u + v] += x * y;
        }
    }
    out
}

/// `(g . P)(X, Y) = P(aX + cY, bX + dY)`.
pub fn gamma_action(g: &GammaMatrix, p: &HomogeneousPoly) -> HomogeneousPoly {
    let n = p.degree();
    let mut out = HomogeneousPoly::zero(n);
    for (i, pi) in p.coeffs.iter().enumerate() {
        if pi.is_zero() {
            continue;
        }
        for (m, c) in substitution_row(g, i, n).iter().enumerate() {
            out.coeffs[m] += pi * c.to_f64().unwrap_or(f64::INFINITY);
        }
    }
    out
}

/// `g . sigma_f(h)` expanded in monomials.
///
/// With `r = h infinity` and `m_j = int_r^{i infinity} f(z) (z - r)^j dz`,
/// `sigma_f(h)(X, Y) = sum_j C(n, j) m_j X^j (rX + Y)^{n-j}`; acting by `g`
/// maps `rX + Y` to `(ra + b)X + (rc + d)Y`, whose powers are formed directly.
/// This avoids the cancellation of substituting into monomial coefficients
/// when `g` has large entries and `g h` does not.
pub fn transported_sigma(f: &QExpansion, g: &GammaMatrix, h: &GammaMatrix, tol: f64) -> Result<HomogeneousPoly> {
    let n = (f.weight() - 2) as usize;
    if h.c == 0 {
        return Ok(HomogeneousPoly::zero(n));
    }
    let (num, den) = if h.c < 0 { (-h.a, -h.c) } else { (h.a, h.c) };
    let cusp = Cusp::new(num.rem_euclid(den), den)?;
    let eval = CuspEvaluator::new(f, den, fe_sign(f)?, 0.0, tol)?;
    let moments: Vec<Complex64> =
        eval.lvalues_at(&cusp).iter().zip(moment_weights(f.weight())).map(|(l, w)| l * w).collect();
    // (ra + b, rc + d) with r = num/den, from exact integer numerators
    let p = (i128::from(num) * i128::from(g.a) + i128::from(den) * i128::from(g.b)) as f64 / den as f64;
    let q = (i128::from(num) * i128::from(g.c) + i128::from(den) * i128::from(g.d)) as f64 / den as f64;
    let mut out = HomogeneousPoly::zero(n);
    let mut left = vec![1.0f64];
    for (j, m) in moments.iter().enumerate() {
        let e = n - j;
        let right: Vec<f64> = (0..=e).map(|i| binomial(e as u32, i as u32) * p.powi(i as i32) * q.powi((e - i) as i32)).collect();
        let w = m * binomial(n as u32, j as u32);
        for (u, x) in left.iter().enumerate() {
            for (v, y) in right.iter().enumerate() {
                out.coeffs[u + v] += w * (x * y);
            }
        }
        // left <- left * (aX + cY)
        let mut next = vec![0.0; left.len() + 1];
        for (u, x) in left.iter().enumerate() {
            next[u + 1] += x * g.a as f64;
            next[u] += x * g.c as f64;
        }
        left = next;
    }
    Ok(out)
}

/// Relative residual of `sigma(g1 g2) = sigma(g1) + g1 . sigma(g2)`.
pub fn verify_cocycle(f: &QExpansion, g1: &GammaMatrix, g2: &GammaMatrix, tol: f64) -> Result<f64> {
    let id = GammaMatrix::identity(g1.level);
    let prod = mat_mul(g1, g2)?;
    let s12 = transported_sigma(f, &id, &prod, tol)?;
    let s1 = transported_sigma(f, &id, g1, tol)?;
    let s2 = transported_sigma(f, g1, g2, tol)?;
    let scale = s12.max_abs().max(s1.max_abs()).max(s2.max_abs());
    if scale == 0.0 {
        return Ok(0.0);
    }
    Ok(s12.sub(&s1).sub(&s2).max_abs() / scale)
}

/// `sigma(S) + S . sigma(S)`, relative.
pub fn s_relation_residual(f: &QExpansion, tol: f64) -> Result<f64> {
    let s = GammaMatrix::s();
    let p = sigma_poly(f, &s, tol)?;
    let q = transported_sigma(f, &s, &s, tol)?;
    Ok(p.add(&q).max_abs() / p.max_abs().max(q.max_abs()))
}

/// `sigma(U) + U . sigma(U) + U^2 . sigma(U)` for `U = S T`, relative.
pub fn u_relation_residual(f: &QExpansion, tol: f64) -> Result<f64> {
    let u = mat_mul(&GammaMatrix::s(), &GammaMatrix::translation(1, 1))?;
    let u2 = mat_mul(&u, &u)?;
    let p = sigma_poly(f, &u, tol)?;
    let q = transported_sigma(f, &u, &u, tol)?;
    let r = transported_sigma(f, &u2, &u, tol)?;
    let scale = p.max_abs().max(q.max_abs()).max(r.max_abs());
    Ok(p.add(&q).add(&r).max_abs() / scale)
}

/// `r_{f,g}(X) = (1/(k-1)!) int_{g infinity}^{infinity} f(z) (z - X)^{k-2} dz`.
pub fn period_polynomial(f: &QExpansion, g: &GammaMatrix, tol: f64) -> Result<PeriodPolynomial> {
    if g.c == 0 {
        return Err(Error::OutOfRange("g fixes infinity".into()));
    }
    let u = period_vector_at(f, g.a, g.c, tol)?;
    Ok(period_polynomial_from(&u.entries, *g))
}

pub fn period_polynomial_from(u: &[Complex64], g: GammaMatrix) -> PeriodPolynomial {
    let n = u.len() - 1;
    let scale = 1.0 / factorial(n as u32 + 1);
    let coeffs = (0..=n)
        .map(|i| {
            let b = u[n - i] * (binomial(n as u32, i as u32) * scale);
            if i % 2 == 0 {
                b
            } else {
                -b
            }
        })
        .collect();
    PeriodPolynomial { coeffs, matrix: g }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cusps::{cusp_matrix, enumerate_omega_c};
    use crate::form::{build_delta, build_level_one_eigenform};
    use crate::ltwist::ltwist_cusp;

    fn delta() -> QExpansion {
        build_delta(2000).unwrap()
    }

    fn close(a: Complex64, b: Complex64, rel: f64) -> bool {
        (a - b).norm() <= rel * a.norm().max(b.norm()).max(1e-300)
    }

    #[test]
    fn first_entry_is_scaled_l_value() {
        let f = delta();
        let cusp = Cusp::new(3, 7).unwrap();
        let u = period_vector(&f, &cusp, 1e-13).unwrap();
        let l1 = ltwist_cusp(&f, &cusp, 1, 1e-13).unwrap().value;
        assert!(close(u.entries[0], l1 / Complex64::new(0.0, -TWO_PI), 1e-14));
    }

    #[test]
    fn unit_cusp_entries_alternate_real_and_imaginary() {
        let f = delta();
        let u = period_vector(&f, &Cusp::new(0, 1).unwrap(), 1e-13).unwrap();
        let scale = u.entries.iter().map(|e| e.norm()).fold(0.0, f64::max);
        for (l, e) in u.entries.iter().enumerate() {
            let stray = if l % 2 == 0 { e.re } else { e.im };
            assert!(stray.abs() < 1e-12 * scale, "l={l} {e}");
            assert!(e.norm() > 0.0);
        }
    }

    #[test]
    fn agrees_with_quadrature() {
        let f = delta();
        for (a, c) in [(0, 1), (1, 2), (2, 7), (5, 13), (17, 40), (33, 97)] {
            let cusp = Cusp::new(a, c).unwrap();
            let u = period_vector(&f, &cusp, 1e-13).unwrap();
            let q = period_quadrature_vector(&f, &cusp).unwrap();
            for l in 0..11 {
                let diff = (u.entries[l] - q.values[l]).norm();
                assert!(diff <= 1e-9 * q.l1_norms[l], "{cusp} l={l}: {} vs {}", u.entries[l], q.values[l]);
            }
        }
    }

    #[test]
    fn quadrature_for_single_entry() {
        let f = delta();
        let cusp = Cusp::new(0, 1).unwrap();
        let v = period_quadrature_oracle(&f, &cusp, 0).unwrap();
        assert!(v.re.abs() < 1e-12 * v.norm());
        assert!(period_quadrature_oracle(&f, &cusp, 11).is_err());
    }

    #[test]
    fn quadrature_reports_missing_coefficients() {
        let f = build_delta(50).unwrap();
        assert!(matches!(
            period_quadrature_vector(&f, &Cusp::new(1, 97).unwrap()),
            Err(Error::InsufficientCoefficients { .. })
        ));
    }

    #[test]
    fn representative_shift() {
        let f = delta();
        let a = period_vector_at(&f, 3, 10, 1e-13).unwrap();
        let b = period_vector_at(&f, -3, -10, 1e-13).unwrap();
        assert_eq!(a.entries, b.entries);
        // shifting the point by an integer shifts the periods binomially
        let shifted = period_vector_at(&f, 13, 10, 1e-13).unwrap();
        let mut expect = [Complex64::zero(); 11];
        for l in 0..11 {
            for j in 0..=l {
                expect[l] += a.entries[j] * binomial(l as u32, j as u32);
            }
        }
        for l in 0..11 {
            assert!(close(shifted.entries[l], expect[l], 1e-10));
        }
    }

    #[test]
    fn action_axioms() {
        let p = HomogeneousPoly {
            coeffs: (0..11).map(|i| Complex64::new(i as f64 - 3.0, 0.5 * i as f64)).collect(),
        };
        let id = GammaMatrix::identity(1);
        assert_eq!(gamma_action(&id, &p), p);
        let g1 = GammaMatrix::new(2, 1, 1, 1, 1).unwrap();
        let g2 = GammaMatrix::new(1, -3, 2, -5, 1).unwrap();
        let lhs = gamma_action(&mat_mul(&g1, &g2).unwrap(), &p);
        let rhs = gamma_action(&g1, &gamma_action(&g2, &p));
        for (x, y) in lhs.coeffs.iter().zip(&rhs.coeffs) {
            assert!((x - y).norm() <= 1e-12 * lhs.max_abs());
        }
        let mut xn = HomogeneousPoly::zero(10);
        xn.coeffs[10] = Complex64::new(1.0, 0.0);
        let img = gamma_action(&GammaMatrix::s(), &xn);
        let mut yn = HomogeneousPoly::zero(10);
        yn.coeffs[0] = Complex64::new(1.0, 0.0);
        assert_eq!(img, yn);
    }

    #[test]
    fn parabolic_and_trivial_cocycle_values() {
        let f = delta();
        let t = GammaMatrix::translation(1, 1);
        assert_eq!(sigma_poly(&f, &t, 1e-12).unwrap().max_abs(), 0.0);
        assert_eq!(sigma_poly(&f, &GammaMatrix::identity(1), 1e-12).unwrap().max_abs(), 0.0);
        assert_eq!(verify_cocycle(&f, &t, &t, 1e-12).unwrap(), 0.0);
        let s = sigma_poly(&f, &GammaMatrix::s(), 1e-13).unwrap();
        let u = period_vector(&f, &Cusp::new(0, 1).unwrap(), 1e-13).unwrap();
        assert_eq!(s.coeffs[10], u.entries[10]);
    }

    #[test]
    fn cocycle_relations() {
        let f = delta();
        assert!(s_relation_residual(&f, 1e-13).unwrap() < 1e-11);
        assert!(u_relation_residual(&f, 1e-13).unwrap() < 1e-11);
        let s = GammaMatrix::s();
        assert!(verify_cocycle(&f, &s, &s, 1e-13).unwrap() < 1e-11);
        let g1 = GammaMatrix::new(3, 2, 4, 3, 1).unwrap();
        let g2 = GammaMatrix::new(5, -2, 8, -3, 1).unwrap();
        assert!(verify_cocycle(&f, &g1, &g2, 1e-13).unwrap() < 1e-9);
        // inverse relation through g2 = g^{-1}
        let inv = crate::cusps::mat_inv(&g1);
        assert!(verify_cocycle(&f, &g1, &inv, 1e-13).unwrap() < 1e-12);
        // factors with large entries and a small product
        let h1 = GammaMatrix::new(-20, -31, -29, -45, 1).unwrap();
        let h2 = GammaMatrix::new(-37, -17, 24, 11, 1).unwrap();
        assert!(verify_cocycle(&f, &h1, &h2, 1e-13).unwrap() < 1e-12);
    }

    #[test]
    fn transported_matches_substitution() {
        let f = delta();
        let g = GammaMatrix::new(2, 1, 1, 1, 1).unwrap();
        let h = GammaMatrix::new(1, 0, 3, 1, 1).unwrap();
        let direct = gamma_action(&g, &sigma_poly(&f, &h, 1e-13).unwrap());
        let moved = transported_sigma(&f, &g, &h, 1e-13).unwrap();
        assert!(direct.sub(&moved).max_abs() <= 1e-12 * direct.max_abs());
        let plain = transported_sigma(&f, &GammaMatrix::identity(1), &h, 1e-13).unwrap();
        let sigma = sigma_poly(&f, &h, 1e-13).unwrap();
        assert!(plain.sub(&sigma).max_abs() <= 1e-13 * sigma.max_abs());
    }

    #[test]
    fn period_polynomial_consistency() {
        let f = delta();
        let g = cusp_matrix(2, 9, 1).unwrap();
        let r = period_polynomial(&f, &g, 1e-13).unwrap();
        let sigma = sigma_poly(&f, &g, 1e-13).unwrap();
        let alt = sigma.at_one_minus_x();
        let scale = factorial(11);
        for (b, s) in r.coeffs.iter().zip(&alt) {
            assert!(close(*b, s / scale, 1e-13));
        }
        let u = period_vector(&f, &Cusp::new(2, 9).unwrap(), 1e-13).unwrap();
        assert!(close(r.coeffs[10], u.entries[0] / scale, 1e-14));
        let x = Complex64::new(0.3, -0.2);
        assert!(close(r.eval(x), sigma.eval(Complex64::new(1.0, 0.0), -x) / scale, 1e-12));
        let s = period_polynomial(&f, &GammaMatrix::s(), 1e-13).unwrap();
        assert!(s.coeffs[10].norm() > 0.0);
        assert!(period_polynomial(&f, &GammaMatrix::identity(1), 1e-13).is_err());
    }

    #[test]
    fn normalized_first_entry_is_dual_value() {
        let f = build_delta(6000).unwrap();
        let conv = NormalizationConvention::calibrated(&f).unwrap();
        for cusp in [Cusp::new(0, 1).unwrap(), Cusp::new(5, 31).unwrap(), Cusp::new(100, 401).unwrap()] {
            let (_, first) = dominant_term_residual(&f, &cusp, &conv).unwrap();
            assert!(first < 1e-12, "{cusp}: {first}");
        }
        let (worst, _) = dominant_term_residual(&f, &Cusp::new(100, 401).unwrap(), &conv).unwrap();
        assert!(worst < 50.0 / (401.0f64 * 401.0));
    }

    #[test]
    fn normalized_matches_raw_division() {
        let f = delta();
        let conv = NormalizationConvention::calibrated(&f).unwrap();
        let reduced = NormalizationConvention::reduced(&f).unwrap();
        assert!(close(reduced.constant / conv.constant, Complex64::new(TWO_PI, 0.0), 1e-15));
        let cusp = Cusp::new(4, 23).unwrap();
        let raw = period_vector(&f, &cusp, 1e-13).unwrap();
        let nrm = normalized_period_vector(&f, &cusp, &conv).unwrap();
        let denom = conv.constant * 23f64.powi(10);
        for l in 0..11 {
            assert!(close(nrm.entries[l], raw.entries[l] / denom, 1e-12));
        }
        let sweep = normalized_periods_over(&f, 23, &conv, Exec::Parallel).unwrap();
        let seq = normalized_periods_over(&f, 23, &conv, Exec::Sequential).unwrap();
        assert_eq!(sweep, seq);
        assert_eq!(sweep.len(), enumerate_omega_c(23).len());
        assert_eq!(sweep[3].entries, nrm.entries);
    }

    #[test]
    fn weight_sixteen_cocycle() {
        let f = build_level_one_eigenform(16, 2000).unwrap();
        let g1 = GammaMatrix::new(2, 3, 5, 8, 1).unwrap();
        let g2 = GammaMatrix::new(1, 0, 7, 1, 1).unwrap();
        assert!(verify_cocycle(&f, &g1, &g2, 1e-13).unwrap() < 1e-9);
    }
}
