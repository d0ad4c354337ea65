//! Zeros of period polynomials and their clustering around `a/c`.

use std::f64::consts::PI;

use num_complex::Complex64;
use num_traits::Zero;

use crate::arith::{binomial, factorial};
use crate::cusps::{cusp_matrix, Cusp};
use crate::error::{Error, Result};
use crate::form::QExpansion;
use crate::ltwist::{fe_sign, ltwist_series, CuspEvaluator, DEFAULT_TOL};
use crate::par::Exec;
use crate::periods::{assemble, period_polynomial_from, PeriodPolynomial};

pub const MAX_ITERATIONS: usize = 500;

fn horner(coeffs: &[Complex64], x: Complex64) -> (Complex64, Complex64) {
    let mut p = Complex64::zero();
    let mut dp = Complex64::zero();
    for c in coeffs.iter().rev() {
        dp = dp * x + p;
        p = p * x + c;
    }
    (p, dp)
}

pub fn poly_eval(coeffs: &[Complex64], x: Complex64) -> Complex64 {
    horner(coeffs, x).0
}

fn max_abs(coeffs: &[Complex64]) -> f64 {
    coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
}

/// `|p(x)| <= 1e-10 max|b_i| (1 + |x|)^deg`.
pub fn residual_ok(coeffs: &[Complex64], x: Complex64) -> bool {
    let deg = coeffs.len() - 1;
    poly_eval(coeffs, x).norm() <= 1e-10 * max_abs(coeffs) * (1.0 + x.norm()).powi(deg as i32)
}

/// All roots of `sum_i b_i X^i` (lowest degree first) by Aberth-Ehrlich
/// iteration, sorted by real then imaginary part.
///
/// The variable is first rescaled so the constant and leading coefficients
/// have equal size; roots of very different magnitude are otherwise missed by
/// the residual test.
pub fn poly_roots(coeffs: &[Complex64]) -> Result<Vec<Complex64>> {
    let mut b = coeffs.to_vec();
    while b.len() > 1 && b[b.len() - 1].is_zero() && b[0].is_zero() {
        b.pop();
    }
    let deg = b.len().saturating_sub(1);
    let scale = max_abs(&b);
    if deg == 0 || b[deg].norm() <= 1e-12 * scale {
        return Err(Error::DegenerateLeading);
    }
    // roots at zero
    let zeros_at_origin = b.iter().take_while(|c| c.is_zero()).count();
    let b: Vec<Complex64> = b[zeros_at_origin..].to_vec();
    let deg_nz = b.len() - 1;
    let mut roots = vec![Complex64::zero(); zeros_at_origin];
    if deg_nz > 0 {
        let rho = (b[0].norm() / b[deg_nz].norm()).powf(1.0 / deg_nz as f64);
        let mut pw = 1.0;
        let mut balanced: Vec<Complex64> = b
            .iter()
            .map(|c| {
                let v = c * pw;
                pw *= rho;
                v
            })
            .collect();
        let m = max_abs(&balanced);
        for c in balanced.iter_mut() {
            *c /= m;
        }
        roots.extend(aberth(&balanced)?.into_iter().map(|z| z * rho));
    }
    roots.sort_by(|x, y| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)));
    Ok(roots)
}

fn aberth(b: &[Complex64]) -> Result<Vec<Complex64>> {
    let deg = b.len() - 1;
    let lead = b[deg];
    let radius = 1.0 + b[..deg].iter().map(|c| (c / lead).norm()).fold(0.0, f64::max);
    let mut z: Vec<Complex64> = (0..deg)
        .map(|j| Complex64::from_polar(radius, 2.0 * PI * j as f64 / deg as f64 + 0.4))
        .collect();
    // a multiple root never settles below the rounding level, so accept once
    // every residual has held for a few consecutive sweeps
    let mut settled = 0;
    for _ in 0..MAX_ITERATIONS {
        let mut done = true;
        let mut residuals = true;
        for i in 0..deg {
            let (p, dp) = horner(b, z[i]);
            if p.is_zero() {
                continue;
            }
            let ratio = p / dp;
            let repulsion: Complex64 = (0..deg).filter(|&j| j != i).map(|j| (z[i] - z[j]).inv()).sum();
            let w = ratio / (Complex64::new(1.0, 0.0) - ratio * repulsion);
            if !w.re.is_finite() || !w.im.is_finite() {
                continue;
            }
            z[i] -= w;
            if !residual_ok(b, z[i]) {
                residuals = false;
            }
            if w.norm() > 1e-13 * (1.0 + z[i].norm()) {
                done = false;
            }
        }
        settled = if residuals { settled + 1 } else { 0 };
        if residuals && (done || settled >= 8) {
            return Ok(z);
        }
    }
    Err(Error::NoConvergence(MAX_ITERATIONS))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ZeroReport {
    pub cusp: Cusp,
    pub polynomial: PeriodPolynomial,
    pub roots: Vec<Complex64>,
    pub deviations: Vec<f64>,
    pub normalized_ratios: Vec<f64>,
    pub residuals: Vec<f64>,
    /// Whether every root passes the residual test of [`poly_roots`].
    pub residuals_ok: bool,
    /// `|sum x_0 + b~_{k-3}|` and `|prod x_0 - (-1)^{k-2} b~_0|`, relative to
    /// `max|x_0|` and `max|x_0|^{k-2}` respectively.
    pub vieta_sum_residual: f64,
    pub vieta_product_residual: f64,
    /// `|b~_i - (-1)^i C(k-2, i) (a/c)^{k-2-i}|` for each `i`.
    pub model_residuals: Vec<f64>,
}

impl ZeroReport {
    pub fn max_deviation(&self) -> f64 {
        self.deviations.iter().copied().fold(0.0, f64::max)
    }

    pub fn max_normalized_ratio(&self) -> f64 {
        self.normalized_ratios.iter().copied().fold(0.0, f64::max)
    }
}

/// `(1 + |a/c|)^{(k-3)/(k-2)} c^{-2/(k-2)}`.
pub fn localization_scale(k: u32, r: f64, c: i64) -> f64 {
    let n = f64::from(k) - 2.0;
    (1.0 + r.abs()).powf((n - 1.0) / n) * (c as f64).powf(-2.0 / n)
}

/// Roots of `r_{f,g}` for `g infinity = a/c`.
pub fn zero_report(f: &QExpansion, cusp: &Cusp) -> Result<ZeroReport> {
    if f.weight() < 6 {
        return Err(Error::UnsupportedWeight(i64::from(f.weight())));
    }
    if !f.is_normalized_eigenform() {
        return Err(Error::OutOfRange("zero localization needs a normalized eigenform".into()));
    }
    let eval = CuspEvaluator::new(f, cusp.c, fe_sign(f)?, 0.0, DEFAULT_TOL)?;
    zero_report_with(f, &eval, cusp)
}

pub fn zero_sweep(f: &QExpansion, c: i64, cusps: &[Cusp], exec: Exec) -> Result<Vec<ZeroReport>> {
    if f.weight() < 6 {
        return Err(Error::UnsupportedWeight(i64::from(f.weight())));
    }
    let eval = CuspEvaluator::new(f, c, fe_sign(f)?, 0.0, DEFAULT_TOL)?;
    exec.map(cusps, |cusp| zero_report_with(f, &eval, cusp)).into_iter().collect()
}

fn zero_report_with(f: &QExpansion, eval: &CuspEvaluator<'_>, cusp: &Cusp) -> Result<ZeroReport> {
    let k = f.weight();
    let n = (k - 2) as usize;
    let lvals = eval.lvalues_at(cusp);
    let step = Complex64::new(0.0, 1.0 / (2.0 * PI));
    let weights: Vec<Complex64> = (0..=n as u32).map(|j| step.powu(j + 1) * factorial(j)).collect();
    let moments: Vec<Complex64> = lvals.iter().zip(&weights).map(|(l, w)| l * w).collect();
    let r = cusp.value();
    let u = assemble(&lvals, r, &weights);
    let g = cusp_matrix(cusp.a, cusp.c, f.level())?;
    let poly = period_polynomial_from(&u, g);
    let b = &poly.coeffs;
    if b[n].norm() <= 1e-12 * max_abs(b) {
        return Err(Error::DegenerateLeading);
    }
    // r(a/c + Y) = (1/(k-1)!) sum_j C(n, j) m_j (-Y)^{n-j}, with m_j the moments about a/c
    let scale = 1.0 / factorial(k - 1);
    let mut shifted = vec![Complex64::zero(); n + 1];
    for (j, m) in moments.iter().enumerate() {
        let sgn = if (n - j).is_multiple_of(2) { 1.0 } else { -1.0 };
        shifted[n - j] = m * (binomial(n as u32, j as u32) * scale * sgn);
    }
    let roots: Vec<Complex64> = {
        let mut v: Vec<Complex64> = poly_roots(&shifted)?.into_iter().map(|y| y + r).collect();
        v.sort_by(|x, y| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)));
        v
    };
    let loc = localization_scale(k, r, cusp.c);
    let deviations: Vec<f64> = roots.iter().map(|x| (x - r).norm()).collect();
    let normalized_ratios = deviations.iter().map(|d| d / loc).collect();
    let residuals: Vec<f64> = roots.iter().map(|x| poly_eval(b, *x).norm()).collect();
    let residuals_ok = roots.iter().all(|x| residual_ok(b, *x));

    let lead = b[n];
    let normalized: Vec<Complex64> = b.iter().map(|x| x / lead).collect();
    let sum: Complex64 = roots.iter().sum();
    let prod: Complex64 = roots.iter().product();
    let root_scale = roots.iter().map(|x| x.norm()).fold(f64::MIN_POSITIVE, f64::max);
    let vieta_sum_residual = (sum + normalized[n - 1]).norm() / root_scale;
    let sgn = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
    let vieta_product_residual = (prod - normalized[0] * sgn).norm() / root_scale.powi(n as i32);
    let model_residuals = (0..=n)
        .map(|i| {
            let s = if i % 2 == 0 { 1.0 } else { -1.0 };
            (normalized[i] - s * binomial(n as u32, i as u32) * r.powi((n - i) as i32)).norm()
        })
        .collect();
    Ok(ZeroReport {
        cusp: *cusp,
        polynomial: poly,
        roots,
        deviations,
        normalized_ratios,
        residuals,
        residuals_ok,
        vieta_sum_residual,
        vieta_product_residual,
        model_residuals,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NonvanishingReport {
    /// `max_x |L(f (x) e(x), k-1) - a_f(1) e(x)|`, the tail beyond the first term.
    pub max_tail: f64,
    /// `max_x |L(f (x) e(x), k-1) - a_f(1)|`.
    pub max_offset_from_one: f64,
    pub min_abs: f64,
}

/// Scans `L(f (x) e(x), k-1)` at the midpoints of `grid` equal cells of `[0, 1)`.
pub fn nonvanishing_check(f: &QExpansion, grid: usize, exec: Exec) -> Result<NonvanishingReport> {
    let s = Complex64::new(f64::from(f.weight()) - 1.0, 0.0);
    let a1 = f.coeff_f64(1);
    let vals: Vec<Result<(f64, f64, f64)>> = exec.map_range(0..grid, |j| {
        let x = (j as f64 + 0.5) / grid as f64;
        let l = ltwist_series(f, x, s, 1e-10)?.value;
        Ok(((l - crate::ltwist::e(x) * a1).norm(), (l - a1).norm(), l.norm()))
    });
    let mut rep = NonvanishingReport { max_tail: 0.0, max_offset_from_one: 0.0, min_abs: f64::INFINITY };
    for v in vals {
        let (t, o, m) = v?;
        rep.max_tail = rep.max_tail.max(t);
        rep.max_offset_from_one = rep.max_offset_from_one.max(o);
        rep.min_abs = rep.min_abs.min(m);
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::form::build_delta;
    use rand::{Rng, SeedableRng};

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn quadratic() {
        let r = poly_roots(&[c(-1.0), c(0.0), c(1.0)]).unwrap();
        assert!((r[0] - c(-1.0)).norm() < 1e-14 && (r[1] - c(1.0)).norm() < 1e-14);
    }

    #[test]
    fn model_polynomial_cluster() {
        let r: f64 = 3.0 / 17.0;
        let b: Vec<Complex64> = (0..=10)
            .map(|i| c(binomial(10, i) * (-r).powi(10 - i as i32)))
            .collect();
        let roots = poly_roots(&b).unwrap();
        assert_eq!(roots.len(), 10);
        for x in roots {
            assert!((x - r).norm() < 1e-1);
            assert!(residual_ok(&b, x));
        }
        // the cluster of a shifted-center form resolves exactly
        let mut shifted = vec![Complex64::zero(); 11];
        shifted[10] = c(1.0);
        shifted[0] = c(-1e-20);
        for y in poly_roots(&shifted).unwrap() {
            assert!((y.norm() - 1e-2).abs() < 1e-12);
        }
    }

    #[test]
    fn random_polynomials_have_small_residuals() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let b: Vec<Complex64> = (0..=10).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
            let roots = poly_roots(&b).unwrap();
            assert_eq!(roots.len(), 10);
            for x in &roots {
                assert!(residual_ok(&b, *x));
            }
        }
    }

    #[test]
    fn degenerate_leading() {
        assert_eq!(poly_roots(&[c(1.0), c(2.0), c(1e-15)]), Err(Error::DegenerateLeading));
        assert_eq!(poly_roots(&[c(1.0)]), Err(Error::DegenerateLeading));
        let r = poly_roots(&[c(0.0), c(0.0), c(1.0)]).unwrap();
        assert_eq!(r, vec![c(0.0), c(0.0)]);
    }

    #[test]
    fn delta_unit_cusp_report() {
        let f = build_delta(2000).unwrap();
        let rep = zero_report(&f, &Cusp::new(0, 1).unwrap()).unwrap();
        assert_eq!(rep.roots.len(), 10);
        assert!(rep.residuals_ok);
        assert!(rep.vieta_sum_residual < 1e-6 && rep.vieta_product_residual < 1e-6);
    }

    #[test]
    fn delta_roots_cluster_near_cusp() {
        let f = build_delta(2000).unwrap();
        let rep = zero_report(&f, &Cusp::new(1, 101).unwrap()).unwrap();
        assert_eq!(rep.roots.len(), 10);
        // u_{k-2}(1/c) vanishes (path 1/c -> 0 -> i infinity), so X = 0 is a root
        assert!(rep.roots.iter().any(|x| x.norm() < 1e-12));
        assert!(rep.residuals_ok);
        assert!(rep.max_normalized_ratio() < 3.0);
        assert!(rep.vieta_sum_residual < 1e-6, "{}", rep.vieta_sum_residual);
        assert!(rep.vieta_product_residual < 1e-6, "{}", rep.vieta_product_residual);
        for (i, m) in rep.model_residuals.iter().enumerate() {
            assert!(*m < 1e-2, "i={i} {m}");
        }
    }

    #[test]
    fn weight_checks() {
        let f = build_delta(100).unwrap();
        let g = QExpansion::new(12, 1, f.coeffs().to_vec(), false).unwrap();
        assert!(zero_report(&g, &Cusp::new(0, 1).unwrap()).is_err());
    }

    #[test]
    fn nonvanishing_small_grid() {
        let f = build_delta(2000).unwrap();
        let rep = nonvanishing_check(&f, 50, Exec::Sequential).unwrap();
        assert!(rep.max_tail <= 0.8 && rep.max_tail > 0.0);
        assert!(rep.min_abs >= 0.2);
        // the first term alone moves around the unit circle
        assert!(rep.max_offset_from_one > 1.9);
    }
}
