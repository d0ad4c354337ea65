//! Moments of normalized periods over `Omega_c` and the limiting distribution.
//!
//! The main term of the `(alpha, beta)` moment is
//! `eps^{alpha+beta} L_{f,alpha,beta}(k-1) / (1 + sum_j j (alpha_j + beta_j))`, where
//! `L_{f,alpha,beta}(s) = int_0^1 L(f (x) e(x), s)^alpha conj(L)^beta dx` is a sum over
//! tuples with `n_1 + .. + n_alpha = n_{alpha+1} + .. + n_{alpha+beta}`.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::form::QExpansion;
use crate::ltwist::{ltwist_series, series_tail_bound};
use crate::par::{pairwise_sum, Exec};
use crate::periods::{normalized_periods_over, NormalizationConvention, PeriodVector};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MomentSpec {
    pub alpha: Vec<u32>,
    pub beta: Vec<u32>,
}

impl MomentSpec {
    /// Exponent vectors of length `k - 1`; fails if all are zero.
    pub fn new(alpha: Vec<u32>, beta: Vec<u32>) -> Result<Self> {
        if alpha.len() != beta.len() {
            return Err(Error::OutOfRange("alpha and beta lengths differ".into()));
        }
        if alpha.iter().chain(&beta).all(|&x| x == 0) {
            return Err(Error::OutOfRange("moment exponents are all zero".into()));
        }
        Ok(MomentSpec { alpha, beta })
    }

    /// `alpha_j = a`, `beta_j = b` at a single index.
    pub fn single(k: u32, j: usize, a: u32, b: u32) -> Result<Self> {
        let n = (k - 1) as usize;
        if j >= n {
            return Err(Error::OutOfRange(format!("index {j} above k-2")));
        }
        let mut alpha = vec![0; n];
        let mut beta = vec![0; n];
        alpha[j] = a;
        beta[j] = b;
        Self::new(alpha, beta)
    }

    /// Parses `a0=1,b0=1,a3=2`; unnamed indices are zero.
    pub fn parse(text: &str, k: u32) -> Result<Self> {
        let n = (k - 1) as usize;
        let mut alpha = vec![0; n];
        let mut beta = vec![0; n];
        for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let bad = || Error::Parse { line: 0, msg: format!("bad moment term '{part}'") };
            let (key, val) = part.split_once('=').ok_or_else(bad)?;
            let val: u32 = val.trim().parse().map_err(|_| bad())?;
            let key = key.trim();
            let (side, idx) = key.split_at(1);
            let idx: usize = idx.parse().map_err(|_| bad())?;
            if idx >= n {
                return Err(Error::OutOfRange(format!("index {idx} above k-2 = {}", n - 1)));
            }
            match side {
                "a" => alpha[idx] = val,
                "b" => beta[idx] = val,
                _ => return Err(bad()),
            }
        }
        Self::new(alpha, beta)
    }

    pub fn alpha_total(&self) -> u32 {
        self.alpha.iter().sum()
    }

    pub fn beta_total(&self) -> u32 {
        self.beta.iter().sum()
    }

    /// `sum_j j (alpha_j + beta_j)`.
    pub fn n_exp(&self) -> u32 {
        self.alpha.iter().zip(&self.beta).enumerate().map(|(j, (a, b))| j as u32 * (a + b)).sum()
    }

    /// The spec with `alpha` and `beta` exchanged.
    pub fn conjugate(&self) -> Self {
        MomentSpec { alpha: self.beta.clone(), beta: self.alpha.clone() }
    }

    /// `prod_j u_j^{alpha_j} conj(u_j)^{beta_j}`.
    pub fn monomial(&self, u: &[Complex64]) -> Complex64 {
        let mut acc = Complex64::new(1.0, 0.0);
        for (j, (&a, &b)) in self.alpha.iter().zip(&self.beta).enumerate() {
            if a > 0 {
                acc *= u[j].powu(a);
            }
            if b > 0 {
                acc *= u[j].conj().powu(b);
            }
        }
        acc
    }
}

impl fmt::Display for MomentSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        for (j, a) in self.alpha.iter().enumerate().filter(|(_, a)| **a > 0) {
            parts.push(format!("a{j}={a}"));
        }
        for (j, b) in self.beta.iter().enumerate().filter(|(_, b)| **b > 0) {
            parts.push(format!("b{j}={b}"));
        }
        write!(f, "{}", parts.join(";"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiagonalValue {
    pub value: Complex64,
    pub tail_bound: f64,
    pub terms: usize,
}

/// `(a(n) / n^{k-1})_{n = 0..=m}` with a zero at `n = 0`.
fn weights(f: &QExpansion, m: usize) -> Vec<f64> {
    let k1 = f64::from(f.weight()) - 1.0;
    let mut w = vec![0.0; m + 1];
    for n in 1..=m {
        w[n] = f.coeff_f64(n) / (n as f64).powf(k1);
    }
    w
}

/// `p`-fold self-convolution of `w` up to index `len - 1`.
fn convolution_power(w: &[f64], p: u32, len: usize) -> Vec<f64> {
    let mut acc = vec![0.0; len];
    acc[0] = 1.0;
    for _ in 0..p {
        let mut next = vec![0.0; len];
        for (i, a) in acc.iter().enumerate().filter(|(_, a)| **a != 0.0) {
            for (j, b) in w.iter().enumerate().skip(1) {
                if i + j >= len {
                    break;
                }
                next[i + j] += a * b;
            }
        }
        acc = next;
    }
    acc
}

/// `L_{f,alpha,beta}(k-1)` by direct enumeration of the diagonal, with all
/// `n_i <= M0` and `M0` chosen so the omitted tuples contribute at most `tol`.
pub fn lfab_diagonal(f: &QExpansion, spec: &MomentSpec, tol: f64) -> Result<DiagonalValue> {
    let (a, b) = (spec.alpha_total(), spec.beta_total());
    if a == 0 || b == 0 {
        return Ok(DiagonalValue { value: Complex64::new(0.0, 0.0), tail_bound: 0.0, terms: 0 });
    }
    let k = f.weight();
    let sigma = f64::from(k) - 1.0;
    let p = f64::from(a + b);
    // omitted tuples: some n_i > M0; bounded by (a+b) tail(M0) S^{a+b-1} after dropping the constraint
    let s_abs = 1.0 + series_tail_bound(k, sigma, 1);
    let bound = |m: usize| p * series_tail_bound(k, sigma, m) * s_abs.powf(p - 1.0);
    let mut hi = 1usize;
    while bound(hi) > tol {
        hi *= 2;
        if hi > 1 << 40 {
            return Err(Error::OutOfRange(format!("tolerance {tol} unreachable")));
        }
    }
    let mut lo = hi / 2;
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if bound(mid) <= tol {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let m0 = hi;
    if m0 > f.truncation() {
        return Err(Error::InsufficientCoefficients { required: m0, available: f.truncation() });
    }
    let w = weights(f, m0);
    let len = (a.min(b) as usize) * m0 + 1;
    let left = convolution_power(&w, a, len);
    let right = convolution_power(&w, b, len);
    let terms: Vec<f64> = left.iter().zip(&right).map(|(x, y)| x * y).collect();
    let value = crate::par::pairwise_sum_f64(&terms);
    Ok(DiagonalValue { value: Complex64::new(value, 0.0), tail_bound: bound(m0), terms: m0 })
}

/// `int_0^1 L(f (x) e(x), k-1)^alpha conj(L)^beta dx` by the midpoint rule.
pub fn lfab_quadrature(f: &QExpansion, spec: &MomentSpec, grid_points: usize, exec: Exec) -> Result<Complex64> {
    let (a, b) = (spec.alpha_total(), spec.beta_total());
    let lv = l_on_grid(f, grid_points, 1e-13, exec)?;
    let vals: Vec<Complex64> = lv.iter().map(|l| l.powu(a) * l.conj().powu(b)).collect();
    Ok(pairwise_sum(&vals) / grid_points as f64)
}

/// `L(f (x) e(x), k-1)` at the midpoints `(j + 1/2) / grid`.
pub fn l_on_grid(f: &QExpansion, grid: usize, tol: f64, exec: Exec) -> Result<Vec<Complex64>> {
    let s = Complex64::new(f64::from(f.weight()) - 1.0, 0.0);
    exec.map_range(0..grid, |j| {
        let x = (j as f64 + 0.5) / grid as f64;
        ltwist_series(f, x, s, tol).map(|v| v.value)
    })
    .into_iter()
    .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct MomentReport {
    pub spec: MomentSpec,
    pub c: i64,
    pub convention: &'static str,
    pub empirical: Complex64,
    pub main_term: Complex64,
    pub abs_error: f64,
    /// `abs_error * c^{1/6}`.
    pub normalized_error: f64,
}

/// `eps^{alpha+beta} L_{f,alpha,beta}(k-1) / (1 + N)`.
pub fn main_term(f: &QExpansion, spec: &MomentSpec, sign: i8) -> Result<Complex64> {
    let l = lfab_diagonal(f, spec, 1e-13)?.value;
    let eps = f64::from(sign).powi((spec.alpha_total() + spec.beta_total()) as i32);
    Ok(l * eps / f64::from(1 + spec.n_exp()))
}

/// Average of `spec.monomial` over precomputed normalized periods.
pub fn moment_from_periods(periods: &[PeriodVector], spec: &MomentSpec) -> Complex64 {
    let vals: Vec<Complex64> = periods.iter().map(|p| spec.monomial(&p.entries)).collect();
    pairwise_sum(&vals) / periods.len() as f64
}

/// Moments for several specs at one modulus, sharing the period sweep.
pub fn empirical_moments(
    f: &QExpansion,
    c: i64,
    specs: &[MomentSpec],
    conv: &NormalizationConvention,
    exec: Exec,
) -> Result<Vec<MomentReport>> {
    let periods = normalized_periods_over(f, c, conv, exec)?;
    reports_from_periods(f, c, &periods, specs, conv)
}

pub fn reports_from_periods(
    f: &QExpansion,
    c: i64,
    periods: &[PeriodVector],
    specs: &[MomentSpec],
    conv: &NormalizationConvention,
) -> Result<Vec<MomentReport>> {
    specs
        .iter()
        .map(|spec| {
            let empirical = moment_from_periods(periods, spec);
            let main = main_term(f, spec, conv.sign)?;
            let abs_error = (empirical - main).norm();
            Ok(MomentReport {
                spec: spec.clone(),
                c,
                convention: conv.name(),
                empirical,
                main_term: main,
                abs_error,
                normalized_error: abs_error * (c as f64).powf(1.0 / 6.0),
            })
        })
        .collect()
}

pub fn empirical_moment(
    f: &QExpansion,
    c: i64,
    spec: &MomentSpec,
    conv: &NormalizationConvention,
    exec: Exec,
) -> Result<MomentReport> {
    Ok(empirical_moments(f, c, std::slice::from_ref(spec), conv, exec)?.remove(0))
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

#[derive(Clone, Debug, PartialEq)]
pub struct LimitSample {
    pub y: f64,
    pub z: f64,
    /// `eps L(f (x) e(y), k-1) (1, z, .., z^{k-2})`.
    pub entries: Vec<Complex64>,
}

/// The limit law on the product midpoint grid of `[0, 1)^2`, `y` outer.
pub fn sample_limit_law(
    f: &QExpansion,
    grid_y: usize,
    grid_z: usize,
    conv: &NormalizationConvention,
    exec: Exec,
) -> Result<Vec<LimitSample>> {
    let n = (f.weight() - 1) as usize;
    let ls = l_on_grid(f, grid_y, 1e-12, exec)?;
    let eps = f64::from(conv.sign);
    let mut out = Vec::with_capacity(grid_y * grid_z);
    for (i, l) in ls.iter().enumerate() {
        let y = (i as f64 + 0.5) / grid_y as f64;
        for j in 0..grid_z {
            let z = (j as f64 + 0.5) / grid_z as f64;
            let mut entries = Vec::with_capacity(n);
            let mut p = 1.0;
            for _ in 0..n {
                entries.push(l * (eps * p));
                p *= z;
            }
            out.push(LimitSample { y, z, entries });
        }
    }
    Ok(out)
}

/// A real projection of a period vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Projection {
    Re(usize),
    Im(usize),
    /// `|u_j / u_0|`.
    RatioAbs(usize),
}

impl Projection {
    pub fn apply(&self, u: &[Complex64]) -> f64 {
        match *self {
            Projection::Re(j) => u[j].re,
            Projection::Im(j) => u[j].im,
            Projection::RatioAbs(j) => (u[j] / u[0]).norm(),
        }
    }
}

impl FromStr for Projection {
    type Err = Error;

    /// `re0`, `im3`, `ratio1`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse { line: 0, msg: format!("bad projection '{s}'") };
        let split = s.find(|ch: char| ch.is_ascii_digit()).ok_or_else(bad)?;
        let (name, idx) = s.split_at(split);
        let j: usize = idx.parse().map_err(|_| bad())?;
        match name {
            "re" => Ok(Projection::Re(j)),
            "im" => Ok(Projection::Im(j)),
            "ratio" => Ok(Projection::RatioAbs(j)),
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for Projection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Projection::Re(j) => write!(f, "re{j}"),
            Projection::Im(j) => write!(f, "im{j}"),
            Projection::RatioAbs(j) => write!(f, "ratio{j}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<u64>,
}

impl Histogram {
    /// Equal-width bins over `[lo, hi]`; values outside are clamped to the end bins.
    pub fn new(values: &[f64], bins: usize, lo: f64, hi: f64) -> Self {
        let mut counts = vec![0u64; bins.max(1)];
        let width = (hi - lo) / counts.len() as f64;
        for v in values {
            let idx = if width > 0.0 { ((v - lo) / width).floor() } else { 0.0 };
            let idx = idx.clamp(0.0, (counts.len() - 1) as f64) as usize;
            counts[idx] += 1;
        }
        Histogram { lo, hi, counts }
    }

    pub fn from_values(values: &[f64], bins: usize) -> Self {
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Self::new(values, bins, lo, hi)
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EmpiricalDistribution {
    pub c: i64,
    pub projection: Projection,
    pub values: Vec<f64>,
    pub histogram: Histogram,
}

impl EmpiricalDistribution {
    pub fn ks_distance(&self, other: &[f64]) -> f64 {
        ks_distance(&self.values, other)
    }
}

pub fn empirical_distribution(
    f: &QExpansion,
    c: i64,
    projection: Projection,
    bins: usize,
    conv: &NormalizationConvention,
    exec: Exec,
) -> Result<EmpiricalDistribution> {
    let periods = normalized_periods_over(f, c, conv, exec)?;
    Ok(distribution_from_periods(c, &periods, projection, bins))
}

pub fn distribution_from_periods(c: i64, periods: &[PeriodVector], projection: Projection, bins: usize) -> EmpiricalDistribution {
    let values: Vec<f64> = periods.iter().map(|p| projection.apply(&p.entries)).collect();
    let histogram = Histogram::from_values(&values, bins);
    EmpiricalDistribution { c, projection, values, histogram }
}

pub fn project_limit(samples: &[LimitSample], projection: Projection) -> Vec<f64> {
    samples.iter().map(|s| projection.apply(&s.entries)).collect()
}

/// Two-sample Kolmogorov-Smirnov statistic `sup |F_a - F_b|`.
pub fn ks_distance(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d = 0.0f64;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::form::build_delta;

    fn delta() -> QExpansion {
        build_delta(3000).unwrap()
    }

    #[test]
    fn spec_parsing() {
        let s = MomentSpec::parse("a0=1, b0=1", 12).unwrap();
        assert_eq!(s, MomentSpec::single(12, 0, 1, 1).unwrap());
        assert_eq!(s.n_exp(), 0);
        let t = MomentSpec::parse("a1=1,b1=1", 12).unwrap();
        assert_eq!(t.n_exp(), 2);
        assert!(MomentSpec::parse("", 12).is_err());
        assert!(MomentSpec::parse("a11=1", 12).is_err());
        assert!(MomentSpec::parse("x0=1", 12).is_err());
        assert_eq!(t.to_string(), "a1=1;b1=1");
        assert_eq!(t.conjugate(), t);
    }

    #[test]
    fn diagonal_second_moment_matches_direct_sum() {
        let f = delta();
        let spec = MomentSpec::single(12, 0, 1, 1).unwrap();
        let d = lfab_diagonal(&f, &spec, 1e-13).unwrap();
        let direct = |m: usize| -> f64 { (1..=m).map(|n| (f.coeff_f64(n) / (n as f64).powi(11)).powi(2)).sum() };
        assert!((direct(500) - direct(2000)).abs() < 1e-15);
        assert!((d.value.re - direct(2000)).abs() < 1e-13);
        assert!((d.value.re - 1.000_139_5).abs() < 1e-6);
    }

    #[test]
    fn empty_diagonal() {
        let f = delta();
        for spec in [MomentSpec::single(12, 0, 1, 0).unwrap(), MomentSpec::single(12, 3, 0, 2).unwrap()] {
            assert_eq!(lfab_diagonal(&f, &spec, 1e-12).unwrap().value, Complex64::new(0.0, 0.0));
        }
    }

    #[test]
    fn diagonal_depends_only_on_totals() {
        let f = delta();
        let a = MomentSpec::parse("a0=2,b0=1", 12).unwrap();
        let b = MomentSpec::parse("a1=1,a4=1,b7=1", 12).unwrap();
        assert_eq!(lfab_diagonal(&f, &a, 1e-12).unwrap(), lfab_diagonal(&f, &b, 1e-12).unwrap());
    }

    #[test]
    fn quadrature_oracle() {
        let f = delta();
        for text in ["a0=1,b0=1", "a0=2,b0=1", "a0=2,b0=2"] {
            let spec = MomentSpec::parse(text, 12).unwrap();
            let d = lfab_diagonal(&f, &spec, 1e-12).unwrap().value;
            let q = lfab_quadrature(&f, &spec, 1 << 10, Exec::Parallel).unwrap();
            assert!((d - q).norm() < 1e-9, "{text}: {d} vs {q}");
        }
        let first = lfab_quadrature(&f, &MomentSpec::single(12, 0, 1, 0).unwrap(), 1 << 10, Exec::Parallel).unwrap();
        assert!(first.norm() < 1e-12);
    }

    #[test]
    fn small_modulus_moments() {
        let f = delta();
        let conv = NormalizationConvention::calibrated(&f).unwrap();
        let specs = [MomentSpec::single(12, 0, 1, 1).unwrap(), MomentSpec::parse("a0=2,b1=1", 12).unwrap()];
        let reps = empirical_moments(&f, 1, &specs, &conv, Exec::Sequential).unwrap();
        assert_eq!(reps.len(), 2);
        let conj = empirical_moment(&f, 97, &specs[1].conjugate(), &conv, Exec::Sequential).unwrap();
        let orig = empirical_moment(&f, 97, &specs[1], &conv, Exec::Sequential).unwrap();
        assert!((conj.empirical - orig.empirical.conj()).norm() < 1e-15 * orig.empirical.norm().max(1.0));
        let second = empirical_moment(&f, 97, &specs[0], &conv, Exec::Parallel).unwrap();
        assert!(second.abs_error < 0.2);
        let shifted = MomentSpec::single(12, 1, 1, 1).unwrap();
        let ratio = main_term(&f, &shifted, 1).unwrap() / main_term(&f, &specs[0], 1).unwrap();
        assert!((ratio.re - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn limit_law_structure() {
        let f = delta();
        let conv = NormalizationConvention::calibrated(&f).unwrap();
        let s = sample_limit_law(&f, 40, 5, &conv, Exec::Sequential).unwrap();
        assert_eq!(s.len(), 200);
        for x in &s {
            let r = x.entries[3] / x.entries[0];
            assert!((r.re - x.z.powi(3)).abs() < 1e-14 && r.im.abs() < 1e-14);
            assert!((0.2..=1.8).contains(&x.entries[0].norm()));
        }
    }

    #[test]
    fn ks_statistic() {
        assert_eq!(ks_distance(&[1.0, 2.0], &[1.0, 2.0]), 0.0);
        assert_eq!(ks_distance(&[0.0, 0.1], &[1.0, 2.0]), 1.0);
        let a: Vec<f64> = (0..100).map(|i| i as f64 / 100.0).collect();
        let b: Vec<f64> = (0..100).map(|i| (i + 5) as f64 / 100.0).collect();
        assert!((ks_distance(&a, &b) - 0.05).abs() < 1e-12);
    }

    #[test]
    fn histogram_and_projection() {
        let h = Histogram::from_values(&[0.0, 0.5, 1.0, 1.0], 2);
        assert_eq!(h.counts, vec![1, 3]);
        let single = Histogram::from_values(&[2.0], 4);
        assert_eq!(single.total(), 1);
        assert_eq!("ratio2".parse::<Projection>().unwrap(), Projection::RatioAbs(2));
        assert!("abs1".parse::<Projection>().is_err());
        let f = delta();
        let conv = NormalizationConvention::calibrated(&f).unwrap();
        let d = empirical_distribution(&f, 1, Projection::Re(0), 10, &conv, Exec::Sequential).unwrap();
        assert_eq!(d.values.len(), 1);
    }
}
