//! Cusp forms given by exact integer q-expansions.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::OnceLock;

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};

use crate::arith::{divisor_count_table, gcd};
use crate::error::{Error, Result};
use crate::series::TruncatedSeries;

/// A cusp form `f = sum a_f(n) q^n` of weight `k` on `Gamma_0(N)`, truncated at `M`.
///
/// Immutable once built; the float view of the coefficients and the
/// functional-equation sign are computed once and cached.
#[derive(Debug)]
pub struct QExpansion {
    weight: u32,
    level: u64,
    coeffs: Vec<BigInt>,
    is_normalized_eigenform: bool,
    floats: Vec<f64>,
    divisors: Vec<u32>,
    pub(crate) fe_sign: OnceLock<i8>,
}

impl Clone for QExpansion {
    fn clone(&self) -> Self {
        let fe_sign = OnceLock::new();
        if let Some(&s) = self.fe_sign.get() {
            let _ = fe_sign.set(s);
        }
        QExpansion {
            weight: self.weight,
            level: self.level,
            coeffs: self.coeffs.clone(),
            is_normalized_eigenform: self.is_normalized_eigenform,
            floats: self.floats.clone(),
            divisors: self.divisors.clone(),
            fe_sign,
        }
    }
}

impl PartialEq for QExpansion {
    fn eq(&self, other: &Self) -> bool {
        self.weight == other.weight
            && self.level == other.level
            && self.coeffs == other.coeffs
            && self.is_normalized_eigenform == other.is_normalized_eigenform
    }
}

impl QExpansion {
    /// Builds a q-expansion from `a_f(1..=M)` and checks every invariant.
    pub fn new(weight: u32, level: u64, coeffs: Vec<BigInt>, is_normalized_eigenform: bool) -> Result<Self> {
        if weight < 4 || !weight.is_multiple_of(2) {
            return Err(Error::UnsupportedWeight(i64::from(weight)));
        }
        if level == 0 {
            return Err(Error::OutOfRange("level must be at least 1".into()));
        }
        if coeffs.is_empty() {
            return Err(Error::InvalidTruncation(0));
        }
        let f = Self::new_unchecked(weight, level, coeffs, is_normalized_eigenform);
        if is_normalized_eigenform {
            f.check_eigenform_invariants()?;
        }
        Ok(f)
    }

    fn new_unchecked(weight: u32, level: u64, coeffs: Vec<BigInt>, is_normalized_eigenform: bool) -> Self {
        let floats = coeffs.iter().map(|c| c.to_f64().unwrap_or(f64::NAN)).collect();
        let divisors = divisor_count_table(coeffs.len());
        QExpansion {
            weight,
            level,
            coeffs,
            is_normalized_eigenform,
            floats,
            divisors,
            fe_sign: OnceLock::new(),
        }
    }

    pub fn weight(&self) -> u32 {
        self.weight
    }

    pub fn level(&self) -> u64 {
        self.level
    }

    /// The truncation `M`: coefficients `a_f(1..=M)` are known.
    pub fn truncation(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_normalized_eigenform(&self) -> bool {
        self.is_normalized_eigenform
    }

    /// `a_f(n)` for `1 <= n <= M`.
    pub fn coeff(&self, n: usize) -> &BigInt {
        &self.coeffs[n - 1]
    }

    pub fn coeffs(&self) -> &[BigInt] {
        &self.coeffs
    }

    /// `a_f(n)` as a float, `1 <= n <= M`.
    #[inline]
    pub fn coeff_f64(&self, n: usize) -> f64 {
        self.floats[n - 1]
    }

    /// Float coefficients indexed from `n = 1` at position 0.
    pub fn floats(&self) -> &[f64] {
        &self.floats
    }

    /// `d(n)` for `1 <= n <= M`.
    #[inline]
    pub fn num_divisors(&self, n: usize) -> u32 {
        self.divisors[n]
    }

    /// First `m` coefficients as a new form.
    pub fn truncate(&self, m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidTruncation(0));
        }
        if m > self.truncation() {
            return Err(Error::InsufficientCoefficients { required: m, available: self.truncation() });
        }
        Ok(Self::new_unchecked(self.weight, self.level, self.coeffs[..m].to_vec(), self.is_normalized_eigenform))
    }

    /// `|a(n)|^2 <= d(n)^2 n^(k-1)` checked exactly, normalisation,
    /// multiplicativity and the prime-power recursion.
    fn check_eigenform_invariants(&self) -> Result<()> {
        if !self.coeffs[0].is_one() {
            return Err(Error::Invariant { n: 1, msg: "normalized eigenform must have a(1) = 1".into() });
        }
        if let Some(n) = first_deligne_violation(self) {
            return Err(Error::Invariant { n, msg: "Deligne bound |a(n)| <= d(n) n^((k-1)/2) fails".into() });
        }
        if let Some((m, n)) = first_multiplicativity_violation(self) {
            return Err(Error::Invariant { n: m * n, msg: format!("a({}) != a({m}) a({n})", m * n) });
        }
        if let Some(n) = first_hecke_recursion_violation(self) {
            return Err(Error::Invariant { n, msg: "prime-power Hecke recursion fails".into() });
        }
        Ok(())
    }

    /// Serializes to the plain-text q-expansion format.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "weight={} level={} eigenform={} count={}",
            self.weight,
            self.level,
            u8::from(self.is_normalized_eigenform),
            self.truncation()
        );
        for (i, c) in self.coeffs.iter().enumerate() {
            let _ = writeln!(s, "{} {}", i + 1, c);
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut header: Option<(u32, u64, bool, usize)> = None;
        let mut coeffs = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let perr = |msg: String| Error::Parse { line: line_no, msg };
            match header {
                None => header = Some(parse_header(line).map_err(perr)?),
                Some((_, _, _, count)) => {
                    let mut parts = line.split_whitespace();
                    let (n, a) = match (parts.next(), parts.next(), parts.next()) {
                        (Some(n), Some(a), None) => (n, a),
                        _ => return Err(perr("expected `<n> <a(n)>`".into())),
                    };
                    let n: usize = n.parse().map_err(|_| perr(format!("bad index `{n}`")))?;
                    if n != coeffs.len() + 1 {
                        return Err(perr(format!("expected index {}, found {n}", coeffs.len() + 1)));
                    }
                    if n > count {
                        return Err(perr(format!("more than count={count} coefficients")));
                    }
                    let a: BigInt = a.parse().map_err(|_| perr(format!("bad integer `{a}`")))?;
                    coeffs.push(a);
                }
            }
        }
        let (weight, level, eigen, count) =
            header.ok_or(Error::Parse { line: 1, msg: "missing header line".into() })?;
        if coeffs.len() != count {
            return Err(Error::Parse {
                line: text.lines().count(),
                msg: format!("header declares count={count} but {} coefficients follow", coeffs.len()),
            });
        }
        Self::new(weight, level, coeffs, eigen)
    }
}

fn parse_header(line: &str) -> std::result::Result<(u32, u64, bool, usize), String> {
    let mut weight = None;
    let mut level = None;
    let mut eigen = None;
    let mut count = None;
    for tok in line.split_whitespace() {
        let (key, val) = tok.split_once('=').ok_or_else(|| format!("malformed header token `{tok}`"))?;
        let bad = || format!("bad value for {key}: `{val}`");
        match key {
            "weight" => weight = Some(val.parse::<u32>().map_err(|_| bad())?),
            "level" => level = Some(val.parse::<u64>().map_err(|_| bad())?),
            "eigenform" => {
                eigen = Some(match val {
                    "0" => false,
                    "1" => true,
                    _ => return Err(bad()),
                })
            }
            "count" => count = Some(val.parse::<usize>().map_err(|_| bad())?),
            _ => return Err(format!("unknown header key `{key}`")),
        }
    }
    match (weight, level, eigen, count) {
        (Some(w), Some(l), Some(e), Some(c)) => Ok((w, l, e, c)),
        _ => Err("header needs weight, level, eigenform and count".into()),
    }
}

fn first_deligne_violation(f: &QExpansion) -> Option<usize> {
    let k1 = f.weight - 1;
    (1..=f.truncation()).find(|&n| {
        let a = f.coeff(n);
        let d = BigInt::from(f.num_divisors(n));
        let rhs = &d * &d * BigInt::from(n).pow(k1);
        a * a > rhs
    })
}

fn first_multiplicativity_violation(f: &QExpansion) -> Option<(usize, usize)> {
    let m_max = f.truncation();
    for m in 2..=m_max {
        for n in (m + 1)..=(m_max / m) {
            if gcd(m as i64, n as i64) == 1 && f.coeff(m * n) != &(f.coeff(m) * f.coeff(n)) {
                return Some((m, n));
            }
        }
    }
    None
}

fn first_hecke_recursion_violation(f: &QExpansion) -> Option<usize> {
    let m_max = f.truncation();
    for p in 2..=m_max {
        if !crate::arith::is_prime(p as u64) {
            continue;
        }
        let pk1 = BigInt::from(p).pow(f.weight - 1);
        // a(p^{r+1}) = a(p) a(p^r) - p^{k-1} a(p^{r-1})
        let mut prev = BigInt::one();
        let mut cur_idx = p;
        while let Some(next_idx) = cur_idx.checked_mul(p).filter(|&x| x <= m_max) {
            let expect = f.coeff(p) * f.coeff(cur_idx) - &pk1 * &prev;
            if f.coeff(next_idx) != &expect {
                return Some(next_idx);
            }
            prev = f.coeff(cur_idx).clone();
            cur_idx = next_idx;
        }
    }
    None
}

/// Whether the exact multiplicativity and Hecke recursion hold on all of `1..=M`.
pub fn hecke_relations_hold(f: &QExpansion) -> bool {
    first_multiplicativity_violation(f).is_none() && first_hecke_recursion_violation(f).is_none()
}

/// `Delta = q prod (1-q^n)^24`, truncated at `M`.
pub fn build_delta(m: usize) -> Result<QExpansion> {
    if m == 0 {
        return Err(Error::InvalidTruncation(0));
    }
    let eta24 = TruncatedSeries::euler_product(m - 1).pow(24);
    let coeffs = eta24.into_coeffs();
    Ok(QExpansion::new_unchecked(12, 1, coeffs, true))
}

/// `sum_{d | n} d^j` for all `n <= m`.
fn sigma_table(j: u32, m: usize) -> Vec<BigInt> {
    let mut t = vec![BigInt::zero(); m + 1];
    for d in 1..=m {
        let dj = BigInt::from(d).pow(j);
        let mut n = d;
        while n <= m {
            t[n] += &dj;
            n += d;
        }
    }
    t
}

/// `E_4 = 1 + 240 sum sigma_3(n) q^n` or `E_6 = 1 - 504 sum sigma_5(n) q^n`, truncated at `M`.
pub fn build_eisenstein(w: u32, m: usize) -> Result<TruncatedSeries> {
    let (j, scale) = match w {
        4 => (3, 240),
        6 => (5, -504),
        _ => return Err(Error::UnsupportedWeight(i64::from(w))),
    };
    let mut coeffs = sigma_table(j, m);
    coeffs[0] = BigInt::one();
    for c in coeffs.iter_mut().skip(1) {
        *c *= scale;
    }
    Ok(TruncatedSeries::from_coeffs(coeffs, m))
}

/// Weights `k` with a one-dimensional level-one cusp space.
pub const LEVEL_ONE_WEIGHTS: [u32; 6] = [12, 16, 18, 20, 22, 26];

/// The normalized eigenform `Delta E_4^a E_6^b` of weight `k = 12 + 4a + 6b`.
pub fn build_level_one_eigenform(k: u32, m: usize) -> Result<QExpansion> {
    let (a, b) = match k {
        12 => (0, 0),
        16 => (1, 0),
        18 => (0, 1),
        20 => (2, 0),
        22 => (1, 1),
        26 => (2, 1),
        _ => return Err(Error::UnsupportedWeight(i64::from(k))),
    };
    let delta = build_delta(m)?;
    if a == 0 && b == 0 {
        return Ok(delta);
    }
    // work with q^{-1} Delta so indices line up with a(n+1)
    let mut series = TruncatedSeries::from_coeffs(delta.coeffs.clone(), m - 1);
    for _ in 0..a {
        series = series.mul(&build_eisenstein(4, m - 1)?);
    }
    for _ in 0..b {
        series = series.mul(&build_eisenstein(6, m - 1)?);
    }
    Ok(QExpansion::new_unchecked(k, 1, series.into_coeffs(), true))
}

pub fn load_form(path: &Path) -> Result<QExpansion> {
    let text = std::fs::read_to_string(path)?;
    QExpansion::from_text(&text)
}

pub fn save_form(f: &QExpansion, path: &Path) -> Result<()> {
    std::fs::write(path, f.to_text())?;
    Ok(())
}

/// Deligne and Hecke ratios over the known coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundsReport {
    /// `max_n |a(n)| / (d(n) n^((k-1)/2))`.
    pub deligne_ratio: f64,
    pub deligne_argmax: usize,
    /// Exact check of `|a(n)|^2 <= d(n)^2 n^(k-1)` for every `n <= M`.
    pub deligne_exact_ok: bool,
    /// `max_X sum_{n<=X} |a(n)|^2 / X^k`.
    pub hecke_ratio: f64,
    pub hecke_argmax: usize,
}

pub fn verify_coefficient_bounds(f: &QExpansion) -> BoundsReport {
    let k = f64::from(f.weight());
    let mut deligne_ratio = 0.0;
    let mut deligne_argmax = 1;
    let mut hecke_ratio = 0.0;
    let mut hecke_argmax = 1;
    for n in 1..=f.truncation() {
        let a = f.coeff_f64(n).abs();
        let ratio = a / (f64::from(f.num_divisors(n)) * ((k - 1.0) / 2.0 * (n as f64).ln()).exp());
        if ratio > deligne_ratio {
            deligne_ratio = ratio;
            deligne_argmax = n;
        }
    }
    // partial sums sum_{n<=X} |a(n)|^2 / X^k, evaluated with a running log scale
    let mut acc = 0.0f64;
    let mut prev_x = 1.0f64;
    for n in 1..=f.truncation() {
        let nf = n as f64;
        acc *= (prev_x / nf).powf(k);
        prev_x = nf;
        let a = f.coeff_f64(n).abs();
        if a > 0.0 {
            acc += (2.0 * a.ln() - k * nf.ln()).exp();
        }
        if acc > hecke_ratio {
            hecke_ratio = acc;
            hecke_argmax = n;
        }
    }
    BoundsReport {
        deligne_ratio,
        deligne_argmax,
        deligne_exact_ok: first_deligne_violation(f).is_none(),
        hecke_ratio,
        hecke_argmax,
    }
}
