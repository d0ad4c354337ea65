//! Classical Kloosterman sums `S(m, n; c) = sum_{d mod c, (d, c) = 1} e((m d + n d^{-1}) / c)`.

use num_complex::Complex64;

use crate::arith::{divisors, euler_phi, gcd, moebius, num_divisors};
use crate::cusps::inverse_table;
use crate::ltwist::roots_of_unity;
use crate::par::Exec;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KloostermanValue {
    pub m: i64,
    pub n: i64,
    pub c: i64,
    pub value: Complex64,
    /// Bound on the floating-point error of `value`.
    pub rounding_error: f64,
}

impl KloostermanValue {
    pub fn real(&self) -> f64 {
        self.value.re
    }
}

fn rounding_bound(terms: u64) -> f64 {
    let t = terms as f64;
    t * (4.0 + t) * f64::EPSILON
}

/// Units mod `c` paired with their inverses; `c = 1` has the single unit 0.
fn units(c: i64) -> Vec<(usize, usize)> {
    if c == 1 {
        return vec![(0, 0)];
    }
    inverse_table(c)
        .iter()
        .enumerate()
        .filter(|(_, &inv)| inv != 0)
        .map(|(d, &inv)| (d, inv as usize))
        .collect()
}

pub fn kloosterman_sum(m: i64, n: i64, c: i64) -> KloostermanValue {
    assert!(c >= 1, "modulus must be positive");
    let roots = roots_of_unity(c);
    let cu = c as u128;
    let (mr, nr) = (m.rem_euclid(c) as u128, n.rem_euclid(c) as u128);
    let mut acc = Complex64::new(0.0, 0.0);
    let us = units(c);
    for &(d, inv) in &us {
        let idx = (mr * d as u128 + nr * inv as u128) % cu;
        acc += roots[idx as usize];
    }
    KloostermanValue { m, n, c, value: acc, rounding_error: rounding_bound(us.len() as u64) }
}

/// `S(m, n; c)` for every `(m, n)` in `ms x ns`, row-major, in one pass over the units.
pub fn kloosterman_table(c: i64, ms: &[i64], ns: &[i64]) -> Vec<KloostermanValue> {
    assert!(c >= 1, "modulus must be positive");
    let roots = roots_of_unity(c);
    let cu = c as u64;
    let us = units(c);
    let mut acc = vec![Complex64::new(0.0, 0.0); ms.len() * ns.len()];
    let n_idx: Vec<u64> = ns.iter().map(|&n| n.rem_euclid(c) as u64).collect();
    let m_idx: Vec<u64> = ms.iter().map(|&m| m.rem_euclid(c) as u64).collect();
    let mut n_part = vec![0u64; ns.len()];
    for &(d, inv) in &us {
        for (j, &nr) in n_idx.iter().enumerate() {
            n_part[j] = (nr * inv as u64) % cu;
        }
        for (i, &mr) in m_idx.iter().enumerate() {
            let md = (mr * d as u64) % cu;
            let row = &mut acc[i * ns.len()..(i + 1) * ns.len()];
            for (slot, &np) in row.iter_mut().zip(&n_part) {
                let mut idx = md + np;
                if idx >= cu {
                    idx -= cu;
                }
                *slot += roots[idx as usize];
            }
        }
    }
    let err = rounding_bound(us.len() as u64);
    let mut out = Vec::with_capacity(acc.len());
    for (i, &m) in ms.iter().enumerate() {
        for (j, &n) in ns.iter().enumerate() {
            out.push(KloostermanValue { m, n, c, value: acc[i * ns.len() + j], rounding_error: err });
        }
    }
    out
}

/// `S(m, 0; c) = sum_{d | (m, c)} d mu(c / d)`.
pub fn ramanujan_sum(m: i64, c: i64) -> i64 {
    assert!(c >= 1, "modulus must be positive");
    let g = gcd(m, c) as u64;
    divisors(g).into_iter().map(|d| d as i64 * moebius(c as u64 / d)).sum()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeilCheck {
    pub value: KloostermanValue,
    /// `d(c) sqrt(c) (m, n, c)^{1/2}`.
    pub bound: f64,
    pub slack: f64,
}

impl WeilCheck {
    pub fn holds(&self) -> bool {
        self.slack >= -1e-6
    }
}

pub fn weil_bound(m: i64, n: i64, c: i64) -> f64 {
    let g = gcd(gcd(m, n), c) as f64;
    num_divisors(c as u64) as f64 * (c as f64).sqrt() * g.sqrt()
}

fn weil_from(v: KloostermanValue) -> WeilCheck {
    let bound = weil_bound(v.m, v.n, v.c);
    WeilCheck { value: v, bound, slack: bound - v.value.re.abs() }
}

pub fn weil_check(m: i64, n: i64, c: i64) -> WeilCheck {
    weil_from(kloosterman_sum(m, n, c))
}

/// Every `c <= c_max`, `1 <= m <= m_max`, `1 <= n <= n_max`, ordered by `(c, m, n)`.
pub fn weil_table(c_max: i64, m_max: i64, n_max: i64, exec: Exec) -> Vec<WeilCheck> {
    let ms: Vec<i64> = (1..=m_max).collect();
    let ns: Vec<i64> = (1..=n_max).collect();
    let cs: Vec<i64> = (1..=c_max).collect();
    exec.map(&cs, |&c| kloosterman_table(c, &ms, &ns).into_iter().map(weil_from).collect::<Vec<_>>())
        .into_iter()
        .flatten()
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PartialSumRow {
    pub m: i64,
    pub n: i64,
    pub x: i64,
    pub partial_sum: f64,
    /// `log |sum| / log X`.
    pub exponent_estimate: f64,
}

/// Checkpoints `X' = round(10^{t/4})` up to `x`, plus `x` itself.
pub fn log_checkpoints(lo: i64, x: i64) -> Vec<i64> {
    let mut out = Vec::new();
    let mut t = 0;
    loop {
        let v = 10f64.powf(f64::from(t) / 4.0).round() as i64;
        if v >= x {
            break;
        }
        if v >= lo && out.last() != Some(&v) {
            out.push(v);
        }
        t += 1;
    }
    out.push(x);
    out
}

/// Running sums `sum_{c <= X', level | c} S(m, n; c)` at logarithmic checkpoints.
pub fn moduli_partial_sums(m: i64, n: i64, x: i64, level: i64, exec: Exec) -> Vec<PartialSumRow> {
    assert!(level >= 1 && x >= level);
    let cs: Vec<i64> = (1..=x / level).map(|j| j * level).collect();
    let values = exec.map(&cs, |&c| kloosterman_sum(m, n, c).value.re);
    let checkpoints = log_checkpoints(level, x);
    let mut rows = Vec::with_capacity(checkpoints.len());
    let mut acc = 0.0;
    let mut next = 0;
    for (c, v) in cs.iter().zip(&values) {
        acc += v;
        while next < checkpoints.len() && checkpoints[next] < c + level && checkpoints[next] >= *c {
            rows.push(row(m, n, checkpoints[next], acc));
            next += 1;
        }
    }
    while next < checkpoints.len() {
        rows.push(row(m, n, checkpoints[next], acc));
        next += 1;
    }
    rows
}

fn row(m: i64, n: i64, x: i64, sum: f64) -> PartialSumRow {
    let exponent_estimate = if x > 1 { sum.abs().ln() / (x as f64).ln() } else { f64::NAN };
    PartialSumRow { m, n, x, partial_sum: sum, exponent_estimate }
}

/// `sum_{c <= x} phi(c)`, the no-cancellation baseline.
pub fn totient_sum(x: i64) -> u64 {
    (1..=x as u64).map(euler_phi).sum()
}

/// `|S(m, n; c) - sum_{d | (m, n, c)} d S(mn/d^2, 1; c/d)|`.
pub fn selberg_identity_residual(m: i64, n: i64, c: i64) -> f64 {
    let lhs = kloosterman_sum(m, n, c).value.re;
    let g = gcd(gcd(m, n), c) as u64;
    let rhs: f64 = divisors(g)
        .into_iter()
        .map(|d| {
            let d = d as i64;
            d as f64 * kloosterman_sum(m * n / (d * d), 1, c / d).value.re
        })
        .sum();
    (lhs - rhs).abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Direct enumeration with gcd filtering and `e()` per term.
    fn naive(m: i64, n: i64, c: i64) -> f64 {
        let mut acc = 0.0;
        for d in 0..c {
            if gcd(d, c) != 1 {
                continue;
            }
            let inv = crate::arith::mod_inverse(d, c).unwrap();
            acc += (2.0 * std::f64::consts::PI * ((m * d + n * inv) as f64) / c as f64).cos();
        }
        acc
    }

    #[test]
    fn small_values() {
        assert!((kloosterman_sum(1, 1, 2).value.re - 1.0).abs() < 1e-14);
        for c in 1..40 {
            assert!((kloosterman_sum(0, 0, c).value.re - euler_phi(c as u64) as f64).abs() < 1e-9);
        }
        // S(1, 1; 5) = 2 cos(2pi 2/5) + 2 cos(2pi 4/5)... direct
        assert!((kloosterman_sum(1, 1, 5).value.re - naive(1, 1, 5)).abs() < 1e-12);
    }

    #[test]
    fn table_matches_single_sums() {
        for c in [1, 2, 7, 12, 30, 97] {
            let t = kloosterman_table(c, &[0, 1, 3, -2], &[1, 5, 0]);
            for v in t {
                let s = kloosterman_sum(v.m, v.n, c);
                assert!((v.value - s.value).norm() <= v.rounding_error);
            }
        }
    }

    #[test]
    fn ramanujan_values() {
        assert_eq!(ramanujan_sum(1, 6), 1);
        assert_eq!(ramanujan_sum(0, 12), 4);
        for c in 1..=60 {
            for m in 0..=12 {
                let k = kloosterman_sum(m, 0, c);
                assert!((k.value.re - ramanujan_sum(m, c) as f64).abs() <= k.rounding_error.max(1e-9));
            }
        }
    }

    #[test]
    fn weil_special_cases() {
        let w = weil_check(30, 30, 30);
        assert!((w.bound - num_divisors(30) as f64 * 30.0).abs() < 1e-9);
        assert!(w.holds());
        for p in [101, 211, 997] {
            let v = kloosterman_sum(3, 7, p).value.re;
            assert!(v.abs() <= 2.0 * (p as f64).sqrt());
        }
        assert!(weil_table(60, 4, 4, Exec::Sequential).iter().all(|w| w.holds()));
    }

    #[test]
    fn partial_sums_structure() {
        let rows = moduli_partial_sums(0, 0, 1000, 1, Exec::Sequential);
        let last = rows.last().unwrap();
        assert_eq!(last.x, 1000);
        assert_eq!(last.partial_sum, totient_sum(1000) as f64);
        let ratio = last.partial_sum / 1e6;
        assert!((ratio - 3.0 / std::f64::consts::PI.powi(2)).abs() < 0.01);
        assert!(rows.windows(2).all(|w| w[0].x < w[1].x));
        // the level restricts the moduli
        let lv = moduli_partial_sums(0, 0, 100, 4, Exec::Sequential);
        let expect: u64 = (1..=25).map(|j| euler_phi(4 * j)).sum();
        assert_eq!(lv.last().unwrap().partial_sum, expect as f64);
        let par = moduli_partial_sums(1, 1, 3000, 1, Exec::Parallel);
        let seq = moduli_partial_sums(1, 1, 3000, 1, Exec::Sequential);
        assert!(par.iter().zip(&seq).all(|(a, b)| a.partial_sum.to_bits() == b.partial_sum.to_bits()));
    }

    #[test]
    fn checkpoints() {
        assert_eq!(log_checkpoints(1, 10), vec![1, 2, 3, 6, 10]);
        assert_eq!(log_checkpoints(4, 4), vec![4]);
    }

    #[test]
    fn selberg_identity() {
        for c in [12, 18, 30, 36] {
            for (m, n) in [(2, 6), (6, 6), (4, 9), (3, 12)] {
                assert!(selberg_identity_residual(m, n, c) < 1e-9);
            }
        }
    }

    proptest! {
        #[test]
        fn symmetric_real_and_matches_naive(m in -50i64..50, n in -50i64..50, c in 1i64..300) {
            let a = kloosterman_sum(m, n, c);
            let b = kloosterman_sum(n, m, c);
            prop_assert!((a.value.re - b.value.re).abs() <= a.rounding_error + b.rounding_error);
            prop_assert!(a.value.im.abs() <= 1e-9 * euler_phi(c as u64) as f64);
            prop_assert!((a.value.re - naive(m, n, c)).abs() < 1e-9);
            prop_assert!(a.value.re.abs() <= euler_phi(c as u64) as f64 + a.rounding_error);
        }
    }
}
