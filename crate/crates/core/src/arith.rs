//! Elementary integer arithmetic: gcd, inverses, divisor functions.

use num_integer::Integer;

pub fn gcd(a: i64, b: i64) -> i64 {
    a.gcd(&b)
}

/// Inverse of `a` modulo `m` in `[0, m)`, if it exists. For `m = 1` returns 0.
pub fn mod_inverse(a: i64, m: i64) -> Option<i64> {
    assert!(m >= 1);
    if m == 1 {
        return Some(0);
    }
    let ext = a.rem_euclid(m).extended_gcd(&m);
    if ext.gcd != 1 {
        return None;
    }
    Some(ext.x.rem_euclid(m))
}

/// Number of divisors d(n).
pub fn num_divisors(n: u64) -> u64 {
    assert!(n >= 1);
    let mut n = n;
    let mut count = 1;
    let mut p = 2;
    while p * p <= n {
        let mut e = 0;
        while n.is_multiple_of(p) {
            n /= p;
            e += 1;
        }
        count *= e + 1;
        p += 1;
    }
    if n > 1 {
        count *= 2;
    }
    count
}

/// Table of d(n) for `0 <= n <= max` (entry 0 is unused and set to 0).
pub fn divisor_count_table(max: usize) -> Vec<u32> {
    let mut d = vec![0u32; max + 1];
    for i in 1..=max {
        let mut j = i;
        while j <= max {
            d[j] += 1;
            j += i;
        }
    }
    d
}

pub fn euler_phi(n: u64) -> u64 {
    assert!(n >= 1);
    let mut n = n;
    let mut result = n;
    let mut p = 2;
    while p * p <= n {
        if n.is_multiple_of(p) {
            while n.is_multiple_of(p) {
                n /= p;
            }
            result -= result / p;
        }
        p += 1;
    }
    if n > 1 {
        result -= result / n;
    }
    result
}

pub fn moebius(n: u64) -> i64 {
    assert!(n >= 1);
    let mut n = n;
    let mut sign = 1;
    let mut p = 2;
    while p * p <= n {
        if n.is_multiple_of(p) {
            n /= p;
            if n.is_multiple_of(p) {
                return 0;
            }
            sign = -sign;
        }
        p += 1;
    }
    if n > 1 {
        sign = -sign;
    }
    sign
}

pub fn divisors(n: u64) -> Vec<u64> {
    let mut small = Vec::new();
    let mut large = Vec::new();
    let mut d = 1;
    while d * d <= n {
        if n.is_multiple_of(d) {
            small.push(d);
            if d * d != n {
                large.push(n / d);
            }
        }
        d += 1;
    }
    small.extend(large.into_iter().rev());
    small
}

pub fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

pub fn binomial(n: u32, k: u32) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut r = 1.0;
    for i in 0..k {
        r = r * f64::from(n - i) / f64::from(i + 1);
    }
    r.round()
}

/// Row `n` of Pascal's triangle as exact floats (exact up to n = 56).
pub fn binomial_row(n: u32) -> Vec<f64> {
    (0..=n).map(|k| binomial(n, k)).collect()
}

/// The constant `C` with `d(n) <= C n^theta` for every `n >= 1`.
///
/// `d(n)/n^theta` is multiplicative, so the supremum is the product over
/// primes of `max_e (e+1)/p^(e theta)`; only primes below `2^(1/theta)`
/// contribute a factor above one.
pub fn divisor_bound_constant(theta: f64) -> f64 {
    assert!(theta > 0.0 && theta <= 1.0);
    let limit = 2f64.powf(1.0 / theta).ceil() as u64;
    let mut c = 1.0;
    for p in 2..=limit {
        if !is_prime(p) {
            continue;
        }
        let lp = (p as f64).ln();
        let mut best = 1.0f64;
        let mut e = 1u32;
        loop {
            let v = f64::from(e + 1) / (f64::from(e) * theta * lp).exp();
            if v > best {
                best = v;
            }
            // factor decreases once (e+2)/(e+1) < p^theta
            if f64::from(e + 2) / f64::from(e + 1) < (theta * lp).exp() {
                break;
            }
            e += 1;
        }
        c *= best;
    }
    // guard against the last-ulp rounding of the products
    c * (1.0 + 1e-12)
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

/// Primes in `[lo, hi]`.
pub fn primes_between(lo: u64, hi: u64) -> Vec<u64> {
    (lo..=hi).filter(|&n| is_prime(n)).collect()
}
