//! Integer matrices in `Gamma_0(N)` and the cusps `a/c` they realize.

use std::fmt;

use crate::arith::{gcd, mod_inverse};
use crate::error::{Error, Result};

/// `(a b; c d)` with `ad - bc = 1`, read projectively (`g == -g`).
#[derive(Clone, Copy, Debug, Eq)]
pub struct GammaMatrix {
    pub a: i64,
    pub b: i64,
    pub c: i64,
    pub d: i64,
    pub level: u64,
}

impl PartialEq for GammaMatrix {
    fn eq(&self, o: &Self) -> bool {
        let same = self.a == o.a && self.b == o.b && self.c == o.c && self.d == o.d;
        let neg = self.a == -o.a && self.b == -o.b && self.c == -o.c && self.d == -o.d;
        self.level == o.level && (same || neg)
    }
}

impl fmt::Display for GammaMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({} {}; {} {})", self.a, self.b, self.c, self.d)
    }
}

impl GammaMatrix {
    pub fn new(a: i64, b: i64, c: i64, d: i64, level: u64) -> Result<Self> {
        let det = a.checked_mul(d).zip(b.checked_mul(c)).and_then(|(x, y)| x.checked_sub(y));
        match det {
            Some(1) => {}
            Some(det) => return Err(Error::OutOfRange(format!("determinant {det} != 1"))),
            None => return Err(Error::Overflow),
        }
        if level == 0 {
            return Err(Error::OutOfRange("level must be at least 1".into()));
        }
        if c % level as i64 != 0 {
            return Err(Error::WrongLevel { c, level });
        }
        Ok(GammaMatrix { a, b, c, d, level })
    }

    pub fn identity(level: u64) -> Self {
        GammaMatrix { a: 1, b: 0, c: 0, d: 1, level }
    }

    /// `S = (0 -1; 1 0)`.
    pub fn s() -> Self {
        GammaMatrix { a: 0, b: -1, c: 1, d: 0, level: 1 }
    }

    /// `T^n = (1 n; 0 1)`.
    pub fn translation(n: i64, level: u64) -> Self {
        GammaMatrix { a: 1, b: n, c: 0, d: 1, level }
    }

    pub fn det(&self) -> i128 {
        i128::from(self.a) * i128::from(self.d) - i128::from(self.b) * i128::from(self.c)
    }

    /// Representative with `c > 0`, or `c = 0, a > 0`.
    pub fn normalized(&self) -> Self {
        if self.c < 0 || (self.c == 0 && self.a < 0) {
            GammaMatrix { a: -self.a, b: -self.b, c: -self.c, d: -self.d, level: self.level }
        } else {
            *self
        }
    }

    pub fn fixes_infinity(&self) -> bool {
        self.c == 0
    }

    /// `g infinity = a/c` as `(numerator, denominator)` with positive
    /// denominator; `None` when `g infinity = infinity`.
    pub fn image_of_infinity(&self) -> Option<(i64, i64)> {
        let n = self.normalized();
        if n.c == 0 {
            None
        } else {
            Some((n.a, n.c))
        }
    }

    /// `g^{-1} infinity = -d/c`.
    pub fn preimage_of_infinity(&self) -> Option<(i64, i64)> {
        let n = self.normalized();
        if n.c == 0 {
            None
        } else {
            Some((-n.d, n.c))
        }
    }
}

pub fn mat_mul(g1: &GammaMatrix, g2: &GammaMatrix) -> Result<GammaMatrix> {
    if g1.level != g2.level {
        return Err(Error::OutOfRange(format!("level mismatch {} vs {}", g1.level, g2.level)));
    }
    let m = |x: i64, y: i64, z: i64, w: i64| {
        x.checked_mul(y).zip(z.checked_mul(w)).and_then(|(p, q)| p.checked_add(q)).ok_or(Error::Overflow)
    };
    GammaMatrix::new(
        m(g1.a, g2.a, g1.b, g2.c)?,
        m(g1.a, g2.b, g1.b, g2.d)?,
        m(g1.c, g2.a, g1.d, g2.c)?,
        m(g1.c, g2.b, g1.d, g2.d)?,
        g1.level,
    )
}

pub fn mat_inv(g: &GammaMatrix) -> GammaMatrix {
    GammaMatrix { a: g.d, b: -g.b, c: -g.c, d: g.a, level: g.level }
}

/// A reduced fraction `a/c` with `0 <= a < c`, together with the dual
/// numerator `dual` satisfying `a * dual = 1 (mod c)`, `0 <= dual < c`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Cusp {
    pub a: i64,
    pub c: i64,
    pub dual: i64,
}

impl fmt::Display for Cusp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.a, self.c)
    }
}

impl Cusp {
    /// Reduces `a` modulo `c`; fails unless `gcd(a, c) = 1` and `c > 0`.
    pub fn new(a: i64, c: i64) -> Result<Self> {
        if c <= 0 || gcd(a, c) != 1 {
            return Err(Error::NotACusp { a, c });
        }
        let a = a.rem_euclid(c);
        let dual = mod_inverse(a, c).ok_or(Error::NotACusp { a, c })?;
        Ok(Cusp { a, c, dual })
    }

    pub fn value(&self) -> f64 {
        self.a as f64 / self.c as f64
    }

    /// The numerator of the dual cusp `-d/c` reduced into `[0, c)`.
    pub fn dual_numerator(&self) -> i64 {
        (-self.dual).rem_euclid(self.c)
    }

    /// The cusp `g^{-1} infinity = -d/c` as an element of `Omega_c`.
    pub fn dual_cusp(&self) -> Cusp {
        let a = self.dual_numerator();
        Cusp { a, c: self.c, dual: (-self.a).rem_euclid(self.c) }
    }
}

/// The matrix with left column `(a, c)` and lower-right entry `d in [0, c)`.
pub fn cusp_matrix(a: i64, c: i64, level: u64) -> Result<GammaMatrix> {
    if c <= 0 || gcd(a, c) != 1 {
        return Err(Error::NotACusp { a, c });
    }
    if level == 0 || c % level as i64 != 0 {
        return Err(Error::WrongLevel { c, level });
    }
    let d = mod_inverse(a, c).ok_or(Error::NotACusp { a, c })?;
    let ad = i128::from(a) * i128::from(d) - 1;
    let b = i64::try_from(ad / i128::from(c)).map_err(|_| Error::Overflow)?;
    GammaMatrix::new(a, b, c, d, level)
}

/// `Omega_c`: every `a/c` with `0 <= a < c`, `gcd(a, c) = 1`, increasing in `a`.
pub fn enumerate_omega_c(c: i64) -> Vec<Cusp> {
    assert!(c >= 1);
    if c == 1 {
        return vec![Cusp { a: 0, c: 1, dual: 0 }];
    }
    let inv = inverse_table(c);
    (1..c)
        .filter(|&a| inv[a as usize] != 0)
        .map(|a| Cusp { a, c, dual: inv[a as usize] })
        .collect()
}

/// `inv[a] = a^{-1} mod c` for units, `0` otherwise. Linear-time recurrence
/// `inv[a] = -(c / a) * inv[c mod a]` on units, guarded by gcd for composite `c`.
pub fn inverse_table(c: i64) -> Vec<i64> {
    let cu = c as usize;
    let mut inv = vec![0i64; cu.max(2)];
    if c == 1 {
        return inv;
    }
    inv[1] = 1;
    for a in 2..cu {
        let r = cu % a;
        if r != 0 && inv[r] != 0 {
            let q = (cu / a) as i128;
            inv[a] = ((-(q * i128::from(inv[r]))).rem_euclid(i128::from(c))) as i64;
        } else {
            inv[a] = mod_inverse(a as i64, c).unwrap_or(0);
        }
    }
    inv
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn cusp_matrix_examples() {
        let s = cusp_matrix(0, 1, 1).unwrap();
        assert_eq!(s, GammaMatrix::s());
        assert_eq!(s.image_of_infinity(), Some((0, 1)));
        let g = cusp_matrix(1, 5, 1).unwrap();
        assert_eq!((g.a, g.b, g.c, g.d), (1, 0, 5, 1));
        let g = cusp_matrix(2, 5, 5).unwrap();
        assert_eq!((g.a, g.b, g.c, g.d), (2, 1, 5, 3));
        assert_eq!(g.det(), 1);
        assert_eq!(cusp_matrix(2, 4, 1).unwrap_err(), Error::NotACusp { a: 2, c: 4 });
        assert_eq!(cusp_matrix(1, 5, 3).unwrap_err(), Error::WrongLevel { c: 5, level: 3 });
    }

    #[test]
    fn omega_examples() {
        assert_eq!(enumerate_omega_c(1), vec![Cusp { a: 0, c: 1, dual: 0 }]);
        let six: Vec<i64> = enumerate_omega_c(6).iter().map(|x| x.a).collect();
        assert_eq!(six, vec![1, 5]);
        let duals: Vec<i64> = enumerate_omega_c(5).iter().map(|x| x.dual).collect();
        assert_eq!(duals, vec![1, 3, 2, 4]);
        for c in 1..300i64 {
            let om = enumerate_omega_c(c);
            assert_eq!(om.len() as u64, crate::arith::euler_phi(c as u64));
            for x in &om {
                assert_eq!((x.a * x.dual).rem_euclid(c), 1 % c);
                let g = cusp_matrix(x.a, x.c, 1).unwrap();
                assert_eq!(g.image_of_infinity(), Some((x.a, x.c)));
                assert_eq!(g.preimage_of_infinity().map(|(n, d)| n.rem_euclid(d)), Some(x.dual_numerator()));
                assert_eq!(x.dual_cusp().dual_cusp(), *x);
            }
        }
    }

    #[test]
    fn products() {
        let t = GammaMatrix::translation(1, 1);
        let g = GammaMatrix::new(1, 0, 5, 1, 1).unwrap();
        let p = mat_mul(&t, &g).unwrap();
        assert_eq!((p.a, p.b, p.c, p.d), (6, 1, 5, 1));
        let s = GammaMatrix::s();
        assert_eq!(mat_mul(&s, &s).unwrap(), GammaMatrix::identity(1));
        assert_eq!(mat_mul(&p, &mat_inv(&p)).unwrap(), GammaMatrix::identity(1));
    }

    fn arb_sl2() -> impl Strategy<Value = GammaMatrix> {
        (-40i64..40, -40i64..40, -3i64..3).prop_filter_map("coprime", |(a, c, t)| {
            if gcd(a, c) != 1 {
                return None;
            }
            let e = num_integer::Integer::extended_gcd(&a, &c);
            // a*x + c*y = 1  =>  (a, -y; c, x)
            let (b, d) = (-e.y + t * a, e.x + t * c);
            GammaMatrix::new(a, b, c, d, 1).ok()
        })
    }

    proptest! {
        #[test]
        fn associative(g1 in arb_sl2(), g2 in arb_sl2(), g3 in arb_sl2()) {
            let l = mat_mul(&mat_mul(&g1, &g2).unwrap(), &g3).unwrap();
            let r = mat_mul(&g1, &mat_mul(&g2, &g3).unwrap()).unwrap();
            prop_assert_eq!(l, r);
            prop_assert_eq!(l.det(), 1);
        }

        #[test]
        fn duality_is_involution(c in 1i64..5000, a in 0i64..5000) {
            if let Ok(x) = Cusp::new(a, c) {
                prop_assert_eq!(x.dual_cusp().dual_cusp(), x);
            }
        }
    }
}
