//! Truncated power series with exact integer coefficients.

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// `c(0) + c(1) q + ... + c(M) q^M`; ring operations never touch indices above `M`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TruncatedSeries {
    coeffs: Vec<BigInt>,
}

impl TruncatedSeries {
    pub fn zero(truncation: usize) -> Self {
        TruncatedSeries { coeffs: vec![BigInt::zero(); truncation + 1] }
    }

    pub fn one(truncation: usize) -> Self {
        let mut s = Self::zero(truncation);
        s.coeffs[0] = BigInt::one();
        s
    }

    /// Builds a series from the given coefficients, zero-padding or cutting to `truncation`.
    pub fn from_coeffs(mut coeffs: Vec<BigInt>, truncation: usize) -> Self {
        coeffs.resize(truncation + 1, BigInt::zero());
        TruncatedSeries { coeffs }
    }

    pub fn truncation(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[BigInt] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<BigInt> {
        self.coeffs
    }

    pub fn coeff(&self, n: usize) -> &BigInt {
        &self.coeffs[n]
    }

    /// `prod_{n>=1} (1 - q^n)` from Euler's pentagonal number theorem.
    pub fn euler_product(truncation: usize) -> Self {
        let mut s = Self::zero(truncation);
        s.coeffs[0] = BigInt::one();
        let mut m: i64 = 1;
        loop {
            let sign = if m % 2 == 0 { 1 } else { -1 };
            let p1 = (m * (3 * m - 1) / 2) as usize;
            let p2 = (m * (3 * m + 1) / 2) as usize;
            if p1 > truncation {
                break;
            }
            s.coeffs[p1] += sign;
            if p2 <= truncation {
                s.coeffs[p2] += sign;
            }
            m += 1;
        }
        s
    }

    /// Truncated product; the truncation is the smaller of the two.
    pub fn mul(&self, other: &Self) -> Self {
        let m = self.truncation().min(other.truncation());
        let (sparse, dense) = if self.nonzero_count() <= other.nonzero_count() {
            (self, other)
        } else {
            (other, self)
        };
        let mut out = Self::zero(m);
        for (i, a) in sparse.coeffs.iter().enumerate().take(m + 1) {
            if a.is_zero() {
                continue;
            }
            for (j, b) in dense.coeffs[..=m - i].iter().enumerate() {
                if !b.is_zero() {
                    out.coeffs[i + j] += a * b;
                }
            }
        }
        out
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut result = Self::one(self.truncation());
        for _ in 0..e {
            result = self.mul_into_dense(&result);
        }
        result
    }

    /// `self * dense`, exploiting sparsity of `self`. Runs in `i128` when
    /// the operands fit and falls back to big integers on overflow.
    fn mul_into_dense(&self, dense: &Self) -> Self {
        let m = self.truncation().min(dense.truncation());
        let sparse: Vec<(usize, BigInt)> = self
            .coeffs
            .iter()
            .enumerate()
            .take(m + 1)
            .filter(|(_, c)| !c.is_zero())
            .map(|(i, c)| (i, c.clone()))
            .collect();
        if let Some(out) = mul_sparse_i128(&sparse, &dense.coeffs[..=m]) {
            return TruncatedSeries { coeffs: out.into_iter().map(BigInt::from).collect() };
        }
        let mut out = Self::zero(m);
        for (i, a) in &sparse {
            for (j, b) in dense.coeffs[..=m - i].iter().enumerate() {
                out.coeffs[i + j] += a * b;
            }
        }
        out
    }

    /// Shift up by `k` powers of q, keeping the truncation.
    pub fn shift(&self, k: usize) -> Self {
        let m = self.truncation();
        let mut out = Self::zero(m);
        for i in 0..=m.saturating_sub(k) {
            if i + k <= m {
                out.coeffs[i + k] = self.coeffs[i].clone();
            }
        }
        out
    }

    pub fn nonzero_count(&self) -> usize {
        self.coeffs.iter().filter(|c| !c.is_zero()).count()
    }

    pub fn max_abs_bits(&self) -> u64 {
        self.coeffs.iter().map(|c| c.abs().bits()).max().unwrap_or(0)
    }
}

fn mul_sparse_i128(sparse: &[(usize, BigInt)], dense: &[BigInt]) -> Option<Vec<i128>> {
    let m = dense.len() - 1;
    let sp: Vec<(usize, i128)> =
        sparse.iter().map(|(i, c)| c.to_i128().map(|v| (*i, v))).collect::<Option<_>>()?;
    let de: Vec<i128> = dense.iter().map(|c| c.to_i128()).collect::<Option<_>>()?;
    let mut out = vec![0i128; m + 1];
    for &(i, a) in &sp {
        for (j, &b) in de[..=m - i].iter().enumerate() {
            let p = a.checked_mul(b)?;
            out[i + j] = out[i + j].checked_add(p)?;
        }
    }
    Some(out)
}
