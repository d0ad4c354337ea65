//! Execution policy for the sweep kernels.
//!
//! Every sweep maps over an index range into an ordered `Vec` and then
//! reduces sequentially, so results are bitwise identical for either policy
//! and any thread count.

use std::ops::Range;

use num_complex::Complex64;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Exec {
    Sequential,
    /// Rayon work-stealing; runs sequentially when built without the
    /// `parallel` feature.
    Parallel,
}

impl Default for Exec {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Exec::Parallel
        } else {
            Exec::Sequential
        }
    }
}

impl Exec {
    pub fn map<T, R, F>(self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Exec::Parallel => {
                use rayon::prelude::*;
                items.par_iter().map(f).collect()
            }
            _ => items.iter().map(f).collect(),
        }
    }

    pub fn map_range<R, F>(self, range: Range<usize>, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(usize) -> R + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Exec::Parallel => {
                use rayon::prelude::*;
                range.into_par_iter().map(f).collect()
            }
            _ => range.map(f).collect(),
        }
    }
}

/// Pairwise (cascade) summation in a fixed tree order.
pub fn pairwise_sum(xs: &[Complex64]) -> Complex64 {
    const LEAF: usize = 64;
    if xs.len() <= LEAF {
        return xs.iter().fold(Complex64::new(0.0, 0.0), |acc, x| acc + x);
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

pub fn pairwise_sum_f64(xs: &[f64]) -> f64 {
    const LEAF: usize = 64;
    if xs.len() <= LEAF {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum_f64(&xs[..mid]) + pairwise_sum_f64(&xs[mid..])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn policies_agree() {
        let f = |i: usize| (i as f64).sqrt().sin();
        let a = Exec::Sequential.map_range(0..10_000, f);
        let b = Exec::Parallel.map_range(0..10_000, f);
        assert_eq!(a, b);
        assert_eq!(pairwise_sum_f64(&a).to_bits(), pairwise_sum_f64(&b).to_bits());
    }
}
