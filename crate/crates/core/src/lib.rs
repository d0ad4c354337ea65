//! Additive twists of modular L-functions, their critical values, period
//! polynomials and the statistics of those values over cusps.
//!
//! Sweeps over cusps, moduli and grid points take an [`Exec`] policy. With
//! the `parallel` feature (default) `Exec::Parallel` runs on rayon; results
//! are bitwise identical to `Exec::Sequential` because every sweep collects
//! into an ordered vector before a fixed-order reduction.

pub mod arith;
pub mod cusps;
pub mod error;
pub mod form;
pub mod kloosterman;
pub mod ltwist;
pub mod moments;
pub mod par;
pub mod periods;
pub mod series;
pub mod special;
pub mod zeros;

pub use cusps::{Cusp, GammaMatrix};
pub use error::{Error, Result};
pub use form::QExpansion;
pub use moments::{MomentSpec, Projection};
pub use par::Exec;
pub use periods::NormalizationConvention;
