//! Exact symbolic computation for the quantum loop algebra of type `a_1`,
//! its finite-dimensional modules and q-characters, the quantum Heisenberg
//! algebras, and the evaluation modules built from them.
//!
//! All arithmetic is exact: scalars are reduced rational functions in `t`
//! (with `q = t^2`) and a finite set of declared spectral parameters.

pub mod evalg;
pub mod formal;
pub mod hall;
pub mod heisen;
pub mod linalg;
pub mod loopmod;
pub mod poly;
pub mod qchar;
pub mod scalar;

pub use linalg::Matrix;
pub use scalar::{qbinom, qfact, qint, qratio_product, Scalar, ScalarError, SpectralPoint};
