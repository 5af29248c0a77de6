//! Numerical core for interface-aware complex conductivity problems.
//!
//! The crate solves the anisotropic complex conductivity equation on a planar
//! body split by a closed interface, with an optional chiral inclusion whose
//! constitutive law is real-linear but not complex-linear. On top of the
//! forward solver it provides:
//!
//! * boundary power, power gap and free energy, with the mixed field/flux
//!   reformulation used to bracket the power gap by the gradient energy in the
//!   inclusion ([`energy`]);
//! * empirical checks of the three-region inequality across the interface,
//!   three-ball inequalities, the chain-of-balls propagation argument and the
//!   boundary-layer energy estimate ([`smallness`]);
//! * inclusion size bounds from a single boundary measurement ([`estimator`]).
//!
//! Everything here is `no_std` and only needs `alloc`. File formats, the CLI
//! and scenario orchestration live in the `eitlab` crate.
#![no_std]
// `!(x > 0.0)` rejects NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod coefficients;
pub mod energy;
mod error;
pub mod estimator;
pub mod geometry;
pub mod mesh;
pub mod quadrature;
pub mod smallness;
pub mod solver;

pub use error::{Error, Result};

/// Real 2-vector, used for points and real gradients.
pub type Vec2 = nalgebra::Vector2<f64>;
/// Real 2x2 matrix, used for conductivity tensors.
pub type Mat2 = nalgebra::Matrix2<f64>;
/// Complex scalar.
pub type C64 = num_complex::Complex64;

/// Spatial dimension of every computation in this crate.
pub const DIM: usize = 2;
