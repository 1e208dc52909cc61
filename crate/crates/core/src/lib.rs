//! Pluripotential-theoretic capacities on complex projective space.
//!
//! The crate works with quasi-plurisubharmonic functions for the
//! Fubini–Study form on ℂℙⁿ. For n = 1 everything is computed on a pair of
//! affine chart grids, with chart 0 owning |z| ≤ 1.5; for n ≥ 2 only circled
//! (radial) data is supported, through a one-dimensional convex reduction in
//! the variable `s = log |z|`.
//!
//! Building blocks, bottom-up:
//!
//! * [`geometry`]: projective points, charts, the Fubini–Study potential,
//!   grids and set descriptions.
//! * [`field`]: grid-sampled ω-psh candidates and their algebra.
//! * [`monge_ampere`]: discrete Monge–Ampère measures, Chern–Levine–Nirenberg
//!   pairings, the comparison principle and harmonic replacement.
//! * [`envelopes`] and [`toric`]: relative and global extremal functions.
//! * [`capacities`]: Monge–Ampère capacity, Alexander capacity and the
//!   inequalities relating them.
//! * [`sections`]: homogeneous polynomials, Chebyshev constants and Bergman
//!   regularization.
//! * [`dynamics`]: endomorphisms of ℂℙ¹ and their Green functions.
//!
//! The crate is `no_std` and only needs an allocator.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod capacities;
pub mod dynamics;
pub mod envelopes;
mod error;
pub mod field;
pub mod geometry;
pub mod linalg;
pub mod monge_ampere;
pub mod sections;
mod solver;
pub mod tol;
pub mod toric;

pub use error::{Error, Result};

pub use num_complex::Complex64 as C64;
