//! Optimal insulation eigenvalue with a positive lower bound on the film
//! thickness.
//!
//! The crate is `no_std` (it needs `alloc`) and purely computational:
//!
//! * [`geometry`]: convex polygons, hull projection, triangulation and the
//!   boundary graph of a mesh.
//! * [`fem`]: P1 assembly, sparse matrices, preconditioned CG and inverse
//!   iteration for generalized eigenproblems.
//! * [`insulation`]: the threshold constant `c_u`, the optimal film density
//!   and the boundary energy.
//! * [`flow`]: the decoupled energy-decreasing iteration for the eigenvalue,
//!   the regularized problem without lower bound and the Robin/Neumann
//!   references.
//! * [`scaling`]: volume normalization and parameter rescaling.
//! * [`shape`]: convexity-constrained shape descent of the scaled eigenvalue.
//!
//! File formats, the CLI and thread pools live in the `insulopt` crate.

#![no_std]
// toolchains with inherent float methods in `core` (and test builds, which
// link std) shadow `FloatExt`; older ones need it
#![allow(unused_imports)]

extern crate alloc;

mod error;
pub mod fem;
pub mod flow;
pub mod geometry;
pub mod insulation;
mod num;
pub mod scaling;
pub mod shape;

pub use error::{Error, Result};
pub use num::FloatExt;
