//! Numerical verification toolkit for the critical semilinear problem on the
//! upper half-space with a nonlinear boundary flux: closed-form bubble
//! fields and residual checks, the Kelvin transform, moving-plane symmetry
//! diagnostics, one-dimensional trace identities, and an independent
//! axisymmetric finite-difference solver.

pub mod bubble;
pub mod error;
pub mod field;
pub mod fit;
pub mod halton;
pub mod kelvin;
pub mod moving_plane;
pub mod onedim;
pub mod samples;
pub mod solver;

pub use error::{Error, Result};
pub use field::{Dimension, DynField, Point, Provenance, ScalarField};
