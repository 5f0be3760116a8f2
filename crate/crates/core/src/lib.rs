//! Shadow vertex simplex laboratory.
//!
//! An exact floating-point implementation of the shadow vertex pivot rule with
//! two Phase I strategies (symmetric random vertex and dimension-by-dimension)
//! and an interpolation Phase II, together with smoothed instance generators,
//! certified noise parameters, a brute-force polar geometry oracle and a
//! reproducible sweep harness.

pub mod bench;
pub mod error;
pub mod interpolate;
pub mod linalg;
pub mod lp;
pub mod perturb;
pub mod phase_one;
pub mod polar;
pub mod rng;
pub mod shadow;

pub use error::{Error, Result};
pub use lp::{Basis, LpInstance, SolveStatus};
