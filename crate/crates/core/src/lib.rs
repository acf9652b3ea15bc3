//! Input design and data-driven surrogates for control-affine systems.
//!
//! The crate is organized bottom-up:
//!
//! - [`linalg`]: dense SVD, symmetric eigenvalues, pseudo-inverse, projection.
//! - [`affine_fit`]: the design matrix `V = [1^T; U]`, least-squares fit of
//!   `[g0 G]` and its max-norm error bound.
//! - [`excitation`]: orthogonal/simplex designs, optimality and tight-frame
//!   checks, subspace-angle lower bounds, Monte Carlo studies.
//! - [`koopman`]: flexible-sampling bilinear EDMD (operator and generator)
//!   and Wendland-kernel EDMD.
//! - [`robot`]: differential-drive benchmark tying the pieces together.

pub mod affine_fit;
pub mod error;
pub mod excitation;
pub mod koopman;
pub mod linalg;
pub mod robot;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
