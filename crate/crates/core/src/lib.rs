//! Numerical laboratory for the time-fractional diffusion equation
//!
//! ```text
//! ∂_t^α u = ∂_x(a(x) ∂_x u) + c(x) u + F(x,t),   0 < α < 1,  x ∈ (0, L)
//! u(0,t) = u(L,t) = 0,   u(x,0) = a₀(x)
//! ```
//!
//! with a Caputo time derivative and a reaction coefficient `c` of arbitrary sign.
//!
//! # Layout
//!
//! - [`mlf`]: two-parameter Mittag-Leffler function on the real axis.
//! - [`elliptic`]: conservative finite-difference discretisation of
//!   `A v = -(a v')' - c v` and its full eigendecomposition.
//! - [`spectral`]: modal solution operators, the exact piecewise-constant source
//!   convolution, the Picard fixed-point solver for sign-indefinite `c` and the
//!   coupled-system extension.
//! - [`l1`]: implicit L1 finite-difference time stepping, used as an independent oracle.
//! - [`verify`]: randomized property checks (maximum, comparison and
//!   monotonicity principles) that produce replayable reports.
//! - [`profile`]: coefficient presets shared by the verifier and the CLI.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod elliptic;
pub mod error;
pub mod l1;
pub mod mlf;
pub mod profile;
pub mod spectral;
pub mod verify;

pub use error::{Error, ErrorKind, Result};
