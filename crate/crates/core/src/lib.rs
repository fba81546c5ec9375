//! Solitary-wave ground states of the bi-harmonic coupled Schrödinger–KdV
//! stationary system
//!
//! ```text
//! Δ²u + λ₁u = u³ + βuv
//! Δ²v + λ₂v = ½|v|v + ½βu²
//! ```
//!
//! computed by constrained minimisation on the Nehari manifold.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cli;
pub mod discretization;
pub mod error;
pub mod ground_states;
pub mod io;
pub mod variational;

pub use discretization::{make_grid, Field, Grid, GridKind, GridSpec};
pub use error::{Error, Result};
pub use variational::{EnergyBreakdown, Params, State};
