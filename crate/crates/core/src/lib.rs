//! Lévy-driven SDEs, their nonlocal Fokker-Planck distributions, and
//! Kantorovich-Rubinstein distances with logarithmic cost.
//!
//! The crate is organized by capability:
//!
//! - [`measure`]: weighted point clouds, initial laws, weak-convergence gap
//! - [`jump`]: truncated power-law jump measures, exact sampling, annulus quadrature
//! - [`field`] and [`presets`]: drift and jump coefficients
//! - [`sde`]: compound-Poisson Euler simulation, common-noise coupling, moments
//! - [`ot`]: exact and entropic transport under log costs
//! - [`analysis`]: mollification, space-time norms, jump-integrated norms,
//!   maximal functions, stability-bound terms
//! - [`fpe`]: 1-d finite-volume solver for the nonlocal Fokker-Planck equation
//! - [`harness`] and [`commands`]: configuration-driven experiments and the
//!   single-shot operations behind the command-line tool, with CSV output
//!
//! See `examples/` for one runnable program per capability.

pub mod analysis;
pub mod commands;
pub mod error;
pub mod field;
pub mod fpe;
pub mod grid;
pub mod harness;
pub mod jump;
pub mod measure;
pub mod ot;
pub mod presets;
pub mod quad;
pub mod rng;
pub mod sde;

pub use error::{Error, Result};
