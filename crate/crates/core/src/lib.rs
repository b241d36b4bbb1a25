//! Exact solutions of variable-coefficient coupled reaction-diffusion and
//! Burgers-type systems.
//!
//! The library solves the Riccati systems that control a family of similarity
//! transformations, applies the transformations to closed-form solutions of
//! five constant-coefficient systems (linear reaction-diffusion, two- and
//! three-component diffusive Lotka-Volterra, Gray-Scott, coupled Burgers), and
//! certifies the results two independent ways: direct PDE residual evaluation
//! on space-time grids, and cross-validation against a method-of-lines
//! finite-difference integrator.
//!
//! Pipeline for one scenario:
//!
//! 1. [`expr`] parses the time-dependent coefficients a(t)..g(t).
//! 2. [`riccati`] integrates the characteristic ODE, builds the kernel
//!    quadratures, and propagates arbitrary initial data through the
//!    multiparameter formulas.
//! 3. [`classical`] supplies a closed-form solution of the matching
//!    constant-coefficient system.
//! 4. [`transform`] assembles the generalized system together with its exact
//!    solution.
//! 5. [`verify`] measures PDE residuals of the pair; [`numsolve`] integrates
//!    the same system numerically and compares against the exact fields.
//!
//! [`scenario`] drives the whole pipeline from a JSON config; the `ricdiff`
//! CLI in the sibling crate is a thin wrapper over it.

pub mod classical;
mod error;
pub mod expr;
pub mod numsolve;
pub mod ode;
pub mod riccati;
pub mod scenario;
pub mod transform;
pub mod verify;

pub use error::{Error, Result};
