//! Numerical laboratory for kinematic dynamos on the hyperbolic plane.
//!
//! The chart is the Poincaré upper half-plane {(x, y) : y > 0} with metric
//! ds² = y⁻²(dx² + dy²) and constant Gaussian curvature −1. On it the crate
//! provides:
//!
//! * [`geometry`] — exact metric, connection and curvature, plus a
//!   finite-difference curvature oracle used only for verification;
//! * [`fields`] — grids, the discrete exterior derivative B = dA, the
//!   covariant divergence, and the covariant vector Laplacian;
//! * [`analytic`] — closed-form dynamo families (force-free and forced),
//!   the growth-rate formula γ(η) = V₀K − λ²η, reversal lines, the
//!   non-geodesic restoring-force residual, and geodesic deviation;
//! * [`solver`] — explicit time-stepping of the component induction
//!   equation under prescribed steady flows, with stability policing;
//! * [`diagnostics`] — growth-rate fits, magnetic energy, reversal
//!   scanning, the entropy-bound ordering, and a fourth-order
//!   geodesic-deviation integrator;
//! * [`cli`] — the configuration-driven command front end used by the
//!   `hyperdynamo` binary, including the discrepancy (errata) harness that
//!   evaluates both readings of every ambiguous formulation instead of
//!   silently picking one.
//!
//! The `examples/` directory carries one runnable program per capability;
//! start there.

pub mod analytic;
pub mod cli;
pub mod diagnostics;
mod error;
pub mod fields;
pub mod geometry;
pub mod solver;

pub use error::{Error, Result};
