//! Numerical laboratory for schedule design in the quantum adiabatic
//! search algorithm.
//!
//! The crate simulates an N-item search evolved by the interpolating
//! Hamiltonian H(s) between a uniform mixing term and a marked-item
//! projector, under an arbitrary monotone schedule s(t) on [0, T]. It
//! measures the intrinsic computational error delta(T), the probability of
//! finishing outside the marked subspace, and verifies the hierarchical
//! picture of deviations from the adiabatic trajectory: in the canonical
//! coordinates (p, q) of the two-level reduction the state oscillates
//! around a center displaced from the instantaneous fixed point by terms
//! controlled by the schedule's time derivatives at the endpoints.
//!
//! Modules:
//! - [`schedule`]: the six named paths plus custom polynomials, analytic
//!   derivatives, exact endpoint classification.
//! - [`model`]: full and reduced search Hamiltonians, spectra, the squared
//!   gap, the classical Hamiltonian over (p, q) and its fixed point.
//! - [`dynamics`]: fixed-step fourth-order integration, trajectories,
//!   the error functional, projective coordinates.
//! - [`deviation`]: first- and second-order deviation centers, the
//!   linearization-matrix route, residual analysis.
//! - [`lab`]: sweeps over (path, T), geometric-mean smoothing, oscillation
//!   patterns, figure-data reproduction and the acceptance suite.

pub mod deviation;
pub mod dynamics;
pub mod error;
pub mod lab;
pub mod model;
pub mod schedule;

pub use error::{Error, Result};
