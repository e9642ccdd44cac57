//! Contact-metric geometry of the thermodynamic phase space.
//!
//! Points of the phase space live in a single Darboux chart with coordinates
//! ordered as `(w, q^1..q^n, p_1..p_n)`. Every vector, covector and matrix in
//! this crate uses that order.
//!
//! The modules build on one another:
//!
//! - [`chart`]: points, the Gibbs 1-form, Reeb field, Heisenberg basis,
//!   numerical Lie brackets and the volume check.
//! - [`fields`]: differentiable scalar fields and potentials backed by
//!   forward-mode dual numbers.
//! - [`metric`]: the Fisher-Rao metric, para-contact tensor and the
//!   structure bundle with its identity checks.
//! - [`gauge`]: conformal rescalings of the full structure.
//! - [`legendre`]: discrete Legendre maps, Legendre submanifolds and numeric
//!   conjugate potentials.
//! - [`dynamics`]: contact Hamiltonian vector fields, Jacobi brackets and an
//!   RK4 integrator.
//! - [`processes`]: the thermodynamic Hamiltonian `H = -w` and entropy
//!   production.
//! - [`models`]: ideal gas and Van der Waals fluid.
//! - [`cli`]: the command-line front end used by the `tps` binary.

pub mod calculus;
pub mod chart;
pub mod cli;
pub mod dynamics;
pub mod error;
pub mod fields;
pub mod gauge;
pub mod legendre;
pub mod metric;
pub mod models;
pub mod processes;

pub use error::{Result, TpsError};

/// Column vector of reals.
pub type Vector = nalgebra::DVector<f64>;
/// Dense real matrix.
pub type Matrix = nalgebra::DMatrix<f64>;
