//! Numerical laboratory for semilinear wave equations `□φ = Q(∇φ, ∇φ)` with a
//! null-form nonlinearity on Minkowski space.
//!
//! The crate is organized bottom-up:
//!
//! * [`nullform`] exact algebra of null quadratic forms (basis, frame
//!   decomposition, commutators, pointwise bounds);
//! * [`geometry`] double-null grids, angular operators and flux quadratures;
//! * [`pulse`] short-pulse characteristic data and its calibration;
//! * [`exact`] closed-form solutions used as oracles;
//! * [`solver`] the second-order diamond marching scheme for `ψ = rφ`;
//! * [`diagnostics`] stress components, energy norms, energy-identity
//!   residuals, sup-norm tables and focusing quantities;
//! * [`experiments`] δ-sweeps, u₀-convergence, grid convergence and power-law fits.

pub mod diagnostics;
pub mod error;
pub mod exact;
pub mod experiments;
pub mod field;
pub mod geometry;
pub mod nullform;
pub mod pulse;
pub mod solver;

pub use error::{Error, Result};
pub use field::Field3;
pub use geometry::{AngularMode, DoubleNullGrid, GridPoint};
pub use nullform::{BasisForm, FourVector, FrameComponents, FrameGradient, NullFormCoeffs};
pub use pulse::{CapMode, CharacteristicData, PulseProfile};
pub use solver::{FieldState, NullFormSpec, SolverConfig};
