//! Reconstruction of conductivity and permittivity on a 3D grid from the
//! positive rotating component of the RF magnetic field.
//!
//! The crate implements a three-stage pipeline:
//!
//! 1. [`recon_direct`] — pointwise formula assuming locally constant
//!    admittivity; fast but produces artifacts where the admittivity varies.
//! 2. [`recon_init`] — a regularized semi-elliptic solve whose coefficients
//!    depend only on the data, giving a blurred but artifact-free initial
//!    guess.
//! 3. [`recon_newton`] — adjoint-based Newton refinement of the initial guess
//!    by minimizing the L2 data misfit.
//!
//! [`phantom`] and [`forward`] provide the synthetic scenes and the forward
//! Dirichlet solver used to generate test data.

pub mod error;
pub mod forward;
pub mod grid;
pub mod io;
pub mod linsolve;
pub mod metrics;
pub mod operators;
pub mod phantom;
pub mod recon_direct;
pub mod recon_init;
pub mod recon_newton;

pub use error::MreptError;

/// Magnetic permeability of free space, H/m.
pub const MU0: f64 = 4.0e-7 * std::f64::consts::PI;

/// Permittivity of free space, F/m.
pub const EPS0: f64 = 8.85e-12;

/// Default angular frequency: 2π × 128 MHz (3 T scanner), rad/s.
pub const OMEGA_DEFAULT: f64 = 2.0 * std::f64::consts::PI * 128.0e6;
