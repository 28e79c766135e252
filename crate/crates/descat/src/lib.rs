//! Spectral evolution of the conformally coupled Maxwell-scalar system on the
//! Einstein cylinder `R x S^3`, with the gauge fixed so that the spatial
//! potential is divergence free and the temporal component has zero mean on
//! every slice.
//!
//! The crate is organised around a Wigner matrix-element basis on
//! `S^3 = SU(2)`: frame derivatives along the global left-invariant frame act
//! algebraically on coefficients, which makes every differential operator
//! exact on band-limited data. On top of that sit the elliptic solves for the
//! temporal potential, a method-of-lines integrator across the compactified
//! time interval, energy/constraint monitors, wave and scattering maps built
//! by evolution, coordinate maps to physical de Sitter observables, and a
//! comparison-ODE verifier for the nonlinear Gronwall bound used in the
//! estimates.

pub mod a0;
pub mod conformal;
pub mod energy;
pub mod error;
pub mod evolve;
pub mod gronwall;
pub mod io;
pub mod linalg;
pub mod oracle;
pub mod par;
pub mod s3;
pub mod scatter;
pub mod state;

pub use error::{Error, Result};
pub use s3::basis::{Basis, BasisSpec, Orientation};
pub use s3::field::{ScalarField, TangentOneForm};
pub use state::FieldState;

/// Volume of the unit round 3-sphere.
pub const VOL_S3: f64 = 2.0 * std::f64::consts::PI * std::f64::consts::PI;
