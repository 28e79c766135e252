//! Harmonic analysis and differential operators on the unit round 3-sphere.

pub mod basis;
pub mod elliptic;
pub mod field;
pub mod ops;
pub mod project;
pub mod wigner;
