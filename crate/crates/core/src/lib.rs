//! Entanglement and non-classicality of quartic anharmonic oscillators.
//!
//! Two settings are covered: a pair of anharmonic oscillators coupled through
//! a linear mediator (unitary and zero-temperature dissipative dynamics), and a
//! cavity mode coupled by radiation pressure to an anharmonic movable mirror
//! (closed-form and numeric evolution). Diagnostics include negativity,
//! Wigner functions, and quadrature variances; a Helmholtz-coil calculator
//! estimates the achievable nonlinearity.

pub mod analytic;
pub mod coil;
pub mod dynamics;
pub mod error;
pub mod hilbert;
pub mod linalg;
pub mod models;
pub mod quantify;
pub mod scenarios;

pub use error::{Error, Result};
