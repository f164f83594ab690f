//! Modeling toolkit for a strongly coupled atom-cavity system that is fed by
//! optically transported atoms.
//!
//! The crate is organized bottom-up:
//!
//! * [`params`] holds the cavity and atom constants and the derived figures of
//!   merit (cooperativity, critical photon and atom numbers, finesse).
//! * [`beams`] covers Gaussian beam propagation, dipole-trap depths and the
//!   walking-wave lattice conveyor.
//! * [`bistability`] is the unit-free steady-state core: the absorptive
//!   bistability state equation, its branches, turning points and hysteresis.
//! * [`transport`] plans and samples the lattice motion and free fall.
//! * [`transit`] forward-simulates cavity transmission while an atom cloud
//!   passes through the mode, including the detection chain.
//! * [`estimator`] inverts transmission data back into cooperativity.
//!
//! Internally every rate (`g0`, `kappa`, `gamma`, detunings) is an angular
//! rate in rad/s. Conversions to and from Hz happen only at the I/O boundary.

pub mod beams;
pub mod bistability;
pub mod constants;
mod error;
pub mod estimator;
pub mod numeric;
pub mod params;
pub mod presets;
pub mod transit;
pub mod transport;

pub use error::{Error, Result};
