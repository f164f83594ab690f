//! Physical constants (SI, CODATA 2018 exact values where defined).

use std::f64::consts::PI;

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
pub const PLANCK: f64 = 6.626_070_15e-34;
pub const HBAR: f64 = PLANCK / (2.0 * PI);
pub const BOLTZMANN: f64 = 1.380_649e-23;
pub const STANDARD_GRAVITY: f64 = 9.806_65;

/// Converts a frequency in Hz to an angular rate in rad/s.
#[inline]
pub fn angular(nu_hz: f64) -> f64 {
    2.0 * PI * nu_hz
}

/// Converts an angular rate in rad/s to a frequency in Hz.
#[inline]
pub fn hertz(omega: f64) -> f64 {
    omega / (2.0 * PI)
}
