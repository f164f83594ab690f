//! Conversion between optical powers and the normalized drive Y and output X.
//!
//! The chain is
//!
//! * intracavity photons of the empty resonant cavity: n = ε P_in / (ħω κ)
//! * drive: Y = n / m0
//! * output through one mirror: P_out = X m0 ħω T c / (2L)
//!
//! With the lossless default T = π/F the last factor T c/(2L) equals κ, so an
//! empty resonant cavity (X = Y) transmits P_out = ε P_in.

use serde::Serialize;

use crate::constants::SPEED_OF_LIGHT;
use crate::error::{require_non_negative, require_positive, Result};
use crate::params::{cavity_photon_energy, derive_quantities, AtomParams, CavityParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Calibration {
    /// Input coupling ε.
    pub epsilon: f64,
    /// ħω at the cavity wavelength, J.
    pub photon_energy: f64,
    /// rad/s
    pub kappa: f64,
    pub m0: f64,
    /// Output mirror power transmission.
    pub transmission: f64,
    /// m
    pub length: f64,
}

impl Calibration {
    pub fn new(cavity: &CavityParams, atom: &AtomParams, epsilon: f64) -> Result<Self> {
        require_positive("detector.input_coupling", epsilon)?;
        let derived = derive_quantities(atom, cavity)?;
        Ok(Calibration {
            epsilon,
            photon_energy: cavity_photon_energy(cavity),
            kappa: cavity.kappa,
            m0: derived.m0,
            transmission: cavity.transmission(),
            length: cavity.length,
        })
    }

    /// Empty resonant cavity photon number for input power `p_in`.
    pub fn intracavity_photons(&self, p_in: f64) -> f64 {
        self.epsilon * p_in / (self.photon_energy * self.kappa)
    }

    pub fn drive(&self, p_in: f64) -> f64 {
        self.intracavity_photons(p_in) / self.m0
    }

    pub fn input_power(&self, y: f64) -> f64 {
        y * self.m0 * self.photon_energy * self.kappa / self.epsilon
    }

    /// Watts of output per unit X.
    pub fn output_scale(&self) -> f64 {
        self.m0 * self.photon_energy * self.transmission * SPEED_OF_LIGHT / (2.0 * self.length)
    }

    pub fn output_power(&self, x: f64) -> f64 {
        x * self.output_scale()
    }

    pub fn output_drive(&self, p_out: f64) -> f64 {
        p_out / self.output_scale()
    }

    /// Largest steady-state P_out / P_in, reached by the empty resonant
    /// cavity.
    pub fn transfer_ceiling(&self) -> f64 {
        self.output_scale() / (self.m0 * self.photon_energy * self.kappa) * self.epsilon
    }
}

/// ε that makes `p_one_photon` give one intracavity photon in the empty
/// resonant cavity.
pub fn calibrate_input_coupling(cavity: &CavityParams, p_one_photon: f64) -> Result<f64> {
    require_positive("p_one_photon", p_one_photon)?;
    cavity.validate()?;
    Ok(cavity_photon_energy(cavity) * cavity.kappa / p_one_photon)
}

/// Normalized drive Y for input power `p_in`.
pub fn power_to_drive(p_in: f64, cavity: &CavityParams, atom: &AtomParams, epsilon: f64) -> Result<f64> {
    require_non_negative("p_in", p_in)?;
    Ok(Calibration::new(cavity, atom, epsilon)?.drive(p_in))
}

/// Output power through one mirror for normalized intracavity output `x`.
pub fn drive_to_output_power(x: f64, cavity: &CavityParams, atom: &AtomParams) -> Result<f64> {
    require_non_negative("x", x)?;
    Ok(Calibration::new(cavity, atom, 1.0)?.output_power(x))
}
