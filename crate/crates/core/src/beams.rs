//! Gaussian beams, far-off-resonance dipole traps and the moving lattice.
//!
//! Positions are measured along the vertical transport axis, with `z = 0` at
//! the cavity and `z > 0` toward the MOT. Depths are returned as
//! temperatures U / k_B in kelvin.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::constants::{BOLTZMANN, HBAR, SPEED_OF_LIGHT};
use crate::error::{require_non_negative, require_positive, Error, Result};
use crate::params::AtomParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianBeam {
    /// W
    pub power: f64,
    /// 1/e² intensity radius at the focus, m.
    pub waist: f64,
    /// m
    pub wavelength: f64,
    /// Axial position of the focus, m.
    #[serde(default)]
    pub focus_z: f64,
}

impl GaussianBeam {
    pub fn validate(&self) -> Result<()> {
        require_non_negative("beam.power", self.power)?;
        require_positive("beam.waist", self.waist)?;
        require_positive("beam.wavelength", self.wavelength)?;
        if !self.focus_z.is_finite() {
            return Err(Error::invalid("beam.focus_z", "must be finite"));
        }
        Ok(())
    }

    /// Peak (on-axis) intensity at `z`, W/m².
    pub fn peak_intensity(&self, z: f64) -> f64 {
        let w = waist_at(self, z);
        2.0 * self.power / (PI * w * w)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeConfig {
    pub beam_down: GaussianBeam,
    pub beam_up: GaussianBeam,
    /// 1/e lifetime of atoms held in the lattice, s.
    pub trap_lifetime: f64,
}

impl LatticeConfig {
    pub fn validate(&self) -> Result<()> {
        self.beam_down.validate()?;
        self.beam_up.validate()?;
        require_positive("lattice.trap_lifetime", self.trap_lifetime)?;
        let (a, b) = (self.beam_down.wavelength, self.beam_up.wavelength);
        if ((a - b) / a).abs() > 1e-12 {
            return Err(Error::WavelengthMismatch { first: a, second: b });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrapPoint {
    pub z: f64,
    /// K
    pub depth: f64,
    pub radial_waist: f64,
}

/// How the detuning from the atomic lines enters the dipole potential.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetuningWeighting {
    /// Single two-level resonance at the D2 line.
    TwoLevel,
    /// 1/Δ_eff = (2/3)/Δ_D2 + (1/3)/Δ_D1, the line-strength weighting of the
    /// alkali fine-structure doublet for linearly polarized light.
    #[default]
    FineStructure,
}

/// Dipole-potential convention plus a global scale factor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DipoleModel {
    pub weighting: DetuningWeighting,
    /// Multiplies every absolute depth. 1.0 applies the formula unchanged.
    pub calibration: f64,
}

impl Default for DipoleModel {
    fn default() -> Self {
        DipoleModel {
            weighting: DetuningWeighting::FineStructure,
            calibration: 1.0,
        }
    }
}

/// z_R = pi w0² / lambda
pub fn rayleigh_range(beam: &GaussianBeam) -> f64 {
    PI * beam.waist * beam.waist / beam.wavelength
}

/// Beam radius w(z) = w0 sqrt(1 + ((z - z_f)/z_R)²).
pub fn waist_at(beam: &GaussianBeam, z: f64) -> f64 {
    let s = (z - beam.focus_z) / rayleigh_range(beam);
    beam.waist * (1.0 + s * s).sqrt()
}

/// Effective angular detuning ω_L − ω_atom seen by the trap light, rad/s.
/// Negative means red detuned (attractive).
pub fn effective_detuning(wavelength: f64, atom: &AtomParams, weighting: DetuningWeighting) -> f64 {
    let detuning = |line: f64| 2.0 * PI * SPEED_OF_LIGHT * (1.0 / wavelength - 1.0 / line);
    let d2 = detuning(atom.lambda_atom);
    match weighting {
        DetuningWeighting::TwoLevel => d2,
        DetuningWeighting::FineStructure => {
            let d1 = detuning(atom.lambda_d1);
            1.0 / ((2.0 / 3.0) / d2 + (1.0 / 3.0) / d1)
        }
    }
}

/// Peak trap depth at axial position `z`, K.
///
/// Uses the far-off-resonance potential U = ħΓ²/(8Δ_eff) · I/I_sat with the
/// on-axis intensity I = 2P/(π w(z)²), so the depth depends on `z` only
/// through w(z).
pub fn dipole_depth(beam: &GaussianBeam, z: f64, atom: &AtomParams, model: &DipoleModel) -> Result<f64> {
    beam.validate()?;
    atom.validate()?;
    require_positive("dipole.calibration", model.calibration)?;
    let delta = effective_detuning(beam.wavelength, atom, model.weighting);
    if !(delta < 0.0) {
        return Err(Error::BlueDetuned { detuning: delta });
    }
    let intensity = beam.peak_intensity(z);
    let potential = HBAR * atom.gamma * atom.gamma / (8.0 * delta) * intensity / atom.i_sat;
    Ok(-potential / BOLTZMANN * model.calibration)
}

pub fn trap_point(beam: &GaussianBeam, z: f64, atom: &AtomParams, model: &DipoleModel) -> Result<TrapPoint> {
    Ok(TrapPoint {
        z,
        depth: dipole_depth(beam, z, atom, model)?,
        radial_waist: waist_at(beam, z),
    })
}

/// Antinode depth of the standing wave formed by two counter-propagating
/// beams, K.
///
/// The interference maximum has field amplitude sqrt(I1) + sqrt(I2), hence
/// depth (sqrt(U1) + sqrt(U2))²; equal beams give four times one beam.
pub fn lattice_depth(lattice: &LatticeConfig, z: f64, atom: &AtomParams, model: &DipoleModel) -> Result<f64> {
    lattice.validate()?;
    let u1 = dipole_depth(&lattice.beam_down, z, atom, model)?;
    let u2 = dipole_depth(&lattice.beam_up, z, atom, model)?;
    let amp = u1.sqrt() + u2.sqrt();
    Ok(amp * amp)
}

/// Lattice velocity v = λ δ / 2 for a difference frequency δ in Hz.
pub fn walking_wave_velocity(delta_hz: f64, wavelength: f64) -> f64 {
    wavelength * delta_hz / 2.0
}

/// Difference frequency δ = 2 v / λ (Hz) that moves the lattice at `v`.
pub fn detuning_for_velocity(velocity: f64, wavelength: f64) -> f64 {
    2.0 * velocity / wavelength
}
