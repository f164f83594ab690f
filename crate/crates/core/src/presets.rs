//! Published parameter set of the 87Rb micro-cavity experiment.
//!
//! Values that the experiment does not state (saturation intensity, exact
//! D-line wavelengths, cloud geometry) are standard 87Rb numbers or
//! choices documented at their definition.

use crate::beams::{GaussianBeam, LatticeConfig};
use crate::constants::{angular, STANDARD_GRAVITY};
use crate::params::{AtomParams, CavityParams, Quantity, ReferenceValue};
use crate::transit::{calibrate_input_coupling, CloudMode, CloudModel, DetectorModel, TransitSettings, FWHM_PER_SIGMA};
use crate::transport::{free_fall_time, MotionLimits};

pub const PRESET_NAME: &str = "paper-2003";

/// Height of the MOT above the cavity axis, m.
pub const MOT_HEIGHT: f64 = 0.015;

/// Fig. 2a probe powers, W.
pub const TRANSIT_PROBE_POWERS: [f64; 4] = [2e-12, 6.4e-12, 20e-12, 30e-12];

/// Probe powers used to map cooperativity versus time, W.
pub const TIMELINE_PROBE_POWERS: [f64; 5] = [240e-12, 758e-12, 2400e-12, 7580e-12, 31214e-12];

/// Probe power at which one intracavity photon is reached, W.
pub const ONE_PHOTON_PROBE_POWER: f64 = 1.9e-12;

/// Cooperativity of the bistability fit to the input/output sweep.
pub const SWEEP_COOPERATIVITY: f64 = 200.0;

/// Largest measured cooperativity.
pub const PEAK_COOPERATIVITY: f64 = 5400.0;

/// FWHM of the guided cloud's passage through the mode, s.
pub const CLOUD_FWHM: f64 = 1.5e-3;

/// Observed free-fall dip and lattice crossing times, s.
pub const FREE_FALL_DIP: f64 = 55e-3;
pub const LATTICE_CROSSINGS: [f64; 2] = [120e-3, 140e-3];
/// Single atom accelerated at ~30 m/s² arrives this much before free fall, s.
pub const ACCELERATED_LEAD: f64 = 21e-3;
pub const ACCELERATED_ATOM_ACCELERATION: f64 = 30.0;

/// Heterodyne detection bandwidth, Hz.
pub const DETECTION_BANDWIDTH: f64 = 30e3;

/// Horizontal spread of the guided cloud at the cavity, m. Not published;
/// a third of the guide waist. Only the product with n_atoms matters.
pub const CLOUD_SIGMA_R: f64 = 10e-6;

pub const LATTICE_LIFETIME: f64 = 104e-3;
pub const TRAVELLING_WAVE_LIFETIME: f64 = 2.0;

/// Published trap depths, K.
pub mod depths {
    pub const GUIDE_AT_CAVITY: f64 = 72e-6;
    pub const GUIDE_AT_MOT: f64 = 4e-6;
    pub const TI_SAPPHIRE_GUIDE_AT_CAVITY: f64 = 238e-6;
    pub const LATTICE_AT_CAVITY: f64 = 476e-6;
    pub const LATTICE_AT_MOT: f64 = 7e-6;
}

pub fn rb87_atom() -> AtomParams {
    AtomParams {
        gamma: angular(6e6),
        lambda_atom: 780.241e-9,
        lambda_d1: 794.979e-9,
        i_sat: 16.7,
        mass: 1.443_160_648e-25,
    }
}

pub fn paper_cavity() -> CavityParams {
    CavityParams {
        g0: angular(27e6),
        kappa: angular(2.4e6),
        length: 75e-6,
        mirror_radius: 0.10,
        lambda_cav: 780e-9,
        delta_c: angular(4e6),
        mirror_transmission: None,
    }
}

/// 16 mW diode-laser guide focused to 30 um at the cavity.
pub fn diode_guide() -> GaussianBeam {
    GaussianBeam {
        power: 16e-3,
        waist: 30e-6,
        wavelength: 782.5e-9,
        focus_z: 0.0,
    }
}

/// 400 mW Ti:Sapphire guide focused to 22 um.
pub fn ti_sapphire_guide() -> GaussianBeam {
    GaussianBeam {
        power: 400e-3,
        waist: 22e-6,
        wavelength: 850e-9,
        focus_z: 0.0,
    }
}

/// Two counter-propagating 200 mW Ti:Sapphire beams.
pub fn lattice() -> LatticeConfig {
    let beam = GaussianBeam {
        power: 200e-3,
        waist: 22e-6,
        wavelength: 850e-9,
        focus_z: 0.0,
    };
    LatticeConfig {
        beam_down: beam,
        beam_up: beam,
        trap_lifetime: LATTICE_LIFETIME,
    }
}

pub fn lattice_limits() -> MotionLimits {
    MotionLimits {
        v_max: 0.30,
        a_max: 1.5 * STANDARD_GRAVITY,
    }
}

pub fn paper_reference_values() -> Vec<ReferenceValue> {
    vec![
        ReferenceValue { quantity: Quantity::C1, published: 51.0, rel_tol: 0.05 },
        ReferenceValue { quantity: Quantity::M0, published: 0.006, rel_tol: 0.05 },
        ReferenceValue { quantity: Quantity::N0, published: 0.02, rel_tol: 0.05 },
        ReferenceValue { quantity: Quantity::Finesse, published: 420_000.0, rel_tol: 0.05 },
        ReferenceValue { quantity: Quantity::LengthStability, published: 200e-15, rel_tol: 0.10 },
    ]
}

/// Guided cloud falling from the MOT, without an atom number.
pub fn cloud_shape() -> CloudModel {
    let t = free_fall_time(MOT_HEIGHT, STANDARD_GRAVITY).expect("positive constants");
    CloudModel {
        n_atoms: 0.0,
        t_center: t,
        sigma_t: CLOUD_FWHM / FWHM_PER_SIGMA,
        sigma_r: CLOUD_SIGMA_R,
        v_transit: STANDARD_GRAVITY * t,
        mode: CloudMode::Ensemble,
    }
}

/// Cloud of the input power sweeps, peaking at the sweep cooperativity.
pub fn sweep_cloud() -> CloudModel {
    CloudModel::for_peak_cooperativity(SWEEP_COOPERATIVITY, cloud_shape(), &paper_cavity(), &rb87_atom())
        .expect("valid preset")
}

/// Densest cloud, peaking at the largest measured cooperativity.
pub fn peak_cloud() -> CloudModel {
    CloudModel::for_peak_cooperativity(PEAK_COOPERATIVITY, cloud_shape(), &paper_cavity(), &rb87_atom())
        .expect("valid preset")
}

/// Calibrated input coupling with 30 kHz detection and no added noise.
pub fn heterodyne_detector() -> DetectorModel {
    DetectorModel {
        bandwidth: Some(DETECTION_BANDWIDTH),
        noise_floor: 0.0,
        input_coupling: calibrate_input_coupling(&paper_cavity(), ONE_PHOTON_PROBE_POWER).expect("valid preset"),
    }
}

/// Window of +-5 sigma around the cloud with a 1 us step.
pub fn transit_settings(cloud: &CloudModel, seed: u64) -> TransitSettings {
    TransitSettings {
        t_start: cloud.t_center - 5.0 * cloud.sigma_t,
        t_end: cloud.t_center + 5.0 * cloud.sigma_t,
        dt: 1e-6,
        seed,
        model: Default::default(),
    }
}
