//! Atom clouds passing vertically through the cavity mode.
//!
//! Geometry: `x` along the cavity axis, `y` horizontal across it, `z`
//! vertical. The mode coupling is g/g0 = cos(2πx/λ) exp(-(y²+z²)/w²).

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{require_non_negative, require_positive, Result};
use crate::params::{derive_quantities, AtomParams, CavityParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CloudMode {
    /// Smooth expected coupling, axial standing wave averaged to 1/2.
    #[default]
    Ensemble,
    /// Individual sampled atoms; gives the single-atom spikes at the edges.
    Discrete,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CloudModel {
    /// Expected number of atoms in the cloud.
    pub n_atoms: f64,
    /// s
    pub t_center: f64,
    /// Temporal 1σ spread of arrival, s. FWHM = 2.355 sigma_t.
    pub sigma_t: f64,
    /// Horizontal 1σ spread at the cavity, m.
    pub sigma_r: f64,
    /// Vertical speed through the mode, m/s.
    pub v_transit: f64,
    #[serde(default)]
    pub mode: CloudMode,
}

/// Effective coupling at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CouplingSample {
    pub t: f64,
    /// Mode-weighted atom number, sum of g²/g0².
    pub n_eff: f64,
    /// n_eff C1
    pub coop: f64,
}

/// FWHM of a Gaussian in units of sigma.
pub const FWHM_PER_SIGMA: f64 = 2.354_820_045_030_949;

impl CloudModel {
    pub fn validate(&self) -> Result<()> {
        require_non_negative("cloud.n_atoms", self.n_atoms)?;
        require_positive("cloud.sigma_t", self.sigma_t)?;
        require_positive("cloud.sigma_r", self.sigma_r)?;
        require_positive("cloud.v_transit", self.v_transit)?;
        if !self.t_center.is_finite() {
            return Err(crate::Error::invalid("cloud.t_center", "must be finite"));
        }
        Ok(())
    }

    pub fn fwhm(&self) -> f64 {
        FWHM_PER_SIGMA * self.sigma_t
    }

    /// Unit-peak temporal profile.
    pub fn time_profile(&self, t: f64) -> f64 {
        let s = (t - self.t_center) / self.sigma_t;
        (-0.5 * s * s).exp()
    }

    /// Cloud whose ensemble peak cooperativity equals `peak_coop`.
    pub fn for_peak_cooperativity(
        peak_coop: f64,
        shape: CloudModel,
        cavity: &CavityParams,
        atom: &AtomParams,
    ) -> Result<CloudModel> {
        require_non_negative("peak_coop", peak_coop)?;
        let c1 = derive_quantities(atom, cavity)?.c1;
        let eta = overlap_fraction(&shape, cavity)?;
        Ok(CloudModel {
            n_atoms: peak_coop / (c1 * eta),
            ..shape
        })
    }
}

/// Relative coupling g(r)/g0 at (x, y, z).
pub fn mode_coupling(position: [f64; 3], cavity: &CavityParams) -> f64 {
    let [x, y, z] = position;
    let w = cavity.mode_waist();
    (2.0 * PI * x / cavity.lambda_cav).cos() * (-(y * y + z * z) / (w * w)).exp()
}

/// Expected sum of g²/g0² per atom at the moment the cloud center crosses
/// the axis.
///
/// Product of three factors for a Gaussian density against the Gaussian mode:
/// the axial standing-wave average 1/2 times the fraction of atoms between the
/// mirrors, erf(L / (2√2 σ_r)); the horizontal overlap 1/√(1 + 4σ_r²/w²); and
/// the vertical overlap 1/√(1 + 4σ_z²/w²) with σ_z = v σ_t.
pub fn overlap_fraction(cloud: &CloudModel, cavity: &CavityParams) -> Result<f64> {
    cloud.validate()?;
    cavity.validate()?;
    let w = cavity.mode_waist();
    let axial = 0.5 * libm::erf(cavity.length / (2.0 * std::f64::consts::SQRT_2 * cloud.sigma_r));
    let horizontal = 1.0 / (1.0 + 4.0 * cloud.sigma_r * cloud.sigma_r / (w * w)).sqrt();
    let sigma_z = cloud.v_transit * cloud.sigma_t;
    let vertical = 1.0 / (1.0 + 4.0 * sigma_z * sigma_z / (w * w)).sqrt();
    Ok(axial * horizontal * vertical)
}

/// One sampled atom: position across the mode and axis-crossing time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AtomPath {
    pub x: f64,
    pub y: f64,
    pub t_cross: f64,
}

/// Draws a Poisson number of atoms from the cloud. Atoms whose axial
/// position falls outside the mirror gap never enter the mode and are dropped.
pub fn sample_atoms(cloud: &CloudModel, cavity: &CavityParams, seed: u64) -> Result<Vec<AtomPath>> {
    cloud.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = if cloud.n_atoms > 0.0 {
        Poisson::new(cloud.n_atoms).map_err(|e| crate::Error::invalid("cloud.n_atoms", e.to_string()))?.sample(&mut rng)
            as usize
    } else {
        0
    };
    let transverse = Normal::new(0.0, cloud.sigma_r).expect("sigma_r validated");
    let arrival = Normal::new(cloud.t_center, cloud.sigma_t).expect("sigma_t validated");
    let half_gap = cavity.length / 2.0;
    let mut atoms = Vec::with_capacity(n);
    for _ in 0..n {
        let x = transverse.sample(&mut rng);
        let y = transverse.sample(&mut rng);
        let t_cross = arrival.sample(&mut rng);
        if x.abs() < half_gap {
            atoms.push(AtomPath { x, y, t_cross });
        }
    }
    Ok(atoms)
}

/// Sum of g²/g0² over sampled atoms at time `t`.
pub fn discrete_n_eff(atoms: &[AtomPath], t: f64, v_transit: f64, cavity: &CavityParams) -> f64 {
    let w = cavity.mode_waist();
    atoms
        .iter()
        .map(|a| {
            let z = -v_transit * (t - a.t_cross);
            if z.abs() > 6.0 * w {
                return 0.0;
            }
            let g = mode_coupling([a.x, a.y, z], cavity);
            g * g
        })
        .sum()
}

/// Effective atom number and cooperativity at `t`. `seed` selects the
/// sampled atoms in discrete mode and is ignored in ensemble mode.
pub fn effective_atom_number(
    cloud: &CloudModel,
    t: f64,
    cavity: &CavityParams,
    atom: &AtomParams,
    seed: u64,
) -> Result<CouplingSample> {
    let c1 = derive_quantities(atom, cavity)?.c1;
    let n_eff = match cloud.mode {
        CloudMode::Ensemble => cloud.n_atoms * cloud.time_profile(t) * overlap_fraction(cloud, cavity)?,
        CloudMode::Discrete => discrete_n_eff(&sample_atoms(cloud, cavity, seed)?, t, cloud.v_transit, cavity),
    };
    Ok(CouplingSample { t, n_eff, coop: n_eff * c1 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;

    fn shape(mode: CloudMode) -> CloudModel {
        CloudModel {
            n_atoms: 1.0,
            t_center: 0.0,
            sigma_t: 1e-3,
            sigma_r: 10e-6,
            v_transit: 0.5,
            mode,
        }
    }

    #[test]
    fn coupling_landmarks() {
        let cavity = presets::paper_cavity();
        assert_eq!(mode_coupling([0.0; 3], &cavity), 1.0);
        assert!(mode_coupling([cavity.lambda_cav / 4.0, 0.0, 0.0], &cavity).abs() < 1e-15);
        let w = cavity.mode_waist();
        assert!((mode_coupling([0.0, w, 0.0], &cavity) - (-1f64).exp()).abs() < 1e-15);
        assert!((mode_coupling([0.0, 0.0, w], &cavity) - (-1f64).exp()).abs() < 1e-15);
        assert!((mode_coupling([cavity.lambda_cav / 2.0, 0.0, 0.0], &cavity) + 1.0).abs() < 1e-15);
    }

    #[test]
    fn overlap_limits() {
        let cavity = presets::paper_cavity();
        // point-like, slow cloud: only the standing-wave average remains
        let tight = CloudModel { sigma_r: 1e-9, v_transit: 1e-9, ..shape(CloudMode::Ensemble) };
        assert!((overlap_fraction(&tight, &cavity).unwrap() - 0.5).abs() < 1e-6);
    }

    #[test]
    fn overlap_matches_monte_carlo() {
        let cavity = presets::paper_cavity();
        let cloud = CloudModel { n_atoms: 200_000.0, ..shape(CloudMode::Discrete) };
        let atoms = sample_atoms(&cloud, &cavity, 7).unwrap();
        let mc = discrete_n_eff(&atoms, 0.0, cloud.v_transit, &cavity) / cloud.n_atoms;
        let exact = overlap_fraction(&cloud, &cavity).unwrap();
        assert!((mc / exact - 1.0).abs() < 0.05, "{mc} vs {exact}");
    }

    #[test]
    fn peak_cooperativity_scaling() {
        let (cavity, atom) = (presets::paper_cavity(), presets::rb87_atom());
        let cloud = CloudModel::for_peak_cooperativity(5400.0, shape(CloudMode::Ensemble), &cavity, &atom).unwrap();
        let s = effective_atom_number(&cloud, 0.0, &cavity, &atom, 0).unwrap();
        assert!((s.coop - 5400.0).abs() < 1e-9);
        assert!((s.n_eff - 106.67).abs() < 0.01);
        let far = effective_atom_number(&cloud, 6.5 * cloud.sigma_t, &cavity, &atom, 0).unwrap();
        assert!(far.n_eff < 1e-6 * cloud.n_atoms);
    }

    #[test]
    fn single_atom_through_antinode() {
        let cavity = presets::paper_cavity();
        let atom = [AtomPath { x: 0.0, y: 0.0, t_cross: 0.0 }];
        assert_eq!(discrete_n_eff(&atom, 0.0, 0.5, &cavity), 1.0);
        // axial average over many single-atom passes
        let n = 10_000;
        let mean: f64 = (0..n)
            .map(|i| {
                let x = cavity.lambda_cav * i as f64 / n as f64;
                discrete_n_eff(&[AtomPath { x, y: 0.0, t_cross: 0.0 }], 0.0, 0.5, &cavity)
            })
            .sum::<f64>()
            / n as f64;
        assert!((mean - 0.5).abs() < 1e-9);
    }

    #[test]
    fn sampling_is_seeded() {
        let cavity = presets::paper_cavity();
        let cloud = CloudModel { n_atoms: 50.0, ..shape(CloudMode::Discrete) };
        assert_eq!(sample_atoms(&cloud, &cavity, 3).unwrap(), sample_atoms(&cloud, &cavity, 3).unwrap());
        assert_ne!(sample_atoms(&cloud, &cavity, 3).unwrap(), sample_atoms(&cloud, &cavity, 4).unwrap());
        let empty = CloudModel { n_atoms: 0.0, ..cloud };
        assert!(sample_atoms(&empty, &cavity, 3).unwrap().is_empty());
    }
}
