//! Cavity and atom constants, and the figures of merit derived from them.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::constants::{HBAR, PLANCK, SPEED_OF_LIGHT};
use crate::error::{require_positive, Error, Result};

/// Two-level description of the atomic species.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AtomParams {
    /// Spontaneous emission rate of the probed (D2) transition, rad/s.
    pub gamma: f64,
    /// D2 resonance wavelength, m.
    pub lambda_atom: f64,
    /// D1 resonance wavelength, m. Only used for the D1/D2-weighted dipole
    /// potential.
    pub lambda_d1: f64,
    /// Saturation intensity of the probed transition, W/m².
    pub i_sat: f64,
    /// Atomic mass, kg.
    pub mass: f64,
}

impl AtomParams {
    pub fn validate(&self) -> Result<()> {
        require_positive("atom.gamma", self.gamma)?;
        require_positive("atom.lambda_atom", self.lambda_atom)?;
        require_positive("atom.lambda_d1", self.lambda_d1)?;
        require_positive("atom.i_sat", self.i_sat)?;
        require_positive("atom.mass", self.mass)?;
        for (name, lambda) in [
            ("atom.lambda_atom", self.lambda_atom),
            ("atom.lambda_d1", self.lambda_d1),
        ] {
            if !(100e-9..10e-6).contains(&lambda) {
                return Err(Error::invalid(
                    name,
                    format!("{lambda:.4e} m is outside the optical range (100 nm, 10 um)"),
                ));
            }
        }
        Ok(())
    }

    /// Photon energy at the D2 resonance, J.
    pub fn photon_energy(&self) -> f64 {
        PLANCK * SPEED_OF_LIGHT / self.lambda_atom
    }
}

/// Fabry-Perot cavity with identical spherical mirrors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CavityParams {
    /// Single-atom coupling at the mode antinode, rad/s.
    pub g0: f64,
    /// Cavity field decay rate, rad/s.
    pub kappa: f64,
    /// Mirror separation, m.
    pub length: f64,
    /// Mirror radius of curvature, m.
    pub mirror_radius: f64,
    /// Resonance wavelength, m.
    pub lambda_cav: f64,
    /// Probe-cavity detuning, rad/s. Only its magnitude enters steady-state
    /// transmission.
    pub delta_c: f64,
    /// Power transmission of one mirror. `None` means lossless symmetric
    /// mirrors, T = pi / finesse.
    #[serde(default)]
    pub mirror_transmission: Option<f64>,
}

impl CavityParams {
    pub fn validate(&self) -> Result<()> {
        require_positive("cavity.g0", self.g0)?;
        require_positive("cavity.kappa", self.kappa)?;
        require_positive("cavity.length", self.length)?;
        require_positive("cavity.mirror_radius", self.mirror_radius)?;
        require_positive("cavity.lambda_cav", self.lambda_cav)?;
        if !self.delta_c.is_finite() {
            return Err(Error::invalid("cavity.delta_c", "must be finite"));
        }
        if self.length >= 2.0 * self.mirror_radius {
            return Err(Error::UnstableResonator {
                length: self.length,
                radius: self.mirror_radius,
            });
        }
        if let Some(t) = self.mirror_transmission {
            if !(t > 0.0 && t < 1.0) {
                return Err(Error::invalid(
                    "cavity.mirror_transmission",
                    format!("must lie in (0, 1), got {t}"),
                ));
            }
        }
        Ok(())
    }

    /// Normalized detuning d = delta_c / kappa used by the bistability model.
    pub fn normalized_detuning(&self) -> f64 {
        self.delta_c / self.kappa
    }

    /// Finesse of a cavity whose only loss channel sets `kappa`.
    pub fn finesse(&self) -> f64 {
        PI * SPEED_OF_LIGHT / (2.0 * self.length * self.kappa)
    }

    /// Per-mirror power transmission, explicit or the lossless default.
    pub fn transmission(&self) -> f64 {
        self.mirror_transmission.unwrap_or_else(|| PI / self.finesse())
    }

    /// 1/e² intensity radius of the TEM00 mode at the cavity center.
    pub fn mode_waist(&self) -> f64 {
        let l = self.length;
        let r = self.mirror_radius;
        ((self.lambda_cav / (2.0 * PI)) * (l * (2.0 * r - l)).sqrt()).sqrt()
    }
}

/// Figures of merit that follow from [`AtomParams`] and [`CavityParams`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerivedQuantities {
    pub finesse: f64,
    /// Free spectral range, Hz.
    pub fsr: f64,
    /// Single-atom cooperativity g0² / (kappa gamma).
    pub c1: f64,
    /// Critical photon number gamma² / (8 g0²).
    pub m0: f64,
    /// Critical atom number 1 / c1.
    pub n0: f64,
    /// TEM00 waist, m.
    pub mode_waist: f64,
    /// Standing-wave mode volume pi w² L / 4, m³.
    pub mode_volume: f64,
    /// Length tolerance 0.1 lambda / finesse, m.
    pub length_stability: f64,
}

/// Computes the derived quantities, rejecting invalid or unstable geometry.
pub fn derive_quantities(atom: &AtomParams, cavity: &CavityParams) -> Result<DerivedQuantities> {
    atom.validate()?;
    cavity.validate()?;
    let finesse = cavity.finesse();
    let fsr = SPEED_OF_LIGHT / (2.0 * cavity.length);
    let c1 = cavity.g0 * cavity.g0 / (cavity.kappa * atom.gamma);
    let m0 = atom.gamma * atom.gamma / (8.0 * cavity.g0 * cavity.g0);
    let mode_waist = cavity.mode_waist();
    Ok(DerivedQuantities {
        finesse,
        fsr,
        c1,
        m0,
        n0: 1.0 / c1,
        mode_waist,
        mode_volume: PI / 4.0 * mode_waist * mode_waist * cavity.length,
        length_stability: 0.1 * cavity.lambda_cav / finesse,
    })
}

/// Coupling predicted by the two-level dipole formula from the mode volume,
/// next to the configured value.
///
/// g = sqrt(3 c lambda² gamma / (8 pi V)), obtained from the dipole moment of
/// a closed two-level transition with decay rate gamma.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CouplingCrossCheck {
    pub g0_model: f64,
    pub g0_configured: f64,
    pub ratio: f64,
}

pub fn coupling_cross_check(
    atom: &AtomParams,
    cavity: &CavityParams,
    derived: &DerivedQuantities,
) -> CouplingCrossCheck {
    let lambda = atom.lambda_atom;
    let g0_model = (3.0 * SPEED_OF_LIGHT * lambda * lambda * atom.gamma
        / (8.0 * PI * derived.mode_volume))
        .sqrt();
    CouplingCrossCheck {
        g0_model,
        g0_configured: cavity.g0,
        ratio: g0_model / cavity.g0,
    }
}

/// Photon energy at the cavity resonance, J.
pub fn cavity_photon_energy(cavity: &CavityParams) -> f64 {
    HBAR * 2.0 * PI * SPEED_OF_LIGHT / cavity.lambda_cav
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    C1,
    M0,
    N0,
    Finesse,
    Fsr,
    ModeWaist,
    ModeVolume,
    LengthStability,
}

impl Quantity {
    pub fn name(self) -> &'static str {
        match self {
            Quantity::C1 => "c1",
            Quantity::M0 => "m0",
            Quantity::N0 => "n0",
            Quantity::Finesse => "finesse",
            Quantity::Fsr => "fsr",
            Quantity::ModeWaist => "mode_waist",
            Quantity::ModeVolume => "mode_volume",
            Quantity::LengthStability => "length_stability",
        }
    }

    pub fn of(self, d: &DerivedQuantities) -> f64 {
        match self {
            Quantity::C1 => d.c1,
            Quantity::M0 => d.m0,
            Quantity::N0 => d.n0,
            Quantity::Finesse => d.finesse,
            Quantity::Fsr => d.fsr,
            Quantity::ModeWaist => d.mode_waist,
            Quantity::ModeVolume => d.mode_volume,
            Quantity::LengthStability => d.length_stability,
        }
    }
}

/// A reference value to compare a derived quantity against.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceValue {
    pub quantity: Quantity,
    pub published: f64,
    pub rel_tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConsistencyRow {
    pub quantity: Quantity,
    pub computed: f64,
    pub published: f64,
    /// computed / published
    pub ratio: f64,
    pub rel_tol: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConsistencyReport {
    pub rows: Vec<ConsistencyRow>,
    pub coupling: CouplingCrossCheck,
}

impl ConsistencyReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn row(&self, q: Quantity) -> Option<&ConsistencyRow> {
        self.rows.iter().find(|r| r.quantity == q)
    }
}

/// Compares each derived quantity with its reference value.
///
/// Failures are carried in the report, never returned as errors.
pub fn validate_consistency(
    atom: &AtomParams,
    cavity: &CavityParams,
    derived: &DerivedQuantities,
    references: &[ReferenceValue],
) -> ConsistencyReport {
    let rows = references
        .iter()
        .map(|r| {
            let computed = r.quantity.of(derived);
            let ratio = computed / r.published;
            ConsistencyRow {
                quantity: r.quantity,
                computed,
                published: r.published,
                ratio,
                rel_tol: r.rel_tol,
                pass: (ratio - 1.0).abs() <= r.rel_tol,
            }
        })
        .collect();
    ConsistencyReport {
        rows,
        coupling: coupling_cross_check(atom, cavity, derived),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::angular;
    use crate::presets;

    fn paper() -> (AtomParams, CavityParams) {
        (presets::rb87_atom(), presets::paper_cavity())
    }

    #[test]
    fn published_figures_of_merit() {
        let (atom, cavity) = paper();
        let d = derive_quantities(&atom, &cavity).unwrap();
        assert!((d.c1 - 50.625).abs() < 1e-9);
        assert!((d.m0 - 6.1728e-3).abs() < 1e-6);
        assert!((d.n0 - 1.9753e-2).abs() < 1e-5);
        assert!((d.finesse / 416_378.41 - 1.0).abs() < 1e-8);
        assert!((d.length_stability - 1.873_296e-13).abs() < 1e-18);
    }

    #[test]
    fn symmetric_resonator_waist() {
        // (780e-9 / 2pi) * sqrt(75e-6 * (0.2 - 75e-6)) evaluated by hand
        let (_, cavity) = paper();
        let by_hand = ((780e-9 / (2.0 * PI)) * (75e-6f64 * (0.2 - 75e-6)).sqrt()).sqrt();
        assert_eq!(cavity.mode_waist(), by_hand);
        assert!((cavity.mode_waist() * 1e6 - 21.93).abs() < 0.01);
    }

    #[test]
    fn zero_coupling_rejected() {
        let (atom, mut cavity) = paper();
        cavity.g0 = 0.0;
        assert!(matches!(
            derive_quantities(&atom, &cavity),
            Err(Error::InvalidParameter { name: "cavity.g0", .. })
        ));
    }

    #[test]
    fn unstable_geometry_rejected() {
        let (atom, mut cavity) = paper();
        cavity.length = 2.0 * cavity.mirror_radius;
        assert!(matches!(
            derive_quantities(&atom, &cavity),
            Err(Error::UnstableResonator { .. })
        ));
    }

    #[test]
    fn default_transmission_is_lossless_symmetric() {
        let (_, cavity) = paper();
        assert!((cavity.transmission() * cavity.finesse() - PI).abs() < 1e-12);
    }

    #[test]
    fn finesse_matches_fsr_over_linewidth() {
        let (atom, cavity) = paper();
        let d = derive_quantities(&atom, &cavity).unwrap();
        let linewidth_hz = 2.0 * cavity.kappa / (2.0 * PI);
        assert!((d.finesse * linewidth_hz / d.fsr - 1.0).abs() < 1e-14);
    }

    #[test]
    fn consistency_report_paper_defaults() {
        let (atom, cavity) = paper();
        let d = derive_quantities(&atom, &cavity).unwrap();
        let report = validate_consistency(&atom, &cavity, &d, &presets::paper_reference_values());
        assert!(report.passed(), "{report:#?}");
        let dl = report.row(Quantity::LengthStability).unwrap();
        assert!((dl.computed - 1.86e-13).abs() < 0.02e-13);
    }

    #[test]
    fn doubled_kappa_fails_finesse_check() {
        let (atom, mut cavity) = paper();
        let base = derive_quantities(&atom, &cavity).unwrap().finesse;
        cavity.kappa *= 2.0;
        let d = derive_quantities(&atom, &cavity).unwrap();
        let report = validate_consistency(&atom, &cavity, &d, &presets::paper_reference_values());
        let row = report.row(Quantity::Finesse).unwrap();
        assert!(!row.pass);
        assert!((d.finesse / base - 0.5).abs() < 1e-14);
        assert!((row.ratio - 0.5).abs() < 0.01);
        assert!(!report.passed());
    }

    #[test]
    fn two_level_coupling_cross_check() {
        let (atom, cavity) = paper();
        let d = derive_quantities(&atom, &cavity).unwrap();
        let check = coupling_cross_check(&atom, &cavity, &d);
        // The closed two-level formula lands within a few percent of the
        // configured 27 MHz for this mode volume.
        assert!((check.g0_model / angular(27e6) - 1.0).abs() < 0.05, "{check:?}");
    }

    #[test]
    fn waist_grows_with_mirror_radius() {
        let (_, mut cavity) = paper();
        let mut last = 0.0;
        for r in [0.01, 0.05, 0.1, 0.5, 1.0] {
            cavity.mirror_radius = r;
            let w = cavity.mode_waist();
            assert!(w > last);
            last = w;
        }
    }

    #[test]
    fn deterministic() {
        let (atom, cavity) = paper();
        let a = derive_quantities(&atom, &cavity).unwrap();
        let b = derive_quantities(&atom, &cavity).unwrap();
        assert_eq!(format!("{a:?}"), format!("{b:?}"));
    }
}
