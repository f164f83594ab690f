//! Forward model of cavity transmission while atoms pass through the mode.
//!
//! Each time step computes the effective atom number, hence C, converts the
//! probe power into the drive Y, and moves a quasi-static branch follower
//! over the bistability S-curve. The output X becomes a power through
//! [`Calibration`], and the detector model filters and adds noise last.
//!
//! Cavity and atomic relaxation (~100 ns) are treated as instantaneous on the
//! millisecond scale of a transit.

mod calibration;
mod cloud;
mod detector;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use calibration::{calibrate_input_coupling, drive_to_output_power, power_to_drive, Calibration};
pub use cloud::{
    discrete_n_eff, effective_atom_number, mode_coupling, overlap_fraction, sample_atoms, AtomPath, CloudMode,
    CloudModel, CouplingSample, FWHM_PER_SIGMA,
};
pub use detector::{apply_detector, rise_time, DetectorModel};

use crate::bistability::{Bistability, BranchFollower};
use crate::error::{require_non_negative, require_positive, Error, Result};
use crate::params::{derive_quantities, AtomParams, CavityParams};

/// Largest simulation step, s.
pub const MAX_STEP: f64 = 10e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceBranch {
    Lower,
    Upper,
    /// Only one steady state exists.
    Single,
}

impl TraceBranch {
    pub fn as_str(self) -> &'static str {
        match self {
            TraceBranch::Lower => "lower",
            TraceBranch::Upper => "upper",
            TraceBranch::Single => "single",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "lower" => Some(TraceBranch::Lower),
            "upper" => Some(TraceBranch::Upper),
            "single" => Some(TraceBranch::Single),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceSample {
    pub t: f64,
    pub p_in: f64,
    pub p_out: f64,
    pub branch: TraceBranch,
    pub coop: f64,
    pub n_eff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceMetadata {
    pub scenario: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub input_coupling: Option<f64>,
    #[serde(default)]
    pub detuning: Option<f64>,
    #[serde(default)]
    pub detector_applied: bool,
}

impl TraceMetadata {
    pub fn new(scenario: impl Into<String>) -> Self {
        TraceMetadata {
            scenario: scenario.into(),
            seed: 0,
            input_coupling: None,
            detuning: None,
            detector_applied: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransmissionTrace {
    pub samples: Vec<TraceSample>,
    /// Largest probe power of the run, W.
    pub p_in: f64,
    pub metadata: TraceMetadata,
}

impl TransmissionTrace {
    /// Checks strictly increasing time and finite values.
    pub fn validate(&self) -> Result<()> {
        for (i, w) in self.samples.windows(2).enumerate() {
            if !(w[1].t > w[0].t) {
                return Err(Error::DegenerateDataset(format!("time not strictly increasing at sample {}", i + 1)));
            }
        }
        if self.samples.iter().any(|s| !s.p_out.is_finite() || !(s.p_in >= 0.0)) {
            return Err(Error::DegenerateDataset("non-finite power".into()));
        }
        Ok(())
    }
}

/// Probe power versus time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ProbeSchedule {
    Constant { power: f64 },
    /// Linear interpolation between (t, P) knots, held beyond the ends.
    Piecewise { points: Vec<(f64, f64)> },
}

impl ProbeSchedule {
    pub fn validate(&self) -> Result<()> {
        match self {
            ProbeSchedule::Constant { power } => require_non_negative("probe.power", *power),
            ProbeSchedule::Piecewise { points } => {
                if points.is_empty() {
                    return Err(Error::invalid("probe.points", "needs at least one point"));
                }
                for p in points {
                    require_non_negative("probe.points power", p.1)?;
                    if !p.0.is_finite() {
                        return Err(Error::invalid("probe.points time", "must be finite"));
                    }
                }
                if points.windows(2).any(|w| !(w[1].0 > w[0].0)) {
                    return Err(Error::invalid("probe.points", "times must be strictly increasing"));
                }
                Ok(())
            }
        }
    }

    pub fn at(&self, t: f64) -> f64 {
        match self {
            ProbeSchedule::Constant { power } => *power,
            ProbeSchedule::Piecewise { points } => {
                let i = points.partition_point(|p| p.0 <= t);
                if i == 0 {
                    points[0].1
                } else if i == points.len() {
                    points[i - 1].1
                } else {
                    let (a, b) = (points[i - 1], points[i]);
                    a.1 + (b.1 - a.1) * (t - a.0) / (b.0 - a.0)
                }
            }
        }
    }

    pub fn peak(&self) -> f64 {
        match self {
            ProbeSchedule::Constant { power } => *power,
            ProbeSchedule::Piecewise { points } => points.iter().map(|p| p.1).fold(0.0, f64::max),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransmissionModel {
    /// Steady-state absorptive bistability with branch memory.
    #[default]
    Bistable,
    /// Linear (weak-probe) response with collective coupling g0²·n_eff.
    WeakField,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransitSettings {
    pub t_start: f64,
    pub t_end: f64,
    pub dt: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub model: TransmissionModel,
}

impl TransitSettings {
    pub fn validate(&self) -> Result<()> {
        require_positive("dt", self.dt)?;
        if self.dt > MAX_STEP {
            return Err(Error::invalid("dt", format!("must be <= {MAX_STEP:e} s, got {}", self.dt)));
        }
        if !(self.t_end > self.t_start) || !self.t_start.is_finite() || !self.t_end.is_finite() {
            return Err(Error::invalid("t_end", "must be finite and after t_start"));
        }
        Ok(())
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        let n = ((self.t_end - self.t_start) / self.dt).round() as usize;
        (0..=n).map(move |i| self.t_start + i as f64 * self.dt)
    }
}

/// Normalized transmission |κ(Γ/2 + iΔa)|² / |(κ + iΔc)(Γ/2 + iΔa) + g²|²,
/// equal to 1 for an empty resonant cavity. Valid for weak drive.
pub fn jc_transmission(g: f64, delta_c: f64, delta_a: f64, cavity: &CavityParams, atom: &AtomParams) -> f64 {
    let kappa = Complex64::new(cavity.kappa, 0.0);
    let atomic = Complex64::new(atom.gamma / 2.0, delta_a);
    let num = kappa * atomic;
    let den = Complex64::new(cavity.kappa, delta_c) * atomic + g * g;
    num.norm_sqr() / den.norm_sqr()
}

/// Runs the forward model for an arbitrary effective-atom-number history.
pub fn simulate_with_coupling<F>(
    mut n_eff_at: F,
    probe: &ProbeSchedule,
    cavity: &CavityParams,
    atom: &AtomParams,
    detector: &DetectorModel,
    settings: &TransitSettings,
    scenario: &str,
) -> Result<TransmissionTrace>
where
    F: FnMut(f64) -> f64,
{
    probe.validate()?;
    settings.validate()?;
    detector.validate()?;
    let c1 = derive_quantities(atom, cavity)?.c1;
    let d = cavity.normalized_detuning();
    let cal = Calibration::new(cavity, atom, detector.input_coupling)?;
    let solver = Bistability::new(d)?;
    let empty = 1.0 + d * d;
    let mut follower = BranchFollower::with_state(solver, cal.drive(probe.at(settings.t_start)) / empty);

    let mut samples = Vec::new();
    for t in settings.times() {
        let n_eff = n_eff_at(t);
        let coop = n_eff * c1;
        let p_in = probe.at(t);
        let y = cal.drive(p_in);
        let (x, branch) = match settings.model {
            TransmissionModel::Bistable => {
                let (point, _) = follower.update(y, coop);
                let branch = match solver.turning_points(coop) {
                    Some(tp) if y > tp.down.y && y < tp.up.y => {
                        if point.x <= tp.up.x {
                            TraceBranch::Lower
                        } else {
                            TraceBranch::Upper
                        }
                    }
                    _ => TraceBranch::Single,
                };
                (point.x, branch)
            }
            TransmissionModel::WeakField => {
                let g = cavity.g0 * n_eff.sqrt();
                (y * jc_transmission(g, cavity.delta_c, 0.0, cavity, atom), TraceBranch::Single)
            }
        };
        samples.push(TraceSample {
            t,
            p_in,
            p_out: cal.output_power(x),
            branch,
            coop,
            n_eff,
        });
    }
    let mut trace = TransmissionTrace {
        samples,
        p_in: probe.peak(),
        metadata: TraceMetadata {
            scenario: scenario.to_string(),
            seed: settings.seed,
            input_coupling: Some(detector.input_coupling),
            detuning: Some(d),
            detector_applied: false,
        },
    };
    if detector.bandwidth.is_some() || detector.noise_floor > 0.0 {
        trace = apply_detector(&trace, detector, settings.seed)?;
    }
    Ok(trace)
}

/// Transmission trace for a cloud transit under probe schedule `probe`.
pub fn simulate_transit(
    cloud: &CloudModel,
    probe: &ProbeSchedule,
    cavity: &CavityParams,
    atom: &AtomParams,
    detector: &DetectorModel,
    settings: &TransitSettings,
    scenario: &str,
) -> Result<TransmissionTrace> {
    cloud.validate()?;
    match cloud.mode {
        CloudMode::Ensemble => {
            let peak = cloud.n_atoms * overlap_fraction(cloud, cavity)?;
            simulate_with_coupling(|t| peak * cloud.time_profile(t), probe, cavity, atom, detector, settings, scenario)
        }
        CloudMode::Discrete => {
            let atoms = sample_atoms(cloud, cavity, settings.seed)?;
            let v = cloud.v_transit;
            simulate_with_coupling(
                |t| discrete_n_eff(&atoms, t, v, cavity),
                probe,
                cavity,
                atom,
                detector,
                settings,
                scenario,
            )
        }
    }
}

/// Start and end of the first interval where the output drops below
/// `fall * baseline` and comes back above `rise * baseline`. The baseline is
/// the first sample. Times are interpolated linearly between samples.
pub fn switch_window(trace: &TransmissionTrace, fall: f64, rise: f64) -> Option<(f64, f64)> {
    let s = &trace.samples;
    let baseline = s.first()?.p_out;
    let (lo, hi) = (fall * baseline, rise * baseline);
    let cross = |i: usize, level: f64| {
        let (a, b) = (s[i - 1], s[i]);
        a.t + (level - a.p_out) / (b.p_out - a.p_out) * (b.t - a.t)
    };
    let i = (1..s.len()).find(|&i| s[i].p_out < lo)?;
    let j = (i + 1..s.len()).find(|&j| s[j].p_out > hi)?;
    Some((cross(i, lo), cross(j, hi)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bistability::input_for_output;
    use crate::presets;

    fn paper() -> (CavityParams, AtomParams) {
        (presets::paper_cavity(), presets::rb87_atom())
    }

    fn ideal(eps: f64) -> DetectorModel {
        DetectorModel { bandwidth: None, noise_floor: 0.0, input_coupling: eps }
    }

    fn settings(t_start: f64, t_end: f64, dt: f64) -> TransitSettings {
        TransitSettings { t_start, t_end, dt, seed: 1, model: TransmissionModel::Bistable }
    }

    #[test]
    fn jc_landmarks() {
        let (cavity, atom) = paper();
        assert_eq!(jc_transmission(0.0, 0.0, 0.0, &cavity, &atom), 1.0);
        let c1 = derive_quantities(&atom, &cavity).unwrap().c1;
        let t = jc_transmission(cavity.g0, 0.0, 0.0, &cavity, &atom);
        assert!((t / (1.0 + 2.0 * c1).powi(-2) - 1.0).abs() < 1e-12);
        assert!((t - 9.565e-5).abs() < 1e-8);
    }

    #[test]
    fn vacuum_rabi_peaks() {
        let (cavity, atom) = paper();
        let scan = |delta: f64| jc_transmission(cavity.g0, delta, delta, &cavity, &atom);
        let peak = crate::numeric::golden_min(|d| -scan(d), 0.5 * cavity.g0, 1.5 * cavity.g0, 1e-3);
        assert!((peak / cavity.g0 - 1.0).abs() < 0.01, "{}", peak / cavity.g0);
        let neg = crate::numeric::golden_min(|d| -scan(d), -1.5 * cavity.g0, -0.5 * cavity.g0, 1e-3);
        assert!((neg / cavity.g0 + 1.0).abs() < 0.01);
    }

    #[test]
    fn empty_cavity_is_flat() {
        let (cavity, atom) = paper();
        let cloud = CloudModel {
            n_atoms: 0.0,
            t_center: 0.0,
            sigma_t: 1e-3,
            sigma_r: 10e-6,
            v_transit: 0.5,
            mode: CloudMode::Ensemble,
        };
        let probe = ProbeSchedule::Constant { power: 5e-12 };
        let trace =
            simulate_transit(&cloud, &probe, &cavity, &atom, &ideal(2.0), &settings(-1e-3, 1e-3, 1e-5), "t").unwrap();
        let d = cavity.normalized_detuning();
        let expected = 2.0 * 5e-12 / (1.0 + d * d);
        for s in &trace.samples {
            assert!((s.p_out / expected - 1.0).abs() < 1e-12);
            assert_eq!(s.branch, TraceBranch::Single);
        }
    }

    #[test]
    fn static_ramp_lies_on_s_curve() {
        let (cavity, atom) = paper();
        let c1 = derive_quantities(&atom, &cavity).unwrap().c1;
        let cal = Calibration::new(&cavity, &atom, 2.0).unwrap();
        let top = cal.input_power(1e5);
        let probe = ProbeSchedule::Piecewise { points: vec![(0.0, 0.0), (1e-3, top), (2e-3, 0.0)] };
        let trace = simulate_with_coupling(|_| 200.0 / c1, &probe, &cavity, &atom, &ideal(2.0), &settings(0.0, 2e-3, 1e-6), "r")
            .unwrap();
        let d = cavity.normalized_detuning();
        for s in trace.samples.iter().filter(|s| s.p_in > 0.0) {
            let x = cal.output_drive(s.p_out);
            let y = input_for_output(x, 200.0, d).unwrap();
            assert!((y / cal.drive(s.p_in) - 1.0).abs() < 1e-6);
        }
        assert!(trace.samples.iter().any(|s| s.branch == TraceBranch::Lower));
        assert!(trace.samples.iter().any(|s| s.branch == TraceBranch::Upper));
    }

    #[test]
    fn weak_field_matches_linear_response() {
        let (cavity, atom) = paper();
        let c1 = derive_quantities(&atom, &cavity).unwrap().c1;
        let cal = Calibration::new(&cavity, &atom, 2.0).unwrap();
        let probe = ProbeSchedule::Constant { power: cal.input_power(1e-7) };
        let d = cavity.normalized_detuning();
        for n in [0.0, 1.0, 3.0] {
            let trace = simulate_with_coupling(|_| n, &probe, &cavity, &atom, &ideal(2.0), &settings(0.0, 1e-5, 1e-5), "w")
                .unwrap();
            let ratio = trace.samples[0].p_out / (cal.output_power(cal.drive(probe.peak())) / (1.0 + d * d));
            let c = n * c1;
            let expected = (1.0 + d * d) / ((1.0 + 2.0 * c).powi(2) + d * d);
            assert!((ratio / expected - 1.0).abs() < 1e-4);
            let jc = jc_transmission(cavity.g0 * n.sqrt(), cavity.delta_c, 0.0, &cavity, &atom)
                / jc_transmission(0.0, cavity.delta_c, 0.0, &cavity, &atom);
            assert!((ratio / jc - 1.0).abs() < 1e-4);
        }
    }

    #[test]
    fn probe_schedule_interpolates() {
        let p = ProbeSchedule::Piecewise { points: vec![(0.0, 0.0), (1.0, 2.0)] };
        assert_eq!(p.at(-1.0), 0.0);
        assert_eq!(p.at(0.5), 1.0);
        assert_eq!(p.at(3.0), 2.0);
        assert!(ProbeSchedule::Piecewise { points: vec![(0.0, 0.0), (0.0, 1.0)] }.validate().is_err());
        assert!(ProbeSchedule::Constant { power: -1.0 }.validate().is_err());
    }

    #[test]
    fn coarse_step_rejected() {
        let (cavity, atom) = paper();
        let probe = ProbeSchedule::Constant { power: 1e-12 };
        let err = simulate_with_coupling(|_| 0.0, &probe, &cavity, &atom, &ideal(2.0), &settings(0.0, 1e-3, 2e-5), "c");
        assert!(err.is_err());
    }
}
