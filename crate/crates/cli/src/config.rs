//! Scenario files.
//!
//! A scenario names either the built-in preset or explicit `[atom]` and
//! `[cavity]` tables, never both. Every other table is optional and falls
//! back to the preset values field by field.

use std::path::{Path, PathBuf};

use cqed::beams::{DetuningWeighting, DipoleModel, GaussianBeam, LatticeConfig};
use cqed::constants::STANDARD_GRAVITY;
use cqed::estimator::SwitchDetector;
use cqed::params::{AtomParams, CavityParams};
use cqed::presets;
use cqed::transit::{
    calibrate_input_coupling, CloudMode, CloudModel, DetectorModel, ProbeSchedule, TransmissionModel, FWHM_PER_SIGMA,
};
use cqed::transport::{free_fall_time, MotionLimits, Segment};
use serde::{Deserialize, Serialize};

use crate::units::{Acceleration, AngularRate, Frequency, Intensity, Length, Power, Time, Velocity};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error("{path}{}: invalid `{field}`: {reason}", line.map(|l| format!(":{l}")).unwrap_or_default())]
    Invalid { path: String, line: Option<usize>, field: String, reason: String },
    #[error("{0}")]
    Conflict(String),
}

// ---------------------------------------------------------------- raw file

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    name: Option<String>,
    preset: Option<String>,
    seed: Option<u64>,
    atom: Option<RawAtom>,
    cavity: Option<RawCavity>,
    dipole: Option<RawDipole>,
    #[serde(default)]
    beams: Vec<RawBeam>,
    lattice: Option<RawLattice>,
    cloud: Option<RawCloud>,
    transport: Option<RawTransport>,
    probe: Option<RawProbe>,
    detector: Option<RawDetector>,
    transit: Option<RawTransit>,
    bistability: Option<RawBistability>,
    estimate: Option<RawEstimate>,
    output: Option<RawOutput>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAtom {
    gamma: AngularRate,
    lambda_atom: Length,
    lambda_d1: Option<Length>,
    i_sat: Intensity,
    /// kg
    mass: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCavity {
    g0: AngularRate,
    kappa: AngularRate,
    length: Length,
    mirror_radius: Length,
    lambda_cav: Length,
    delta_c: AngularRate,
    mirror_transmission: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDipole {
    weighting: Option<DetuningWeighting>,
    calibration: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBeam {
    name: String,
    power: Power,
    waist: Length,
    wavelength: Length,
    #[serde(default)]
    focus_z: Length,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLatticeBeam {
    power: Option<Power>,
    waist: Option<Length>,
    wavelength: Option<Length>,
    focus_z: Option<Length>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLattice {
    beam_down: Option<RawLatticeBeam>,
    beam_up: Option<RawLatticeBeam>,
    trap_lifetime: Option<Time>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCloud {
    peak_coop: Option<f64>,
    n_atoms: Option<f64>,
    t_center: Option<Time>,
    fwhm: Option<Time>,
    sigma_t: Option<Time>,
    sigma_r: Option<Length>,
    v_transit: Option<Velocity>,
    mode: Option<CloudMode>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanKind {
    /// Down to the cavity, hold, and back up.
    RoundTrip,
    /// Down to the cavity and hold.
    Trapezoid,
    /// Accelerate through the cavity without braking.
    PassThrough,
    /// Segments listed in the file.
    Explicit,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSegment {
    duration: Time,
    accel: Acceleration,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTransport {
    kind: Option<PlanKind>,
    distance: Option<Length>,
    v_max: Option<Velocity>,
    a_max: Option<Acceleration>,
    hold: Option<Time>,
    first_crossing: Option<Time>,
    dt: Option<Time>,
    wavelength: Option<Length>,
    gravity: Option<Acceleration>,
    segments: Option<Vec<RawSegment>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProbe {
    powers: Option<Vec<Power>>,
    schedule: Option<Vec<(Time, Power)>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDetector {
    bandwidth: Option<Frequency>,
    #[serde(default)]
    ideal: bool,
    noise_floor: Option<Power>,
    input_coupling: Option<f64>,
    one_photon_power: Option<Power>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTransit {
    dt: Option<Time>,
    t_start: Option<Time>,
    t_end: Option<Time>,
    model: Option<TransmissionModel>,
    fall: Option<f64>,
    rise: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBistability {
    coop: Option<f64>,
    d: Option<f64>,
    y_max: Option<f64>,
    points: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEstimate {
    #[serde(default)]
    inputs: Vec<PathBuf>,
    fall: Option<f64>,
    rise: Option<f64>,
    baseline_samples: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    dir: Option<PathBuf>,
}

// ----------------------------------------------------------- resolved form

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NamedBeam {
    pub name: String,
    pub beam: GaussianBeam,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransportSpec {
    pub kind: PlanKind,
    /// Height of the MOT above the cavity, m.
    pub distance: f64,
    pub limits: MotionLimits,
    pub hold: f64,
    /// Time at which the plan first reaches the cavity, s.
    pub first_crossing: Option<f64>,
    pub dt: f64,
    pub wavelength: f64,
    pub gravity: f64,
    pub segments: Vec<Segment>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransitSpec {
    pub dt: f64,
    pub t_start: f64,
    pub t_end: f64,
    pub model: TransmissionModel,
    /// Thresholds for the reported switch windows.
    pub window: SwitchDetector,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BistabilitySpec {
    pub coop: f64,
    pub d: f64,
    pub y_max: Option<f64>,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateSpec {
    pub inputs: Vec<PathBuf>,
    pub switch: SwitchDetector,
}

/// Fully resolved scenario. Its JSON form is what the config hash covers;
/// the output directory is deliberately left out so that the same run in
/// two places produces identical files.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scenario {
    pub name: String,
    pub preset: Option<String>,
    pub seed: u64,
    pub atom: AtomParams,
    pub cavity: CavityParams,
    pub dipole: DipoleModel,
    pub beams: Vec<NamedBeam>,
    pub lattice: LatticeConfig,
    pub cloud: CloudModel,
    pub transport: TransportSpec,
    pub probes: Vec<ProbeSchedule>,
    pub detector: DetectorModel,
    pub transit: TransitSpec,
    pub bistability: BistabilitySpec,
    pub estimate: EstimateSpec,
}

/// Settings from the command line that take part in resolution.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub preset: Option<String>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone)]
pub struct Loaded {
    pub scenario: Scenario,
    /// Output directory requested by the file, if any.
    pub output_dir: Option<PathBuf>,
}

pub fn load(path: Option<&Path>, overrides: &Overrides) -> Result<Loaded, ConfigError> {
    match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|source| ConfigError::Io { path: p.to_path_buf(), source })?;
            let mut loaded = parse(&text, &p.display().to_string(), overrides)?;
            // relative trace inputs are relative to the scenario file
            let base = p.parent().unwrap_or(Path::new(""));
            for input in &mut loaded.scenario.estimate.inputs {
                if input.is_relative() {
                    *input = base.join(&*input);
                }
            }
            if let Some(dir) = &mut loaded.output_dir {
                if dir.is_relative() {
                    *dir = base.join(&*dir);
                }
            }
            if loaded.scenario.name.is_empty() {
                loaded.scenario.name = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            }
            Ok(loaded)
        }
        None => {
            let preset = overrides.preset.clone().ok_or_else(|| {
                ConfigError::Conflict("no scenario given: pass --config PATH or --preset paper-2003".into())
            })?;
            resolve(RawScenario { preset: Some(preset), ..Default::default() }, "<preset>", "", overrides)
        }
    }
}

/// Parses scenario text. `origin` labels diagnostics.
pub fn parse(text: &str, origin: &str, overrides: &Overrides) -> Result<Loaded, ConfigError> {
    let raw: RawScenario = toml::from_str(text).map_err(|e| ConfigError::Parse {
        path: origin.to_string(),
        message: e.to_string().trim_end().to_string(),
    })?;
    resolve(raw, origin, text, overrides)
}

/// Line of `field` ("table.key") in the source, for diagnostics.
pub fn locate(source: &str, field: &str) -> Option<usize> {
    let (table, key) = match field.rsplit_once('.') {
        Some((t, k)) => (Some(t), k),
        None => (None, field),
    };
    let mut current: Option<String> = None;
    for (i, line) in source.lines().enumerate() {
        let l = line.trim();
        if l.starts_with('[') {
            current = Some(l.trim_matches(|c| c == '[' || c == ']').trim().to_string());
            continue;
        }
        let in_table = match (table, current.as_deref()) {
            (None, None) => true,
            (Some(t), Some(c)) => c == t,
            _ => false,
        };
        if !in_table {
            continue;
        }
        if let Some(rest) = l.strip_prefix(key) {
            if rest.trim_start().starts_with('=') {
                return Some(i + 1);
            }
        }
    }
    table.and_then(|t| {
        source
            .lines()
            .position(|l| l.trim().trim_matches(|c| c == '[' || c == ']').trim() == t)
            .map(|i| i + 1)
    })
}

fn resolve(raw: RawScenario, origin: &str, source: &str, overrides: &Overrides) -> Result<Loaded, ConfigError> {
    let invalid = |field: &str, reason: String| ConfigError::Invalid {
        path: origin.to_string(),
        line: locate(source, field),
        field: field.to_string(),
        reason,
    };

    let explicit = raw.atom.is_some() || raw.cavity.is_some();
    let preset = match (&raw.preset, &overrides.preset) {
        (Some(a), Some(b)) if a != b => {
            return Err(ConfigError::Conflict(format!("{origin}: preset {a:?} in file but --preset {b:?} given")))
        }
        (a, b) => a.clone().or_else(|| b.clone()),
    };
    if explicit && preset.is_some() {
        return Err(ConfigError::Conflict(format!(
            "{origin}: give either a preset or explicit [atom] and [cavity] tables, not both"
        )));
    }
    if let Some(p) = &preset {
        if p != presets::PRESET_NAME {
            return Err(invalid("preset", format!("unknown preset {p:?}; available: {}", presets::PRESET_NAME)));
        }
    }
    let (atom, cavity) = match (raw.atom, raw.cavity) {
        (Some(a), Some(c)) => (
            AtomParams {
                gamma: a.gamma.si(),
                lambda_atom: a.lambda_atom.si(),
                lambda_d1: a.lambda_d1.map_or(presets::rb87_atom().lambda_d1, Length::si),
                i_sat: a.i_sat.si(),
                mass: a.mass,
            },
            CavityParams {
                g0: c.g0.si(),
                kappa: c.kappa.si(),
                length: c.length.si(),
                mirror_radius: c.mirror_radius.si(),
                lambda_cav: c.lambda_cav.si(),
                delta_c: c.delta_c.si(),
                mirror_transmission: c.mirror_transmission,
            },
        ),
        (None, None) if preset.is_some() => (presets::rb87_atom(), presets::paper_cavity()),
        (None, None) => {
            return Err(ConfigError::Conflict(format!(
                "{origin}: no parameters: set `preset = \"{}\"` or give [atom] and [cavity]",
                presets::PRESET_NAME
            )))
        }
        (Some(_), None) => return Err(invalid("cavity", "explicit [atom] needs an explicit [cavity] too".into())),
        (None, Some(_)) => return Err(invalid("atom", "explicit [cavity] needs an explicit [atom] too".into())),
    };
    let check = |field: &str, r: cqed::Result<()>| {
        r.map_err(|e| {
            let field = match &e {
                cqed::Error::InvalidParameter { name, .. } => name.to_string(),
                _ => field.to_string(),
            };
            invalid(&field, e.to_string())
        })
    };
    check("atom", atom.validate())?;
    check("cavity", cavity.validate())?;

    let dipole = {
        let d = DipoleModel::default();
        match raw.dipole {
            Some(r) => DipoleModel {
                weighting: r.weighting.unwrap_or(d.weighting),
                calibration: r.calibration.unwrap_or(d.calibration),
            },
            None => d,
        }
    };
    if !(dipole.calibration > 0.0 && dipole.calibration.is_finite()) {
        return Err(invalid("dipole.calibration", "must be finite and > 0".into()));
    }

    let beams = if raw.beams.is_empty() {
        vec![
            NamedBeam { name: "diode_guide".into(), beam: presets::diode_guide() },
            NamedBeam { name: "ti_sapphire_guide".into(), beam: presets::ti_sapphire_guide() },
        ]
    } else {
        raw.beams
            .into_iter()
            .map(|b| NamedBeam {
                name: b.name,
                beam: GaussianBeam {
                    power: b.power.si(),
                    waist: b.waist.si(),
                    wavelength: b.wavelength.si(),
                    focus_z: b.focus_z.si(),
                },
            })
            .collect()
    };
    for b in &beams {
        check("beams", b.beam.validate()).map_err(|e| match e {
            ConfigError::Invalid { path, line, reason, .. } => {
                ConfigError::Invalid { path, line, field: format!("beams[{}]", b.name), reason }
            }
            other => other,
        })?;
    }

    let lattice = {
        let mut l = presets::lattice();
        if let Some(r) = raw.lattice {
            let merge = |beam: &mut GaussianBeam, r: Option<RawLatticeBeam>| {
                if let Some(r) = r {
                    beam.power = r.power.map_or(beam.power, Power::si);
                    beam.waist = r.waist.map_or(beam.waist, Length::si);
                    beam.wavelength = r.wavelength.map_or(beam.wavelength, Length::si);
                    beam.focus_z = r.focus_z.map_or(beam.focus_z, Length::si);
                }
            };
            merge(&mut l.beam_down, r.beam_down);
            merge(&mut l.beam_up, r.beam_up);
            l.trap_lifetime = r.trap_lifetime.map_or(l.trap_lifetime, Time::si);
        }
        l
    };
    check("lattice", lattice.validate())?;

    let transport = {
        let r = raw.transport;
        let get = |f: &dyn Fn(&RawTransport) -> Option<f64>, default: f64| r.as_ref().and_then(f).unwrap_or(default);
        let limits = presets::lattice_limits();
        let segments: Vec<Segment> = r
            .as_ref()
            .and_then(|t| t.segments.as_ref())
            .map(|s| s.iter().map(|s| Segment { duration: s.duration.si(), accel: s.accel.si() }).collect())
            .unwrap_or_default();
        let kind = r.as_ref().and_then(|t| t.kind).unwrap_or(if segments.is_empty() {
            PlanKind::RoundTrip
        } else {
            PlanKind::Explicit
        });
        if (kind == PlanKind::Explicit) == segments.is_empty() {
            return Err(invalid("transport.segments", "segments are given exactly when kind = \"explicit\"".into()));
        }
        let first_crossing = match (r.as_ref().and_then(|t| t.first_crossing), kind) {
            (Some(t), _) => Some(t.si()),
            (None, PlanKind::RoundTrip | PlanKind::Trapezoid) => Some(presets::LATTICE_CROSSINGS[0]),
            (None, _) => None,
        };
        TransportSpec {
            kind,
            distance: get(&|t| t.distance.map(Length::si), presets::MOT_HEIGHT),
            limits: MotionLimits {
                v_max: get(&|t| t.v_max.map(Velocity::si), limits.v_max),
                a_max: get(&|t| t.a_max.map(Acceleration::si), limits.a_max),
            },
            hold: get(&|t| t.hold.map(Time::si), presets::LATTICE_CROSSINGS[1] - presets::LATTICE_CROSSINGS[0]),
            first_crossing,
            dt: get(&|t| t.dt.map(Time::si), 0.1e-3),
            wavelength: get(&|t| t.wavelength.map(Length::si), lattice.beam_down.wavelength),
            gravity: get(&|t| t.gravity.map(Acceleration::si), STANDARD_GRAVITY),
            segments,
        }
    };
    check("transport", transport.limits.validate())?;
    for (field, v) in [
        ("transport.distance", transport.distance),
        ("transport.hold", transport.hold),
    ] {
        if !(v >= 0.0 && v.is_finite()) {
            return Err(invalid(field, format!("must be finite and >= 0, got {v}")));
        }
    }
    for (field, v) in [
        ("transport.dt", transport.dt),
        ("transport.wavelength", transport.wavelength),
        ("transport.gravity", transport.gravity),
    ] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(invalid(field, format!("must be finite and > 0, got {v}")));
        }
    }

    let cloud = {
        let mut shape = presets::cloud_shape();
        // default arrival follows the configured drop height and gravity
        if let Ok(t) = free_fall_time(transport.distance, transport.gravity) {
            shape.t_center = t;
            shape.v_transit = transport.gravity * t;
        }
        let mut peak = Some(presets::SWEEP_COOPERATIVITY);
        if let Some(r) = &raw.cloud {
            if r.fwhm.is_some() && r.sigma_t.is_some() {
                return Err(invalid("cloud.fwhm", "give fwhm or sigma_t, not both".into()));
            }
            if r.peak_coop.is_some() && r.n_atoms.is_some() {
                return Err(invalid("cloud.peak_coop", "give peak_coop or n_atoms, not both".into()));
            }
            shape.t_center = r.t_center.map_or(shape.t_center, Time::si);
            shape.sigma_t = r.sigma_t.map(Time::si).or(r.fwhm.map(|f| f.si() / FWHM_PER_SIGMA)).unwrap_or(shape.sigma_t);
            shape.sigma_r = r.sigma_r.map_or(shape.sigma_r, Length::si);
            shape.v_transit = r.v_transit.map_or(shape.v_transit, Velocity::si);
            shape.mode = r.mode.unwrap_or(shape.mode);
            if let Some(n) = r.n_atoms {
                shape.n_atoms = n;
                peak = None;
            } else if let Some(c) = r.peak_coop {
                peak = Some(c);
            }
        }
        match peak {
            Some(c) => CloudModel::for_peak_cooperativity(c, shape, &cavity, &atom).map_err(|e| match &e {
                cqed::Error::InvalidParameter { name, .. } => invalid(name, e.to_string()),
                _ => invalid("cloud.peak_coop", e.to_string()),
            })?,
            None => shape,
        }
    };
    check("cloud", cloud.validate())?;

    let probes = match raw.probe {
        Some(RawProbe { powers: Some(_), schedule: Some(_) }) => {
            return Err(invalid("probe.powers", "give powers or schedule, not both".into()))
        }
        Some(RawProbe { schedule: Some(s), .. }) => {
            vec![ProbeSchedule::Piecewise { points: s.into_iter().map(|(t, p)| (t.si(), p.si())).collect() }]
        }
        Some(RawProbe { powers: Some(p), .. }) => {
            p.into_iter().map(|p| ProbeSchedule::Constant { power: p.si() }).collect()
        }
        _ => presets::TRANSIT_PROBE_POWERS.iter().map(|&p| ProbeSchedule::Constant { power: p }).collect(),
    };
    if probes.is_empty() {
        return Err(invalid("probe.powers", "needs at least one power".into()));
    }
    for p in &probes {
        check("probe", p.validate())?;
    }

    let detector = {
        let preset_det = presets::heterodyne_detector();
        match raw.detector {
            None => preset_det,
            Some(r) => {
                if r.ideal && r.bandwidth.is_some() {
                    return Err(invalid("detector.ideal", "an ideal detector has no bandwidth".into()));
                }
                if r.input_coupling.is_some() && r.one_photon_power.is_some() {
                    return Err(invalid(
                        "detector.input_coupling",
                        "give input_coupling or one_photon_power, not both".into(),
                    ));
                }
                let input_coupling = match (r.input_coupling, r.one_photon_power) {
                    (Some(e), _) => e,
                    (None, Some(p)) => calibrate_input_coupling(&cavity, p.si())
                        .map_err(|e| invalid("detector.one_photon_power", e.to_string()))?,
                    (None, None) => calibrate_input_coupling(&cavity, presets::ONE_PHOTON_PROBE_POWER)
                        .map_err(|e| invalid("detector", e.to_string()))?,
                };
                DetectorModel {
                    bandwidth: if r.ideal { None } else { Some(r.bandwidth.map_or(presets::DETECTION_BANDWIDTH, Frequency::si)) },
                    noise_floor: r.noise_floor.map_or(preset_det.noise_floor, Power::si),
                    input_coupling,
                }
            }
        }
    };
    check("detector", detector.validate())?;

    let transit = {
        let r = raw.transit;
        let default = presets::transit_settings(&cloud, 0);
        let d = SwitchDetector::default();
        let window = SwitchDetector {
            fall: r.as_ref().and_then(|t| t.fall).unwrap_or(d.fall),
            rise: r.as_ref().and_then(|t| t.rise).unwrap_or(d.rise),
            ..d
        };
        check("transit", window.validate())?;
        let spec = TransitSpec {
            dt: r.as_ref().and_then(|t| t.dt).map_or(default.dt, Time::si),
            t_start: r.as_ref().and_then(|t| t.t_start).map_or(default.t_start, Time::si),
            t_end: r.as_ref().and_then(|t| t.t_end).map_or(default.t_end, Time::si),
            model: r.as_ref().and_then(|t| t.model).unwrap_or_default(),
            window,
        };
        let settings = cqed::transit::TransitSettings {
            t_start: spec.t_start,
            t_end: spec.t_end,
            dt: spec.dt,
            seed: 0,
            model: spec.model,
        };
        check("transit", settings.validate()).map_err(|e| match e {
            ConfigError::Invalid { path, reason, field, .. } => {
                let field = format!("transit.{}", field.trim_start_matches("transit."));
                ConfigError::Invalid { path, line: locate(source, &field), field, reason }
            }
            other => other,
        })?;
        spec
    };

    let bistability = {
        let r = raw.bistability;
        let spec = BistabilitySpec {
            coop: r.as_ref().and_then(|b| b.coop).unwrap_or(presets::SWEEP_COOPERATIVITY),
            d: r.as_ref().and_then(|b| b.d).unwrap_or(cavity.normalized_detuning()),
            y_max: r.as_ref().and_then(|b| b.y_max),
            points: r.as_ref().and_then(|b| b.points).unwrap_or(400),
        };
        if !(spec.coop >= 0.0 && spec.coop.is_finite()) {
            return Err(invalid("bistability.coop", format!("must be finite and >= 0, got {}", spec.coop)));
        }
        if !spec.d.is_finite() {
            return Err(invalid("bistability.d", "must be finite".into()));
        }
        if spec.y_max.is_some_and(|y| !(y > 0.0 && y.is_finite())) {
            return Err(invalid("bistability.y_max", "must be finite and > 0".into()));
        }
        if spec.points < 2 {
            return Err(invalid("bistability.points", "must be >= 2".into()));
        }
        spec
    };

    let estimate = {
        let d = SwitchDetector::default();
        let (inputs, switch) = match raw.estimate {
            Some(r) => (
                r.inputs,
                SwitchDetector {
                    fall: r.fall.unwrap_or(d.fall),
                    rise: r.rise.unwrap_or(d.rise),
                    baseline_samples: r.baseline_samples.unwrap_or(d.baseline_samples),
                },
            ),
            None => (Vec::new(), d),
        };
        check("estimate", switch.validate())?;
        EstimateSpec { inputs, switch }
    };

    let scenario = Scenario {
        name: raw.name.or_else(|| preset.clone()).unwrap_or_default(),
        preset,
        seed: overrides.seed.or(raw.seed).unwrap_or(0),
        atom,
        cavity,
        dipole,
        beams,
        lattice,
        cloud,
        transport,
        probes,
        detector,
        transit,
        bistability,
        estimate,
    };
    Ok(Loaded { scenario, output_dir: raw.output.and_then(|o| o.dir) })
}
