//! Replays every check against a published number on the built-in preset.

use anyhow::Result;
use cqed::beams::{dipole_depth, lattice_depth, waist_at, DipoleModel};
use cqed::bistability::{turning_points, Bistability};
use cqed::estimator::{extract_timeline, fit_cloud, SwitchDetector};
use cqed::numeric::golden_min;
use cqed::params::{derive_quantities, validate_consistency};
use cqed::presets::{self, depths};
use cqed::transit::{jc_transmission, simulate_transit, switch_window, Calibration, DetectorModel, ProbeSchedule};
use cqed::transport::{free_fall_time, plan_pass_through, MotionLimits};

#[derive(Debug, Clone)]
pub struct Check {
    pub id: &'static str,
    pub name: String,
    pub value: String,
    pub expected: String,
    pub pass: bool,
}

fn check(id: &'static str, name: impl Into<String>, value: String, expected: String, pass: bool) -> Check {
    Check { id, name: name.into(), value, expected, pass }
}

fn within(value: f64, target: f64, rel: f64) -> bool {
    (value / target - 1.0).abs() <= rel
}

pub fn run_checks() -> Result<Vec<Check>> {
    let (atom, cavity) = (presets::rb87_atom(), presets::paper_cavity());
    let derived = derive_quantities(&atom, &cavity)?;
    let mut out = Vec::new();

    // derived constants
    let report = validate_consistency(&atom, &cavity, &derived, &presets::paper_reference_values());
    for r in &report.rows {
        out.push(check(
            "1",
            format!("{} vs published", r.quantity.name()),
            format!("{:.4e}", r.computed),
            format!("{:.3e} +-{:.0}%", r.published, r.rel_tol * 100.0),
            r.pass,
        ));
    }

    // beam divergence over the MOT height
    for (name, beam, lo, hi) in [
        ("diode guide waist at MOT", presets::diode_guide(), 126e-6, 132e-6),
        ("Ti:Sapphire waist at MOT", presets::ti_sapphire_guide(), 183e-6, 189e-6),
    ] {
        let w = waist_at(&beam, presets::MOT_HEIGHT);
        out.push(check("2", name, format!("{:.2} um", w * 1e6), format!("[{:.0}, {:.0}] um", lo * 1e6, hi * 1e6), (lo..=hi).contains(&w)));
    }

    // trap depth ratios and absolute depths
    let model = DipoleModel::default();
    let guide = presets::diode_guide();
    let g0 = dipole_depth(&guide, 0.0, &atom, &model)?;
    let g1 = dipole_depth(&guide, presets::MOT_HEIGHT, &atom, &model)?;
    let lat = presets::lattice();
    let l0 = lattice_depth(&lat, 0.0, &atom, &model)?;
    let l1 = lattice_depth(&lat, presets::MOT_HEIGHT, &atom, &model)?;
    let ti = dipole_depth(&presets::ti_sapphire_guide(), 0.0, &atom, &model)?;
    for (name, ratio, target) in [
        ("guide depth ratio cavity/MOT", g0 / g1, depths::GUIDE_AT_CAVITY / depths::GUIDE_AT_MOT),
        ("lattice depth ratio cavity/MOT", l0 / l1, depths::LATTICE_AT_CAVITY / depths::LATTICE_AT_MOT),
    ] {
        out.push(check("3", name, format!("{ratio:.2}"), format!("{target:.2} +-10%"), within(ratio, target, 0.10)));
    }
    for (name, depth, published) in [
        ("guide depth at cavity", g0, depths::GUIDE_AT_CAVITY),
        ("guide depth at MOT", g1, depths::GUIDE_AT_MOT),
        ("Ti:Sapphire guide depth at cavity", ti, depths::TI_SAPPHIRE_GUIDE_AT_CAVITY),
        ("lattice depth at cavity", l0, depths::LATTICE_AT_CAVITY),
        ("lattice depth at MOT", l1, depths::LATTICE_AT_MOT),
    ] {
        let r = depth / published;
        out.push(check(
            "3",
            name,
            format!("{:.1} uK", depth * 1e6),
            format!("{:.0} uK within x2", published * 1e6),
            (0.5..=2.0).contains(&r),
        ));
    }

    // bistability threshold and hysteresis width
    let c_star = Bistability::new(0.0)?.threshold();
    out.push(check("4", "bistability threshold at d = 0", format!("{c_star:.3}"), "[13, 17]".into(), (13.0..=17.0).contains(&c_star)));
    let d = cavity.normalized_detuning();
    let ratio = turning_points(presets::SWEEP_COOPERATIVITY, d)?.map_or(1.0, |t| t.input_ratio());
    out.push(check("5", "switching input ratio at C = 200", format!("{ratio:.3}"), "[7, 13]".into(), (7.0..=13.0).contains(&ratio)));

    // weak-field landmarks
    let t = jc_transmission(cavity.g0, 0.0, 0.0, &cavity, &atom);
    let closed = (1.0 + 2.0 * derived.c1).powi(-2);
    out.push(check(
        "7",
        "resonant single-atom transmission",
        format!("{t:.4e}"),
        "(1+2 C1)^-2 exactly, 9.66e-5 +-2%".into(),
        within(t, closed, 1e-12) && within(t, 9.66e-5, 0.02),
    ));
    let scan = |delta: f64| -jc_transmission(cavity.g0, delta, delta, &cavity, &atom);
    let peak = golden_min(scan, 0.5 * cavity.g0, 1.5 * cavity.g0, 1e-3);
    out.push(check("7", "normal-mode peak position / g0", format!("{:.4}", peak / cavity.g0), "1 +-1%".into(), within(peak, cavity.g0, 0.01)));

    // transit windows at the four probe powers
    let detector = presets::heterodyne_detector();
    let cloud = presets::sweep_cloud();
    let settings = presets::transit_settings(&cloud, 0);
    let mut durations = Vec::new();
    for &p in &presets::TRANSIT_PROBE_POWERS {
        let trace = simulate_transit(&cloud, &ProbeSchedule::Constant { power: p }, &cavity, &atom, &detector, &settings, "selftest")?;
        let sd = SwitchDetector::default();
        durations.push(switch_window(&trace, sd.fall, sd.rise).map(|(a, b)| b - a));
    }
    let all: Option<Vec<f64>> = durations.iter().copied().collect();
    let decreasing = all.as_ref().is_some_and(|v| v.windows(2).all(|w| w[1] < w[0]));
    let shown = durations.iter().map(|d| d.map_or("-".into(), |d| format!("{:.2}", d * 1e3))).collect::<Vec<_>>().join(", ");
    out.push(check("8", "switch windows at 2/6.4/20/30 pW", format!("{shown} ms"), "strictly decreasing".into(), decreasing));

    // estimator round trip on the densest cloud
    let ideal = DetectorModel { bandwidth: None, ..detector };
    let peak_cloud = presets::peak_cloud();
    let settings = presets::transit_settings(&peak_cloud, 0);
    let traces = presets::TIMELINE_PROBE_POWERS
        .iter()
        .map(|&p| simulate_transit(&peak_cloud, &ProbeSchedule::Constant { power: p }, &cavity, &atom, &ideal, &settings, "selftest"))
        .collect::<cqed::Result<Vec<_>>>()?;
    let cal = Calibration::new(&cavity, &atom, detector.input_coupling)?;
    let timeline = extract_timeline(&traces, d, &cal, &SwitchDetector::default())?;
    match fit_cloud(&timeline.timeline, derived.c1, derived.mode_volume) {
        Ok(fit) => {
            out.push(check("9", "recovered peak cooperativity", format!("{:.1}", fit.peak_coop), "5400 +-5%".into(), within(fit.peak_coop, 5400.0, 0.05)));
            out.push(check("9", "implied peak atom number", format!("{:.1}", fit.n_peak), "[100, 112]".into(), (100.0..=112.0).contains(&fit.n_peak)));
            out.push(check(
                "9",
                "recovered FWHM",
                format!("{:.3} ms", fit.fwhm * 1e3),
                format!("{:.3} ms +-10%", peak_cloud.fwhm() * 1e3),
                within(fit.fwhm, peak_cloud.fwhm(), 0.10),
            ));
        }
        Err(e) => out.push(check("9", "cloud fit", e.to_string(), "converges".into(), false)),
    }

    // transport timing
    let g = cqed::constants::STANDARD_GRAVITY;
    let fall = free_fall_time(presets::MOT_HEIGHT, g)?;
    out.push(check("10", "free-fall arrival", format!("{:.2} ms", fall * 1e3), "55 +-1 ms".into(), (fall - presets::FREE_FALL_DIP).abs() <= 1e-3));
    // constant acceleration, the speed cap never binds over 1.5 cm
    let fast = plan_pass_through(
        presets::MOT_HEIGHT,
        &MotionLimits { v_max: 1e3, a_max: presets::ACCELERATED_ATOM_ACCELERATION },
    )?;
    let arrival = fast.level_crossings(0.0).first().copied().unwrap_or(f64::NAN);
    let implied = presets::FREE_FALL_DIP - presets::ACCELERATED_LEAD;
    out.push(check("10", "30 m/s^2 pass-through arrival", format!("{:.2} ms", arrival * 1e3), format!("{:.0} ms +-15%", implied * 1e3), within(arrival, implied, 0.15)));
    let limits = presets::lattice_limits();
    let plan = cqed::transport::round_trip_plan(presets::MOT_HEIGHT, &limits, 20e-3)?;
    let (v, a) = plan.peak_speed_and_accel();
    let end = plan.end_state();
    out.push(check(
        "10",
        "lattice round trip",
        format!("v {v:.3} m/s, a {a:.3} m/s^2, net {:.1e} m", end.z - presets::MOT_HEIGHT),
        "v <= 0.30, a <= 1.5 g, |net| < 1e-12 m".into(),
        v <= limits.v_max && a <= limits.a_max && (end.z - presets::MOT_HEIGHT).abs() < 1e-12,
    ));
    Ok(out)
}

pub fn print_table(checks: &[Check]) {
    println!("{:<4} {:<36} {:<44} {:<36} {}", "#", "check", "value", "expected", "result");
    for c in checks {
        println!(
            "{:<4} {:<36} {:<44} {:<36} {}",
            c.id,
            c.name,
            c.value,
            c.expected,
            if c.pass { "PASS" } else { "FAIL" }
        );
    }
    let failed = checks.iter().filter(|c| !c.pass).count();
    println!("{} checks, {} passed, {} failed", checks.len(), checks.len() - failed, failed);
}
