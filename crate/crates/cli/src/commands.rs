//! Subcommand pipelines. Each returns whether its own checks passed; I/O and
//! model errors propagate.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use cqed::beams::{lattice_depth, trap_point, waist_at};
use cqed::bistability::{hysteresis_sweep, triangular_ramp, Bistability};
use cqed::estimator::{extract_timeline, fit_cloud, CloudFit};
use cqed::params::{coupling_cross_check, derive_quantities, validate_consistency, Quantity};
use cqed::presets;
use cqed::transit::{
    simulate_transit, switch_window, Calibration, ProbeSchedule, TraceBranch, TraceMetadata, TraceSample,
    TransitSettings, TransmissionTrace,
};
use cqed::transport::{
    free_fall_time, plan_pass_through, plan_trapezoid, round_trip_plan, sample_trajectory, survival_fraction,
    MotionPlan,
};
use serde::Serialize;

use crate::config::PlanKind;
use crate::output::{file_hash, num, RunContext};

fn calibration(ctx: &RunContext) -> Result<Calibration> {
    let s = &ctx.scenario;
    Ok(Calibration::new(&s.cavity, &s.atom, s.detector.input_coupling)?)
}

fn kv(k: &str, v: impl ToString) -> (String, String) {
    (k.to_string(), v.to_string())
}

// ------------------------------------------------------------------ params

pub fn params(ctx: &RunContext) -> Result<bool> {
    let s = &ctx.scenario;
    let derived = derive_quantities(&s.atom, &s.cavity)?;
    let refs = if s.preset.is_some() { presets::paper_reference_values() } else { Vec::new() };
    let report = validate_consistency(&s.atom, &s.cavity, &derived, &refs);
    let coupling = coupling_cross_check(&s.atom, &s.cavity, &derived);
    let cal = calibration(ctx)?;
    let d = s.cavity.normalized_detuning();
    let threshold_d = Bistability::new(d)?.threshold();
    let threshold_0 = Bistability::new(0.0)?.threshold();

    let units = |q: Quantity| match q {
        Quantity::Fsr => "Hz",
        Quantity::ModeWaist | Quantity::LengthStability => "m",
        Quantity::ModeVolume => "m^3",
        _ => "",
    };
    let all = [
        Quantity::C1,
        Quantity::M0,
        Quantity::N0,
        Quantity::Finesse,
        Quantity::Fsr,
        Quantity::ModeWaist,
        Quantity::ModeVolume,
        Quantity::LengthStability,
    ];
    let mut rows: Vec<Vec<String>> = all
        .iter()
        .map(|&q| {
            let row = report.row(q);
            vec![
                q.name().to_string(),
                num(q.of(&derived)),
                units(q).to_string(),
                row.map(|r| num(r.published)).unwrap_or_default(),
                row.map(|r| num(r.ratio)).unwrap_or_default(),
                row.map(|r| num(r.rel_tol)).unwrap_or_default(),
                row.map(|r| r.pass.to_string()).unwrap_or_default(),
            ]
        })
        .collect();
    let plain = |name: &str, v: f64, unit: &str| {
        vec![name.into(), num(v), unit.into(), String::new(), String::new(), String::new(), String::new()]
    };
    rows.push(plain("g0_two_level_model", coupling.g0_model, "rad/s"));
    rows.push(plain("g0_model_over_configured", coupling.ratio, ""));
    rows.push(plain("normalized_detuning", d, ""));
    rows.push(plain("bistability_threshold", threshold_d, ""));
    rows.push(plain("bistability_threshold_resonant", threshold_0, ""));
    rows.push(plain("input_coupling", cal.epsilon, ""));
    rows.push(plain("transfer_ceiling", cal.transfer_ceiling(), ""));

    println!("{:<32} {:>14} {:>6} {:>10} {:>8}", "quantity", "value", "unit", "published", "pass");
    for r in &rows {
        println!("{:<32} {:>14} {:>6} {:>10} {:>8}", r[0], short(&r[1]), r[2], short(&r[3]), r[6]);
    }
    let file = ctx.write_csv(
        "params.csv",
        &[],
        &["quantity", "value", "unit", "published", "ratio", "rel_tol", "pass"],
        rows,
    )?;
    #[derive(Serialize)]
    struct Results<'a> {
        derived: &'a cqed::params::DerivedQuantities,
        consistency: &'a cqed::params::ConsistencyReport,
        calibration: &'a Calibration,
        bistability_threshold: f64,
        bistability_threshold_resonant: f64,
    }
    ctx.write_sidecar(
        &[file],
        &Results {
            derived: &derived,
            consistency: &report,
            calibration: &cal,
            bistability_threshold: threshold_d,
            bistability_threshold_resonant: threshold_0,
        },
    )?;
    Ok(report.passed())
}

fn short(s: &str) -> String {
    s.parse::<f64>().map(|v| format!("{v:.4e}")).unwrap_or_else(|_| s.to_string())
}

// -------------------------------------------------------------------- trap

pub fn trap(ctx: &RunContext) -> Result<bool> {
    let s = &ctx.scenario;
    let heights = [0.0, s.transport.distance];
    let mut rows = Vec::new();
    #[derive(Serialize)]
    struct Ratio {
        element: String,
        depth_cavity: f64,
        depth_mot: f64,
        ratio: f64,
    }
    let mut ratios = Vec::new();
    for b in &s.beams {
        let pts = heights
            .iter()
            .map(|&z| trap_point(&b.beam, z, &s.atom, &s.dipole))
            .collect::<cqed::Result<Vec<_>>>()
            .with_context(|| format!("beam {}", b.name))?;
        for p in &pts {
            rows.push(vec![b.name.clone(), num(p.z), num(p.depth), num(p.radial_waist)]);
        }
        ratios.push(Ratio {
            element: b.name.clone(),
            depth_cavity: pts[0].depth,
            depth_mot: pts[1].depth,
            ratio: pts[0].depth / pts[1].depth,
        });
    }
    let lat: Vec<f64> = heights
        .iter()
        .map(|&z| lattice_depth(&s.lattice, z, &s.atom, &s.dipole))
        .collect::<cqed::Result<_>>()?;
    for (&z, &u) in heights.iter().zip(&lat) {
        rows.push(vec!["lattice".into(), num(z), num(u), num(waist_at(&s.lattice.beam_down, z))]);
    }
    ratios.push(Ratio { element: "lattice".into(), depth_cavity: lat[0], depth_mot: lat[1], ratio: lat[0] / lat[1] });

    println!("{:<20} {:>14} {:>14} {:>10}", "element", "cavity (uK)", "MOT (uK)", "ratio");
    for r in &ratios {
        println!(
            "{:<20} {:>14.2} {:>14.2} {:>10.2}",
            r.element,
            r.depth_cavity * 1e6,
            r.depth_mot * 1e6,
            r.ratio
        );
    }
    let extra = [
        kv("weighting", format!("{:?}", s.dipole.weighting)),
        kv("calibration", num(s.dipole.calibration)),
    ];
    let file = ctx.write_csv("trap.csv", &extra, &["element", "z", "depth_K", "radial_waist"], rows)?;
    ctx.write_sidecar(&[file], &ratios)?;
    Ok(true)
}

// ------------------------------------------------------------- bistability

pub fn bistability(ctx: &RunContext) -> Result<bool> {
    let spec = &ctx.scenario.bistability;
    let solver = Bistability::new(spec.d)?;
    let tp = solver.turning_points(spec.coop);
    let cusp = solver.cusp();
    let y_max = spec.y_max.unwrap_or_else(|| 3.0 * tp.map_or(cusp.y.max(1.0), |t| t.up.y));
    let x_max = y_max / (1.0 + spec.d * spec.d);
    let x_min = x_max * 1e-7;
    let curve = solver.s_curve(spec.coop, x_min, x_max, spec.points);
    let label = |x: f64| match tp {
        None => "single",
        Some(t) if x < t.up.x => "lower",
        Some(t) if x > t.down.x => "upper",
        Some(_) => "unstable",
    };
    let extra = [kv("coop", num(spec.coop)), kv("d", num(spec.d))];
    let s_file = ctx.write_csv(
        "s_curve.csv",
        &extra,
        &["y", "x", "branch"],
        curve.samples.iter().map(|p| vec![num(p.y), num(p.x), label(p.x).to_string()]),
    )?;
    let ramp = triangular_ramp(y_max, spec.points);
    let sweep = hysteresis_sweep(spec.coop, spec.d, &ramp)?;
    let h_file = ctx.write_csv(
        "hysteresis.csv",
        &extra,
        &["y", "x", "branch", "direction"],
        sweep.response.iter().enumerate().map(|(i, p)| {
            let dir = if i <= sweep.peak_index { "up" } else { "down" };
            vec![num(p.y), num(p.x), p.branch.as_str().to_string(), dir.to_string()]
        }),
    )?;
    println!("C = {}, d = {:.6}", spec.coop, spec.d);
    println!("bistability threshold at this d: C* = {:.4}", cusp.coop);
    match tp {
        Some(t) => {
            println!("turning points: y_up = {:.6e} (x = {:.4e}), y_down = {:.6e} (x = {:.4e})", t.up.y, t.up.x, t.down.y, t.down.x);
            println!("switching input ratio y_up / y_down = {:.4}", t.input_ratio());
        }
        None => println!("no bistable region at this cooperativity"),
    }
    #[derive(Serialize)]
    struct Results {
        cusp: cqed::bistability::Cusp,
        turning_points: Option<cqed::bistability::TurningPoints>,
        switch_up_y: Option<f64>,
        switch_down_y: Option<f64>,
        switch_ratio: f64,
    }
    ctx.write_sidecar(
        &[s_file, h_file],
        &Results {
            cusp,
            turning_points: tp,
            switch_up_y: sweep.switch_up_y,
            switch_down_y: sweep.switch_down_y,
            switch_ratio: sweep.switch_ratio(),
        },
    )?;
    Ok(true)
}

// --------------------------------------------------------------- transport

pub fn build_plan(ctx: &RunContext) -> Result<MotionPlan> {
    let t = &ctx.scenario.transport;
    let plan = match t.kind {
        PlanKind::RoundTrip => round_trip_plan(t.distance, &t.limits, t.hold)?,
        PlanKind::Trapezoid => plan_trapezoid(t.distance, &t.limits, t.hold)?,
        PlanKind::PassThrough => plan_pass_through(t.distance, &t.limits)?,
        PlanKind::Explicit => MotionPlan {
            segments: t.segments.clone(),
            start_z: t.distance,
            launch_time: 0.0,
            v_max: t.limits.v_max,
            a_max: t.limits.a_max,
        },
    };
    match t.first_crossing {
        Some(time) => plan
            .aligned_to_crossing(0.0, time)
            .ok_or_else(|| anyhow!("transport plan never reaches the cavity, cannot place first_crossing")),
        None => Ok(plan),
    }
}

pub fn transport(ctx: &RunContext) -> Result<bool> {
    let s = &ctx.scenario;
    let t = &s.transport;
    let plan = build_plan(ctx)?;
    let samples = sample_trajectory(&plan, t.dt, t.wavelength)?;
    let crossings = plan.level_crossings(0.0);
    let (v_peak, a_peak) = plan.peak_speed_and_accel();
    let within = v_peak <= t.limits.v_max * (1.0 + 1e-12) && a_peak <= t.limits.a_max;
    let end = plan.end_state();
    let free_fall = free_fall_time(t.distance, t.gravity)?;
    let survival = survival_fraction(plan.duration(), s.lattice.trap_lifetime)?;

    let file = ctx.write_csv(
        "trajectory.csv",
        &[kv("plan", format!("{:?}", t.kind)), kv("wavelength", num(t.wavelength))],
        &["t", "z", "v", "delta"],
        samples.iter().map(|p| vec![num(p.t), num(p.z), num(p.v), num(p.delta)]),
    )?;
    println!("plan: {:?}, {} segments, launch {:.4} ms, duration {:.4} ms", t.kind, plan.segments.len(), plan.launch_time * 1e3, plan.duration() * 1e3);
    for c in &crossings {
        println!("cavity crossing at {:.4} ms", c * 1e3);
    }
    println!("peak speed {:.4} m/s (limit {}), peak acceleration {:.4} m/s^2 (limit {})", v_peak, t.limits.v_max, a_peak, t.limits.a_max);
    println!("final height {:.3e} m, final speed {:.3e} m/s", end.z, end.v);
    println!("free fall over {} m: {:.4} ms", t.distance, free_fall * 1e3);
    println!("lattice survival over the plan: {:.4}", survival);
    if !within {
        log::warn!("plan exceeds its motion limits");
    }
    #[derive(Serialize)]
    struct Results<'a> {
        plan: &'a MotionPlan,
        crossings: &'a [f64],
        peak_speed: f64,
        peak_accel: f64,
        within_limits: bool,
        end_z: f64,
        end_v: f64,
        free_fall_time: f64,
        survival: f64,
    }
    ctx.write_sidecar(
        &[file],
        &Results {
            plan: &plan,
            crossings: &crossings,
            peak_speed: v_peak,
            peak_accel: a_peak,
            within_limits: within,
            end_z: end.z,
            end_v: end.v,
            free_fall_time: free_fall,
            survival,
        },
    )?;
    Ok(within)
}

// ----------------------------------------------------------------- transit

pub const TRACE_COLUMNS: [&str; 6] = ["t", "p_in", "p_out", "branch", "C", "n_eff"];

fn trace_row(p: &TraceSample) -> Vec<String> {
    vec![num(p.t), num(p.p_in), num(p.p_out), p.branch.as_str().to_string(), num(p.coop), num(p.n_eff)]
}

/// Runs every configured probe. Traces are independent and computed in
/// parallel; probe `i` uses seed `seed + i`.
pub fn run_transits(ctx: &RunContext) -> Result<Vec<TransmissionTrace>> {
    let s = &ctx.scenario;
    std::thread::scope(|scope| {
        let handles: Vec<_> = s
            .probes
            .iter()
            .enumerate()
            .map(|(i, probe)| {
                let settings = TransitSettings {
                    t_start: s.transit.t_start,
                    t_end: s.transit.t_end,
                    dt: s.transit.dt,
                    seed: s.seed.wrapping_add(i as u64),
                    model: s.transit.model,
                };
                scope.spawn(move || {
                    simulate_transit(&s.cloud, probe, &s.cavity, &s.atom, &s.detector, &settings, &s.name)
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().map_err(|_| anyhow!("transit worker panicked"))?.map_err(Into::into))
            .collect()
    })
}

pub fn transit(ctx: &RunContext) -> Result<bool> {
    let s = &ctx.scenario;
    let cal = calibration(ctx)?;
    let traces = run_transits(ctx)?;
    let mut files = Vec::new();
    #[derive(Serialize)]
    struct Window {
        trace: String,
        probe: ProbeSchedule,
        window: Option<(f64, f64)>,
        duration: Option<f64>,
    }
    let mut windows = Vec::new();
    for (i, (trace, probe)) in traces.iter().zip(&s.probes).enumerate() {
        let name = format!("trace_{i:02}.csv");
        let probe_text = match probe {
            ProbeSchedule::Constant { power } => num(*power),
            ProbeSchedule::Piecewise { points } => format!("piecewise, {} points", points.len()),
        };
        let extra = [
            kv("probe_power_W", probe_text),
            kv("trace_seed", trace.metadata.seed),
            kv("input_coupling", num(cal.epsilon)),
            kv("normalized_detuning", num(s.cavity.normalized_detuning())),
            kv("detector_bandwidth_Hz", s.detector.bandwidth.map_or("ideal".to_string(), num)),
            kv("detector_noise_W", num(s.detector.noise_floor)),
        ];
        files.push(ctx.write_csv(&name, &extra, &TRACE_COLUMNS, trace.samples.iter().map(trace_row))?);
        let w = switch_window(trace, s.transit.window.fall, s.transit.window.rise);
        windows.push(Window { trace: name, probe: probe.clone(), window: w, duration: w.map(|(a, b)| b - a) });
    }
    println!("{:<14} {:>14} {:>14} {:>14} {:>14}", "trace", "p_in (W)", "off (ms)", "on (ms)", "window (ms)");
    for w in &windows {
        let ms = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{:.4}", v * 1e3));
        println!(
            "{:<14} {:>14} {:>14} {:>14} {:>14}",
            w.trace,
            format!("{:.4e}", w.probe.peak()),
            ms(w.window.map(|x| x.0)),
            ms(w.window.map(|x| x.1)),
            ms(w.duration)
        );
    }
    let summary = ctx.write_csv(
        "transit_summary.csv",
        &[kv("fall_threshold", num(s.transit.window.fall)), kv("rise_threshold", num(s.transit.window.rise))],
        &["trace", "p_in_peak", "off_time", "on_time", "duration"],
        windows.iter().map(|w| {
            let f = |v: Option<f64>| v.map(num).unwrap_or_default();
            vec![w.trace.clone(), num(w.probe.peak()), f(w.window.map(|x| x.0)), f(w.window.map(|x| x.1)), f(w.duration)]
        }),
    )?;
    files.push(summary);
    #[derive(Serialize)]
    struct Results<'a> {
        calibration: &'a Calibration,
        windows: &'a [Window],
    }
    ctx.write_sidecar(&files, &Results { calibration: &cal, windows: &windows })?;
    Ok(true)
}

// ---------------------------------------------------------------- estimate

/// Reads a trace CSV written by `transit`.
pub fn read_trace(path: &Path) -> Result<TransmissionTrace> {
    if !path.is_file() {
        bail!("input trace {} does not exist", path.display());
    }
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .with_context(|| format!("cannot read {}", path.display()))?;
    let headers = reader.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| anyhow!("{}: missing column `{name}`", path.display()))
    };
    let idx = [col("t")?, col("p_in")?, col("p_out")?, col("branch")?, col("C")?, col("n_eff")?];
    let mut samples = Vec::new();
    for (line, rec) in reader.records().enumerate() {
        let rec = rec.with_context(|| format!("{}: bad record", path.display()))?;
        let field = |k: usize| -> Result<f64> {
            let text = rec.get(idx[k]).unwrap_or("");
            text.parse::<f64>()
                .with_context(|| format!("{}: data row {}: cannot read {text:?} as a number", path.display(), line + 1))
        };
        let branch_text = rec.get(idx[3]).unwrap_or("");
        samples.push(TraceSample {
            t: field(0)?,
            p_in: field(1)?,
            p_out: field(2)?,
            branch: TraceBranch::parse(branch_text)
                .ok_or_else(|| anyhow!("{}: data row {}: unknown branch {branch_text:?}", path.display(), line + 1))?,
            coop: field(4)?,
            n_eff: field(5)?,
        });
    }
    if samples.is_empty() {
        bail!("{}: no samples", path.display());
    }
    let p_in = samples.iter().map(|s| s.p_in).fold(0.0, f64::max);
    let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let trace = TransmissionTrace { samples, p_in, metadata: TraceMetadata::new(name) };
    trace.validate().with_context(|| format!("{}", path.display()))?;
    Ok(trace)
}

pub fn estimate(ctx: &RunContext, inputs: &[PathBuf]) -> Result<bool> {
    let s = &ctx.scenario;
    if inputs.is_empty() {
        bail!("estimate needs trace files: pass --input PATH or list them in [estimate] inputs");
    }
    let mut traces = Vec::new();
    let mut hashes = Vec::new();
    for p in inputs {
        traces.push(read_trace(p)?);
        hashes.push(kv("input", format!("{} sha256:{}", p.file_name().unwrap_or_default().to_string_lossy(), file_hash(p)?)));
    }
    let cal = calibration(ctx)?;
    let derived = derive_quantities(&s.atom, &s.cavity)?;
    let out = extract_timeline(&traces, s.cavity.normalized_detuning(), &cal, &s.estimate.switch)?;
    let fit: Option<CloudFit> = match fit_cloud(&out.timeline, derived.c1, derived.mode_volume) {
        Ok(f) => Some(f),
        Err(e) => {
            log::warn!("cloud fit skipped: {e}");
            None
        }
    };
    let timeline = ctx.write_csv(
        "timeline.csv",
        &hashes,
        &["t", "C", "source_power", "edge"],
        out.timeline.samples.iter().map(|p| {
            let edge = match p.edge {
                cqed::bistability::SwitchEdge::Up => "up",
                cqed::bistability::SwitchEdge::Down => "down",
            };
            vec![num(p.t), num(p.coop), num(p.source_power), edge.to_string()]
        }),
    )?;
    let mut report = String::new();
    report.push_str(&format!("traces: {}\n", traces.len()));
    report.push_str(&format!("timeline samples: {}\n", out.timeline.samples.len()));
    for w in &out.warnings {
        report.push_str(&format!("warning: {w}\n"));
    }
    match &fit {
        Some(f) => {
            report.push_str(&format!("peak cooperativity: {:.2}\n", f.peak_coop));
            report.push_str(&format!("center time: {:.4} ms\n", f.t_center * 1e3));
            report.push_str(&format!("sigma_t: {:.4} ms\n", f.sigma_t * 1e3));
            report.push_str(&format!("fwhm: {:.4} ms\n", f.fwhm * 1e3));
            report.push_str(&format!("peak atom number (mode weighted): {:.2}\n", f.n_peak));
            report.push_str(&format!("peak density: {:.4e} m^-3\n", f.density));
            report.push_str(&format!("rms residual in C: {:.4}\n", f.rms));
        }
        None => report.push_str("no cloud fit (too few switch events)\n"),
    }
    print!("{report}");
    let report_file = ctx.write_text("fit_report.txt", &report)?;
    #[derive(Serialize)]
    struct Results<'a> {
        calibration: &'a Calibration,
        fit: &'a Option<CloudFit>,
        warnings: &'a [String],
    }
    ctx.write_sidecar(&[timeline, report_file], &Results { calibration: &cal, fit: &fit, warnings: &out.warnings })?;
    Ok(fit.is_some())
}
