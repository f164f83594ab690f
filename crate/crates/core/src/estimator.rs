//! Inverse problems: cooperativity from an input/output sweep, and a
//! cooperativity timeline from transit traces taken at several probe powers.

use nalgebra::{Matrix3, Vector3};
use serde::Serialize;

use crate::bistability::{Bistability, BranchFollower, SwitchEdge};
use crate::error::{Error, Result};
use crate::numeric::golden_min;
use crate::transit::{Calibration, TransmissionTrace, FWHM_PER_SIGMA};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepDataset {
    /// (p_in, p_out) in W, in acquisition order.
    pub points: Vec<(f64, f64)>,
    pub d: f64,
    pub calibration: Calibration,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepFit {
    pub coop: f64,
    /// Sum of squared log residuals at the optimum.
    pub residual: f64,
    /// Points that entered the residual.
    pub used: usize,
}

/// Model outputs X for drives `ys` taken in order, starting from the dark
/// cavity. Branch memory assigns rising samples to the lower branch and
/// falling samples to the upper one.
pub fn sweep_response(solver: Bistability, coop: f64, ys: &[f64]) -> Vec<f64> {
    let mut follower = BranchFollower::with_state(solver, 0.0);
    ys.iter().map(|&y| follower.update(y, coop).0.x).collect()
}

fn log_residual(model: &[f64], data: &[f64]) -> (f64, usize) {
    let mut sum = 0.0;
    let mut used = 0;
    for (&m, &x) in model.iter().zip(data) {
        if m > 0.0 && x > 0.0 {
            let r = m.ln() - x.ln();
            sum += r * r;
            used += 1;
        }
    }
    (sum, used)
}

/// Least-squares C for a sweep, minimizing the squared difference of log
/// output powers.
///
/// A log grid over C in [1e-3, 1e5] plus C = 0 brackets the minimum, and a
/// golden-section search refines it.
pub fn fit_sweep_cooperativity(dataset: &SweepDataset) -> Result<SweepFit> {
    let pts = &dataset.points;
    if pts.len() < 5 {
        return Err(Error::InsufficientSamples { needed: 5, got: pts.len() });
    }
    if pts.iter().any(|&(p, q)| !(p >= 0.0 && q >= 0.0) || !p.is_finite() || !q.is_finite()) {
        return Err(Error::DegenerateDataset("powers must be finite and >= 0".into()));
    }
    let peak = pts
        .iter()
        .enumerate()
        .max_by(|a, b| a.1 .0.total_cmp(&b.1 .0))
        .map(|(i, _)| i)
        .unwrap();
    if peak == 0 || peak + 1 == pts.len() {
        return Err(Error::DegenerateDataset("sweep covers a single ramp direction".into()));
    }
    let cal = &dataset.calibration;
    let ys: Vec<f64> = pts.iter().map(|p| cal.drive(p.0)).collect();
    let xs: Vec<f64> = pts.iter().map(|p| cal.output_drive(p.1)).collect();
    let solver = Bistability::new(dataset.d)?;
    let cost = |c: f64| log_residual(&sweep_response(solver, c, &ys), &xs).0;

    let mut grid = vec![0.0];
    grid.extend((0..=160).map(|i| 10f64.powf(-3.0 + 8.0 * i as f64 / 160.0)));
    let costs: Vec<f64> = grid.iter().map(|&c| cost(c)).collect();
    let best = (0..grid.len()).min_by(|&a, &b| costs[a].total_cmp(&costs[b])).unwrap();
    let lo = grid[best.saturating_sub(1)];
    let hi = grid[(best + 1).min(grid.len() - 1)];
    let coop = golden_min(cost, lo, hi, 1e-12 * hi.max(1.0));
    let (coop, residual) = if cost(coop) <= costs[best] { (coop, cost(coop)) } else { (grid[best], costs[best]) };
    let used = log_residual(&sweep_response(solver, coop, &ys), &xs).1;
    Ok(SweepFit { coop, residual, used })
}

/// Two-threshold switch detector on transmitted power.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SwitchDetector {
    /// Drop is registered below `fall * baseline`.
    pub fall: f64,
    /// Recovery is registered above `rise * baseline`.
    pub rise: f64,
    /// Leading samples averaged into the pre-transit baseline.
    pub baseline_samples: usize,
}

impl Default for SwitchDetector {
    fn default() -> Self {
        SwitchDetector {
            fall: 0.15,
            rise: 0.30,
            baseline_samples: 20,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SwitchEvent {
    pub t: f64,
    /// Probe power at the event, W.
    pub p_in: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SwitchEvents {
    pub baseline: f64,
    pub down: Option<SwitchEvent>,
    pub up: Option<SwitchEvent>,
}

impl SwitchDetector {
    pub fn validate(&self) -> Result<()> {
        if !(self.fall > 0.0 && self.fall <= self.rise && self.rise < 1.0) {
            return Err(Error::invalid("switch thresholds", "need 0 < fall <= rise < 1"));
        }
        if self.baseline_samples == 0 {
            return Err(Error::invalid("baseline_samples", "must be >= 1"));
        }
        Ok(())
    }

    pub fn detect(&self, trace: &TransmissionTrace) -> SwitchEvents {
        let s = &trace.samples;
        let n = self.baseline_samples.min(s.len()).max(1);
        let baseline = s.iter().take(n).map(|p| p.p_out).sum::<f64>() / n as f64;
        let event = |i: usize, level: f64| {
            let (a, b) = (s[i - 1], s[i]);
            let f = if b.p_out != a.p_out { (level - a.p_out) / (b.p_out - a.p_out) } else { 1.0 };
            SwitchEvent {
                t: a.t + f * (b.t - a.t),
                p_in: a.p_in + f * (b.p_in - a.p_in),
            }
        };
        let (lo, hi) = (self.fall * baseline, self.rise * baseline);
        let down_at = (1..s.len()).find(|&i| s[i].p_out < lo && s[i - 1].p_out >= lo);
        let up_at = down_at.and_then(|i| (i + 1..s.len()).find(|&j| s[j].p_out > hi && s[j - 1].p_out <= hi));
        SwitchEvents {
            baseline,
            down: down_at.map(|i| event(i, lo)),
            up: up_at.map(|j| event(j, hi)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimelineSample {
    pub t: f64,
    pub coop: f64,
    /// Probe power of the trace the sample came from, W.
    pub source_power: f64,
    /// Turning point used to invert the switch.
    pub edge: SwitchEdge,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CloudFit {
    pub peak_coop: f64,
    pub t_center: f64,
    pub sigma_t: f64,
    pub fwhm: f64,
    /// C_peak / C1, mode-weighted atoms.
    pub n_peak: f64,
    /// n_peak over the standing-wave mode volume, m⁻³.
    pub density: f64,
    /// rms of C residuals.
    pub rms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CooperativityTimeline {
    pub samples: Vec<TimelineSample>,
    pub fit: Option<CloudFit>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimelineExtraction {
    pub timeline: CooperativityTimeline,
    pub warnings: Vec<String>,
}

/// Converts switch times into cooperativity samples.
///
/// A drop happens when the growing C pushes the lower turning point of the
/// S-curve past the drive Y, so it is inverted on [`SwitchEdge::Down`]; the
/// recovery happens when the shrinking C brings the upper turning point back
/// below Y and is inverted on [`SwitchEdge::Up`]. Traces without a usable
/// switch produce a warning and no samples.
pub fn extract_timeline(
    traces: &[TransmissionTrace],
    d: f64,
    calibration: &Calibration,
    detector: &SwitchDetector,
) -> Result<TimelineExtraction> {
    detector.validate()?;
    let solver = Bistability::new(d)?;
    let mut samples = Vec::new();
    let mut warnings = Vec::new();
    for (k, trace) in traces.iter().enumerate() {
        let label = format!("trace {k} ({}, {:.4e} W)", trace.metadata.scenario, trace.p_in);
        let ev = detector.detect(trace);
        if !(ev.baseline > 0.0) {
            warnings.push(format!("{label}: no pre-transit transmission, skipped"));
            continue;
        }
        let (Some(down), Some(up)) = (ev.down, ev.up) else {
            warnings.push(format!("{label}: no complete drop and recovery, skipped"));
            continue;
        };
        let mut pair = Vec::with_capacity(2);
        for (e, edge) in [(down, SwitchEdge::Down), (up, SwitchEdge::Up)] {
            match solver.switch_cooperativity(calibration.drive(e.p_in), edge) {
                Ok(coop) => pair.push(TimelineSample { t: e.t, coop, source_power: e.p_in, edge }),
                Err(err) => warnings.push(format!("{label}: {err}, skipped")),
            }
        }
        samples.extend(pair);
    }
    for w in &warnings {
        log::warn!("{w}");
    }
    samples.sort_by(|a, b| a.t.total_cmp(&b.t));
    Ok(TimelineExtraction {
        timeline: CooperativityTimeline { samples, fit: None },
        warnings,
    })
}

/// Gaussian fit C(t) = C_peak exp(-(t - t0)² / (2σ²)).
///
/// Starts from a quadratic fit to ln C and refines with Gauss-Newton on the
/// linear residuals. `c1` converts to atom number and `mode_volume` (m³) to
/// a density.
pub fn fit_cloud(timeline: &CooperativityTimeline, c1: f64, mode_volume: f64) -> Result<CloudFit> {
    let pts: Vec<(f64, f64)> = timeline.samples.iter().map(|s| (s.t, s.coop)).collect();
    if pts.len() < 4 {
        return Err(Error::InsufficientSamples { needed: 4, got: pts.len() });
    }
    if pts.iter().any(|p| !(p.1 > 0.0) || !p.0.is_finite()) {
        return Err(Error::DegenerateDataset("cooperativities must be positive".into()));
    }
    // center and scale time for conditioning
    let t_mean = pts.iter().map(|p| p.0).sum::<f64>() / pts.len() as f64;
    let t_scale = pts.iter().map(|p| (p.0 - t_mean).abs()).fold(0.0, f64::max);
    if !(t_scale > 0.0) {
        return Err(Error::DegenerateDataset("all samples at one time".into()));
    }
    let scaled: Vec<(f64, f64)> = pts.iter().map(|p| ((p.0 - t_mean) / t_scale, p.1)).collect();

    let mut ata = Matrix3::zeros();
    let mut atb = Vector3::zeros();
    for &(u, c) in &scaled {
        let row = Vector3::new(1.0, u, u * u);
        ata += row * row.transpose();
        atb += row * c.ln();
    }
    let q = ata
        .lu()
        .solve(&atb)
        .ok_or_else(|| Error::FitFailed("singular log-quadratic system".into()))?;
    if !(q[2] < 0.0) {
        return Err(Error::FitFailed("samples are not peaked".into()));
    }
    let sigma0 = (-1.0 / (2.0 * q[2])).sqrt();
    let u0 = -q[1] / (2.0 * q[2]);
    let amp0 = (q[0] - q[1] * q[1] / (4.0 * q[2])).exp();

    let model = |p: &Vector3<f64>, u: f64| {
        let s = (u - p[1]) / p[2];
        p[0] * (-0.5 * s * s).exp()
    };
    let cost = |p: &Vector3<f64>| scaled.iter().map(|&(u, c)| (model(p, u) - c).powi(2)).sum::<f64>();
    let mut p = Vector3::new(amp0, u0, sigma0);
    let mut lambda = 1e-6;
    let mut current = cost(&p);
    for _ in 0..200 {
        let mut jtj = Matrix3::zeros();
        let mut jtr = Vector3::zeros();
        for &(u, c) in &scaled {
            let s = (u - p[1]) / p[2];
            let e = (-0.5 * s * s).exp();
            let j = Vector3::new(e, p[0] * e * s / p[2], p[0] * e * s * s / p[2]);
            jtj += j * j.transpose();
            jtr += j * (c - p[0] * e);
        }
        let mut improved = false;
        while lambda < 1e12 {
            let damped = jtj + Matrix3::from_diagonal(&jtj.diagonal()) * lambda;
            let Some(step) = damped.lu().solve(&jtr) else { break };
            let trial = p + step;
            let next = if trial[2] > 0.0 { cost(&trial) } else { f64::INFINITY };
            if next <= current {
                let converged = step.abs().iter().zip(p.iter()).all(|(s, v)| *s <= 1e-15 * v.abs().max(1e-12));
                p = trial;
                current = next;
                lambda = (lambda * 0.1).max(1e-15);
                improved = !converged;
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }
    if !p.iter().all(|v| v.is_finite()) || !(p[0] > 0.0) {
        return Err(Error::FitFailed("Gaussian refinement diverged".into()));
    }
    let sigma_t = p[2] * t_scale;
    Ok(CloudFit {
        peak_coop: p[0],
        t_center: t_mean + p[1] * t_scale,
        sigma_t,
        fwhm: FWHM_PER_SIGMA * sigma_t,
        n_peak: p[0] / c1,
        density: p[0] / c1 / mode_volume,
        rms: (current / pts.len() as f64).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::derive_quantities;
    use crate::presets;
    use crate::transit::{TraceBranch, TraceMetadata, TraceSample};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn calibration() -> Calibration {
        let det = presets::heterodyne_detector();
        Calibration::new(&presets::paper_cavity(), &presets::rb87_atom(), det.input_coupling).unwrap()
    }

    fn d() -> f64 {
        presets::paper_cavity().normalized_detuning()
    }

    fn synthetic_sweep(coop: f64, n: usize) -> SweepDataset {
        let cal = calibration();
        let ys = crate::bistability::triangular_ramp(2e5, n);
        let xs = sweep_response(Bistability::new(d()).unwrap(), coop, &ys);
        SweepDataset {
            points: ys.iter().zip(&xs).map(|(&y, &x)| (cal.input_power(y), cal.output_power(x))).collect(),
            d: d(),
            calibration: cal,
        }
    }

    #[test]
    fn sweep_round_trip() {
        let fit = fit_sweep_cooperativity(&synthetic_sweep(200.0, 60)).unwrap();
        assert!((fit.coop - 200.0).abs() < 0.5, "{fit:?}");
        assert!(fit.residual <= 1e-10, "{fit:?}");
    }

    #[test]
    fn linear_sweep_fits_zero() {
        let fit = fit_sweep_cooperativity(&synthetic_sweep(0.0, 30)).unwrap();
        assert!(fit.coop < 1e-2, "{fit:?}");
        assert!(fit.residual < 1e-6);
    }

    #[test]
    fn noisy_sweep_stays_close() {
        let clean = synthetic_sweep(200.0, 40);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let noise = Normal::new(0.0f64, 0.05).unwrap();
        let noisy = SweepDataset {
            points: clean.points.iter().map(|&(p, q)| (p, q * (1.0 + noise.sample(&mut rng)).max(0.0))).collect(),
            ..clean
        };
        let fit = fit_sweep_cooperativity(&noisy).unwrap();
        assert!((fit.coop / 200.0 - 1.0).abs() < 0.1, "{fit:?}");
    }

    #[test]
    fn degenerate_sweeps() {
        let mut ds = synthetic_sweep(200.0, 30);
        ds.points.truncate(4);
        assert!(matches!(fit_sweep_cooperativity(&ds), Err(Error::InsufficientSamples { .. })));
        let mut rising = synthetic_sweep(200.0, 30);
        rising.points.truncate(31);
        assert!(matches!(fit_sweep_cooperativity(&rising), Err(Error::DegenerateDataset(_))));
    }

    fn gaussian_timeline(peak: f64, t0: f64, sigma: f64, ts: &[f64]) -> CooperativityTimeline {
        CooperativityTimeline {
            samples: ts
                .iter()
                .map(|&t| TimelineSample {
                    t,
                    coop: peak * (-0.5 * ((t - t0) / sigma).powi(2)).exp(),
                    source_power: 0.0,
                    edge: SwitchEdge::Down,
                })
                .collect(),
            fit: None,
        }
    }

    #[test]
    fn exact_gaussian_recovery() {
        let tl = gaussian_timeline(5400.0, 55.3e-3, 0.637e-3, &[53.9e-3, 54.5e-3, 54.9e-3, 55.8e-3, 56.2e-3, 56.6e-3]);
        let fit = fit_cloud(&tl, 50.625, 1.0).unwrap();
        assert!((fit.peak_coop / 5400.0 - 1.0).abs() < 1e-6);
        assert!((fit.t_center - 55.3e-3).abs() < 1e-6 * 55.3e-3);
        assert!((fit.sigma_t / 0.637e-3 - 1.0).abs() < 1e-6);
        assert!((fit.n_peak - 106.67).abs() < 0.01);
    }

    #[test]
    fn too_few_samples() {
        let tl = gaussian_timeline(10.0, 0.0, 1.0, &[-1.0, 0.0, 1.0]);
        assert!(matches!(fit_cloud(&tl, 1.0, 1.0), Err(Error::InsufficientSamples { needed: 4, got: 3 })));
    }

    fn step_trace(p_in: f64, levels: &[(f64, f64)]) -> TransmissionTrace {
        TransmissionTrace {
            samples: levels
                .iter()
                .map(|&(t, p_out)| TraceSample { t, p_in, p_out, branch: TraceBranch::Single, coop: 0.0, n_eff: 0.0 })
                .collect(),
            p_in,
            metadata: TraceMetadata::new("step"),
        }
    }

    #[test]
    fn schmitt_detector_interpolates() {
        let trace = step_trace(1.0, &[(0.0, 1.0), (1.0, 1.0), (2.0, 0.0), (3.0, 0.0), (4.0, 1.0)]);
        let det = SwitchDetector { fall: 0.5, rise: 0.5, baseline_samples: 2 };
        let ev = det.detect(&trace);
        assert_eq!(ev.down.unwrap().t, 1.5);
        assert_eq!(ev.up.unwrap().t, 3.5);
    }

    #[test]
    fn flat_trace_is_skipped_with_warning() {
        let trace = step_trace(1e-12, &[(0.0, 1.0), (1.0, 1.0), (2.0, 1.0)]);
        let out = extract_timeline(&[trace], d(), &calibration(), &SwitchDetector::default()).unwrap();
        assert!(out.timeline.samples.is_empty());
        assert_eq!(out.warnings.len(), 1);
    }

    #[test]
    fn timeline_from_peak_cloud() {
        let (cavity, atom) = (presets::paper_cavity(), presets::rb87_atom());
        let cloud = presets::peak_cloud();
        let det = presets::heterodyne_detector();
        let traces: Vec<_> = presets::TIMELINE_PROBE_POWERS
            .iter()
            .map(|&p| {
                crate::transit::simulate_transit(
                    &cloud,
                    &crate::transit::ProbeSchedule::Constant { power: p },
                    &cavity,
                    &atom,
                    &det,
                    &presets::transit_settings(&cloud, 0),
                    "peak",
                )
                .unwrap()
            })
            .collect();
        let out = extract_timeline(&traces, d(), &calibration(), &SwitchDetector::default()).unwrap();
        let derived = derive_quantities(&atom, &cavity).unwrap();
        let fit = fit_cloud(&out.timeline, derived.c1, derived.mode_volume).unwrap();
        assert!((fit.peak_coop / 5400.0 - 1.0).abs() < 0.05, "{fit:?}");
        assert!((fit.fwhm / cloud.fwhm() - 1.0).abs() < 0.1, "{fit:?}");
        let threshold = Bistability::new(d()).unwrap().threshold();
        assert!(out.timeline.samples.iter().all(|s| s.coop >= threshold));
    }
}
