//! Detection chain: first-order low-pass followed by additive Gaussian noise.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{require_non_negative, require_positive, Error, Result};

use super::TransmissionTrace;

/// Noise draws use their own ChaCha stream so they never alias the atom
/// sampling stream for the same seed.
pub(crate) const NOISE_STREAM: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorModel {
    /// Low-pass corner frequency, Hz. `None` is an ideal detector.
    pub bandwidth: Option<f64>,
    /// rms additive noise, W.
    #[serde(default)]
    pub noise_floor: f64,
    /// Input coupling ε between probe power and intracavity drive.
    pub input_coupling: f64,
}

impl DetectorModel {
    pub fn validate(&self) -> Result<()> {
        if let Some(bw) = self.bandwidth {
            require_positive("detector.bandwidth", bw)?;
        }
        require_non_negative("detector.noise_floor", self.noise_floor)?;
        require_positive("detector.input_coupling", self.input_coupling)
    }

    /// Largest sample spacing accepted by [`apply_detector`].
    pub fn max_dt(&self) -> Option<f64> {
        self.bandwidth.map(|bw| 1.0 / (10.0 * bw))
    }
}

/// 10-90 % rise time of a first-order low-pass, ln 9 / (2π f).
pub fn rise_time(bandwidth: f64) -> f64 {
    9f64.ln() / (2.0 * PI * bandwidth)
}

/// Low-pass filters `p_out` and then adds noise. Deterministic in `seed`.
///
/// The filter is the exact discretization of a first-order system for the
/// local sample spacing, y += (1 - exp(-2π f dt)) (x - y), starting settled
/// on the first sample.
pub fn apply_detector(trace: &TransmissionTrace, detector: &DetectorModel, seed: u64) -> Result<TransmissionTrace> {
    detector.validate()?;
    let mut out = trace.clone();
    if let (Some(bw), Some(max_dt)) = (detector.bandwidth, detector.max_dt()) {
        let dt = trace
            .samples
            .windows(2)
            .map(|w| w[1].t - w[0].t)
            .fold(0.0, f64::max);
        if dt > max_dt * (1.0 + 1e-9) {
            return Err(Error::Undersampled { dt, max_dt });
        }
        let mut y = match trace.samples.first() {
            Some(s) => s.p_out,
            None => return Ok(out),
        };
        for i in 0..out.samples.len() {
            if i > 0 {
                let dt = trace.samples[i].t - trace.samples[i - 1].t;
                let alpha = 1.0 - (-2.0 * PI * bw * dt).exp();
                y += alpha * (trace.samples[i].p_out - y);
            }
            out.samples[i].p_out = y;
        }
    }
    if detector.noise_floor > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(NOISE_STREAM);
        let noise = Normal::new(0.0, detector.noise_floor).expect("noise floor validated");
        for s in &mut out.samples {
            s.p_out += noise.sample(&mut rng);
        }
    }
    out.metadata.detector_applied = true;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transit::{TraceBranch, TraceMetadata, TraceSample};

    fn step_trace(dt: f64, n: usize) -> TransmissionTrace {
        let samples = (0..n)
            .map(|i| TraceSample {
                t: i as f64 * dt,
                p_in: 1.0,
                p_out: if i < 10 { 0.0 } else { 1.0 },
                branch: TraceBranch::Single,
                coop: 0.0,
                n_eff: 0.0,
            })
            .collect();
        TransmissionTrace {
            samples,
            p_in: 1.0,
            metadata: TraceMetadata::new("step"),
        }
    }

    fn crossing(trace: &TransmissionTrace, level: f64) -> f64 {
        let w = trace
            .samples
            .windows(2)
            .find(|w| w[0].p_out < level && w[1].p_out >= level)
            .unwrap();
        w[0].t + (level - w[0].p_out) / (w[1].p_out - w[0].p_out) * (w[1].t - w[0].t)
    }

    #[test]
    fn step_rise_time() {
        let det = DetectorModel { bandwidth: Some(30e3), noise_floor: 0.0, input_coupling: 1.0 };
        let out = apply_detector(&step_trace(1e-8, 20_000), &det, 0).unwrap();
        let rise = crossing(&out, 0.9) - crossing(&out, 0.1);
        assert!((rise - rise_time(30e3)).abs() < 2e-8, "{rise}");
        assert!((rise_time(30e3) * 1e6 - 11.66).abs() < 0.01);
    }

    #[test]
    fn undersampled_rejected() {
        let det = DetectorModel { bandwidth: Some(30e3), noise_floor: 0.0, input_coupling: 1.0 };
        let err = apply_detector(&step_trace(10e-6, 100), &det, 0).unwrap_err();
        assert!(matches!(err, Error::Undersampled { .. }));
    }

    #[test]
    fn noise_is_seeded() {
        let det = DetectorModel { bandwidth: Some(30e3), noise_floor: 1e-3, input_coupling: 1.0 };
        let trace = step_trace(1e-6, 500);
        let a = apply_detector(&trace, &det, 9).unwrap();
        let b = apply_detector(&trace, &det, 9).unwrap();
        let c = apply_detector(&trace, &det, 10).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        let quiet = DetectorModel { noise_floor: 0.0, ..det };
        let filtered = apply_detector(&trace, &quiet, 9).unwrap();
        let resid: Vec<f64> = a.samples.iter().zip(&filtered.samples).map(|(x, y)| x.p_out - y.p_out).collect();
        let rms = (resid.iter().map(|r| r * r).sum::<f64>() / resid.len() as f64).sqrt();
        assert!((rms / 1e-3 - 1.0).abs() < 0.15);
    }

    #[test]
    fn ideal_detector_is_identity() {
        let det = DetectorModel { bandwidth: None, noise_floor: 0.0, input_coupling: 1.0 };
        let trace = step_trace(1e-3, 50);
        let out = apply_detector(&trace, &det, 0).unwrap();
        assert_eq!(out.samples, trace.samples);
    }
}
