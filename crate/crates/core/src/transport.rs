//! Atom delivery kinematics: free fall and lattice motion plans.
//!
//! `z` is the height above the cavity axis (positive toward the MOT), `v` is
//! dz/dt. Motion plans are piecewise constant-acceleration, so positions and
//! velocities are evaluated in closed form with no integration error.

use serde::{Deserialize, Serialize};

use crate::beams::detuning_for_velocity;
use crate::error::{require_non_negative, require_positive, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotionLimits {
    /// m/s
    pub v_max: f64,
    /// m/s²
    pub a_max: f64,
}

impl MotionLimits {
    pub fn validate(&self) -> Result<()> {
        require_positive("limits.v_max", self.v_max)?;
        require_positive("limits.a_max", self.a_max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    /// s
    pub duration: f64,
    /// m/s²
    pub accel: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotionPlan {
    pub segments: Vec<Segment>,
    /// Height at the start of the plan, m. The lattice starts at rest.
    pub start_z: f64,
    /// Time at which the first segment begins, s.
    #[serde(default)]
    pub launch_time: f64,
    pub v_max: f64,
    pub a_max: f64,
}

/// Kinematic state at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MotionState {
    pub z: f64,
    pub v: f64,
    pub a: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrajectorySample {
    pub t: f64,
    pub z: f64,
    pub v: f64,
    /// Lattice difference frequency 2 v / lambda, Hz. Positive moves atoms
    /// toward +z.
    pub delta: f64,
}

impl MotionPlan {
    pub fn duration(&self) -> f64 {
        self.segments.iter().map(|s| s.duration).sum()
    }

    pub fn end_time(&self) -> f64 {
        self.launch_time + self.duration()
    }

    /// Start states (z, v) of every segment plus the final state.
    fn knots(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::with_capacity(self.segments.len() + 1);
        let (mut z, mut v) = (self.start_z, 0.0);
        out.push((z, v));
        for s in &self.segments {
            z += v * s.duration + 0.5 * s.accel * s.duration * s.duration;
            v += s.accel * s.duration;
            out.push((z, v));
        }
        out
    }

    /// State at absolute time `t`; clamps to rest before launch and holds the
    /// final state after the last segment.
    pub fn state_at(&self, t: f64) -> MotionState {
        let mut tau = t - self.launch_time;
        let knots = self.knots();
        if tau <= 0.0 {
            return MotionState { z: self.start_z, v: 0.0, a: 0.0 };
        }
        for (s, &(z0, v0)) in self.segments.iter().zip(&knots) {
            if tau <= s.duration {
                return MotionState {
                    z: z0 + v0 * tau + 0.5 * s.accel * tau * tau,
                    v: v0 + s.accel * tau,
                    a: s.accel,
                };
            }
            tau -= s.duration;
        }
        let &(z, v) = knots.last().unwrap();
        MotionState { z, v, a: 0.0 }
    }

    pub fn end_state(&self) -> MotionState {
        let &(z, v) = self.knots().last().unwrap();
        MotionState { z, v, a: 0.0 }
    }

    /// Absolute times at which the trajectory reaches height `level`.
    ///
    /// A stretch spent at rest on the level contributes its entry and exit
    /// times.
    pub fn level_crossings(&self, level: f64) -> Vec<f64> {
        const Z_TOL: f64 = 1e-12;
        let mut times = Vec::new();
        let mut t0 = self.launch_time;
        for (s, &(z0, v0)) in self.segments.iter().zip(&self.knots()) {
            let f0 = z0 - level;
            let (a, b, dur) = (0.5 * s.accel, v0, s.duration);
            let z_end = f0 + b * dur + a * dur * dur;
            if f0.abs() <= Z_TOL {
                times.push(t0);
            }
            if z_end.abs() <= Z_TOL {
                times.push(t0 + dur);
            }
            let mut roots = Vec::with_capacity(2);
            if f0.abs() <= Z_TOL {
                // starts on the level; already recorded
            } else if a == 0.0 {
                if b != 0.0 {
                    roots.push(-f0 / b);
                }
            } else {
                let disc = b * b - 4.0 * a * f0;
                if disc >= 0.0 {
                    let q = -0.5 * (b + b.signum() * disc.sqrt());
                    if q != 0.0 {
                        roots.push(q / a);
                        roots.push(f0 / q);
                    } else {
                        roots.push(0.0);
                    }
                }
            }
            // A tangential touch at a knot is ill-conditioned in the quadratic;
            // the knot time itself is exact.
            let end_on_level = z_end.abs() <= Z_TOL;
            times.extend(
                roots
                    .into_iter()
                    .filter(|tau| *tau > 0.0 && *tau < dur && !(end_on_level && dur - tau < 1e-6))
                    .map(|tau| t0 + tau),
            );
            t0 += dur;
        }
        times.sort_by(f64::total_cmp);
        times.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
        times
    }

    /// Largest |v| and |a| over the plan (both attained at segment knots).
    pub fn peak_speed_and_accel(&self) -> (f64, f64) {
        let v = self.knots().iter().map(|k| k.1.abs()).fold(0.0, f64::max);
        let a = self.segments.iter().map(|s| s.accel.abs()).fold(0.0, f64::max);
        (v, a)
    }

    /// Shifts the plan so that its first crossing of `level` happens at
    /// `time`.
    pub fn aligned_to_crossing(mut self, level: f64, time: f64) -> Option<Self> {
        let first = *self.level_crossings(level).first()?;
        self.launch_time += time - first;
        Some(self)
    }
}

/// Time to fall `drop` metres from rest, sqrt(2 drop / g).
pub fn free_fall_time(drop: f64, g: f64) -> Result<f64> {
    require_non_negative("drop", drop)?;
    require_positive("g", g)?;
    Ok((2.0 * drop / g).sqrt())
}

fn moving_profile(distance: f64, limits: &MotionLimits) -> Vec<Segment> {
    let MotionLimits { v_max: v, a_max: a } = *limits;
    if a * distance < v * v {
        // triangular: never reaches cruise speed
        let t = (distance / a).sqrt();
        vec![Segment { duration: t, accel: -a }, Segment { duration: t, accel: a }]
    } else {
        let ramp = v / a;
        let cruise = (distance - v * v / a) / v;
        vec![
            Segment { duration: ramp, accel: -a },
            Segment { duration: cruise, accel: 0.0 },
            Segment { duration: ramp, accel: a },
        ]
    }
}

/// Brings atoms from rest at height `distance` down to rest at the cavity
/// (`z = 0`), then holds them there for `hold` seconds.
///
/// The profile is accelerate / cruise / decelerate at the limits, or
/// triangular when `a_max * distance < v_max²`.
pub fn plan_trapezoid(distance: f64, limits: &MotionLimits, hold: f64) -> Result<MotionPlan> {
    limits.validate()?;
    require_non_negative("distance", distance)?;
    require_non_negative("hold", hold)?;
    let mut segments = if distance > 0.0 { moving_profile(distance, limits) } else { Vec::new() };
    if hold > 0.0 {
        segments.push(Segment { duration: hold, accel: 0.0 });
    }
    Ok(MotionPlan {
        segments,
        start_z: distance,
        launch_time: 0.0,
        v_max: limits.v_max,
        a_max: limits.a_max,
    })
}

/// Accelerates down at `a_max` (cruising once `v_max` is reached) and passes
/// through the cavity without braking. The plan ends at `z = 0`.
pub fn plan_pass_through(distance: f64, limits: &MotionLimits) -> Result<MotionPlan> {
    limits.validate()?;
    require_non_negative("distance", distance)?;
    let MotionLimits { v_max: v, a_max: a } = *limits;
    let ramp_distance = v * v / (2.0 * a);
    let segments = if distance <= 0.0 {
        Vec::new()
    } else if distance <= ramp_distance {
        vec![Segment { duration: (2.0 * distance / a).sqrt(), accel: -a }]
    } else {
        vec![
            Segment { duration: v / a, accel: -a },
            Segment { duration: (distance - ramp_distance) / v, accel: 0.0 },
        ]
    };
    Ok(MotionPlan {
        segments,
        start_z: distance,
        launch_time: 0.0,
        v_max: v,
        a_max: a,
    })
}

/// Down to the cavity, hold for `turnaround_hold`, and back up along the
/// mirrored profile to the starting height.
pub fn round_trip_plan(distance: f64, limits: &MotionLimits, turnaround_hold: f64) -> Result<MotionPlan> {
    let mut plan = plan_trapezoid(distance, limits, turnaround_hold)?;
    if distance > 0.0 {
        let back: Vec<Segment> = moving_profile(distance, limits)
            .into_iter()
            .map(|s| Segment { duration: s.duration, accel: -s.accel })
            .collect();
        plan.segments.extend(back);
    }
    Ok(plan)
}

/// Samples the plan every `dt` seconds from launch to the end (inclusive).
pub fn sample_trajectory(plan: &MotionPlan, dt: f64, wavelength: f64) -> Result<Vec<TrajectorySample>> {
    require_positive("dt", dt)?;
    require_positive("wavelength", wavelength)?;
    let duration = plan.duration();
    let n = (duration / dt).floor() as usize;
    let mut out: Vec<TrajectorySample> = (0..=n)
        .map(|i| plan.launch_time + i as f64 * dt)
        .chain(((n as f64) * dt < duration).then_some(plan.end_time()))
        .map(|t| {
            let s = plan.state_at(t);
            TrajectorySample {
                t,
                z: s.z,
                v: s.v,
                delta: detuning_for_velocity(s.v, wavelength),
            }
        })
        .collect();
    out.dedup_by(|a, b| a.t == b.t);
    Ok(out)
}

/// Fraction of trapped atoms left after `t` for a 1/e lifetime.
pub fn survival_fraction(t: f64, lifetime: f64) -> Result<f64> {
    require_non_negative("t", t)?;
    if !(lifetime > 0.0) {
        return Err(Error::invalid("lifetime", format!("must be > 0, got {lifetime}")));
    }
    Ok((-t / lifetime).exp())
}
