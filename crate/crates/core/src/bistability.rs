//! Steady-state absorptive optical bistability.
//!
//! The state equation relating normalized output X to normalized input Y for
//! cooperativity C and normalized cavity detuning d is
//!
//! ```text
//! Y = X [ (1 + 2 C chi(X))² + d² ],   chi(X) = 3 ln[(1 + sqrt(1 + 8X/3)) / 2] / (2X)
//! ```
//!
//! Everything in this module is dimensionless. Conversion between optical
//! powers and (X, Y) lives in [`crate::transit`].
//!
//! # Turning points
//!
//! Writing `L(X) = ln[(1 + s)/2]` with `s = sqrt(1 + 8X/3)`, the slope is
//!
//! ```text
//! dY/dX = (1 + 2C chi)² + d² + 4C (1 + 2C chi)(3/2 L' - chi)
//! ```
//!
//! and `dY/dX = 0` rearranges to a quadratic in C:
//!
//! ```text
//! 4 chi (chi - 3 L') C² - 6 L' C - (1 + d²) = 0
//! ```
//!
//! So every X above `X0` (where `chi = 3 L'`) is a turning point for exactly
//! one cooperativity `C_turn(X)`. `C_turn` is U-shaped: its minimum is the
//! bistability threshold (the cusp) and, for C above it, the two preimages are
//! the two turning points. Root counting is then exact: brackets come from
//! the turning points and bounds `y/((1+2C)²+d²) <= x <= y/(1+d²)`, and every
//! root is refined by bisection.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{bisect, bisect_log, golden_min};

/// Below this X, chi is evaluated from its Taylor series.
pub const CHI_SERIES_CUTOFF: f64 = 1e-4;

/// Relative distance to a turning-point input under which a root pair is
/// reported as a single degenerate root.
const DEGENERACY_TOL: f64 = 1e-12;

/// chi(X) without argument checks. `x` must be >= 0.
#[inline]
pub(crate) fn chi_raw(x: f64) -> f64 {
    if x < CHI_SERIES_CUTOFF {
        // 1 - X + 40/27 X² - 70/27 X³ + 224/45 X⁴ + O(X⁵)
        1.0 + x * (-1.0 + x * (40.0 / 27.0 + x * (-70.0 / 27.0 + x * (224.0 / 45.0))))
    } else {
        let u = 8.0 * x / 3.0;
        let s = (1.0 + u).sqrt();
        // ln((1+s)/2) = ln(1 + (s-1)/2) and s - 1 = u/(1+s)
        3.0 * (u / (2.0 * (1.0 + s))).ln_1p() / (2.0 * x)
    }
}

/// dL/dX with L = ln((1+s)/2).
#[inline]
fn log_term_slope(x: f64) -> f64 {
    let s = (1.0 + 8.0 * x / 3.0).sqrt();
    (4.0 / 3.0) / (s * (1.0 + s))
}

/// Saturation factor chi(X); 1 at X = 0, strictly decreasing toward 0.
pub fn chi(x: f64) -> Result<f64> {
    if !(x >= 0.0) || !x.is_finite() {
        return Err(Error::invalid("x", format!("chi needs a finite X >= 0, got {x}")));
    }
    Ok(chi_raw(x))
}

#[inline]
fn input_raw(x: f64, coop: f64, d: f64) -> f64 {
    let a = 1.0 + 2.0 * coop * chi_raw(x);
    x * (a * a + d * d)
}

#[inline]
fn slope_raw(x: f64, coop: f64, d: f64) -> f64 {
    let ch = chi_raw(x);
    let a = 1.0 + 2.0 * coop * ch;
    a * a + d * d + 4.0 * coop * a * (1.5 * log_term_slope(x) - ch)
}

fn check_curve(coop: f64, d: f64) -> Result<()> {
    if !(coop >= 0.0) || !coop.is_finite() {
        return Err(Error::invalid("coop", format!("must be finite and >= 0, got {coop}")));
    }
    if !d.is_finite() {
        return Err(Error::invalid("d", "must be finite"));
    }
    Ok(())
}

/// Normalized input Y that produces output `x`.
pub fn input_for_output(x: f64, coop: f64, d: f64) -> Result<f64> {
    check_curve(coop, d)?;
    chi(x)?;
    Ok(input_raw(x, coop, d))
}

/// Analytic dY/dX.
pub fn slope(x: f64, coop: f64, d: f64) -> Result<f64> {
    check_curve(coop, d)?;
    chi(x)?;
    Ok(slope_raw(x, coop, d))
}

/// Cooperativity for which `x` is a turning point of the S-curve at detuning
/// `d`, or `None` when no positive C makes `x` a turning point.
pub fn turning_cooperativity(x: f64, d: f64) -> Option<f64> {
    let ch = chi_raw(x);
    let lp = log_term_slope(x);
    let a = 4.0 * ch * (ch - 3.0 * lp);
    if !(a > 0.0) {
        return None;
    }
    let b = 6.0 * lp;
    Some((b + (b * b + 4.0 * a * (1.0 + d * d)).sqrt()) / (2.0 * a))
}

/// Lower edge of the X range that can host a turning point (chi = 3 L').
pub fn turning_region_start() -> f64 {
    static X0: OnceLock<f64> = OnceLock::new();
    *X0.get_or_init(|| bisect(|x| chi_raw(x) - 3.0 * log_term_slope(x), 1.0, 10.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Lower,
    Upper,
    Unstable,
}

impl Branch {
    pub fn as_str(self) -> &'static str {
        match self {
            Branch::Lower => "lower",
            Branch::Upper => "upper",
            Branch::Unstable => "unstable",
        }
    }

    pub fn is_stable(self) -> bool {
        !matches!(self, Branch::Unstable)
    }
}

/// Which turning point a switch happens at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SwitchEdge {
    /// The lower branch ends (input reaches y_a); output jumps up.
    Up,
    /// The upper branch ends (input falls to y_b); output drops.
    Down,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OperatingPoint {
    pub x: f64,
    pub y: f64,
    pub coop: f64,
    pub d: f64,
    pub branch: Branch,
    /// Set when `y` sits on a turning point and two roots coincide.
    pub degenerate: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TurningPoint {
    pub x: f64,
    pub y: f64,
}

/// The two turning points of a bistable S-curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TurningPoints {
    /// Local maximum of Y(X): end of the lower branch, the up-switch input.
    pub up: TurningPoint,
    /// Local minimum of Y(X): end of the upper branch, the down-switch input.
    pub down: TurningPoint,
}

impl TurningPoints {
    pub fn input(&self, edge: SwitchEdge) -> f64 {
        match edge {
            SwitchEdge::Up => self.up.y,
            SwitchEdge::Down => self.down.y,
        }
    }

    /// Width of the hysteresis loop, y_up / y_down.
    pub fn input_ratio(&self) -> f64 {
        self.up.y / self.down.y
    }
}

/// The cusp of the S-curve family at fixed detuning: the smallest
/// cooperativity with a bistable region, and where it appears.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Cusp {
    pub coop: f64,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SCurveSample {
    pub x: f64,
    pub y: f64,
    /// Sign of dY/dX: +1 on stable stretches, -1 on the unstable one.
    pub slope_sign: i8,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SCurve {
    pub coop: f64,
    pub d: f64,
    pub samples: Vec<SCurveSample>,
    pub turning_points: Option<TurningPoints>,
}

/// Root solver for one detuning. Caches the cusp so that repeated solves at
/// varying C and Y only pay for the turning points and the roots.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bistability {
    d: f64,
    cusp: Cusp,
}

impl Bistability {
    pub fn new(d: f64) -> Result<Self> {
        check_curve(0.0, d)?;
        let x0 = turning_region_start();
        let c_of = |u: f64| turning_cooperativity(x0 + u.exp(), d).unwrap_or(f64::INFINITY);
        // C_turn is unimodal in X; search over ln(X - X0).
        let u = golden_min(c_of, (1e-8f64).ln(), (1e8f64).ln(), 1e-12);
        let x = x0 + u.exp();
        let coop = turning_cooperativity(x, d).expect("cusp lies inside the turning region");
        Ok(Bistability {
            d,
            cusp: Cusp {
                coop,
                x,
                y: input_raw(x, coop, d),
            },
        })
    }

    pub fn detuning(&self) -> f64 {
        self.d
    }

    pub fn cusp(&self) -> Cusp {
        self.cusp
    }

    /// Smallest C that admits two stable outputs for some input.
    pub fn threshold(&self) -> f64 {
        self.cusp.coop
    }

    pub fn input(&self, x: f64, coop: f64) -> f64 {
        input_raw(x, coop, self.d)
    }

    pub fn slope(&self, x: f64, coop: f64) -> f64 {
        slope_raw(x, coop, self.d)
    }

    pub fn turning_points(&self, coop: f64) -> Option<TurningPoints> {
        if !(coop >= self.cusp.coop) {
            return None;
        }
        let d = self.d;
        let c_turn = |x: f64| turning_cooperativity(x, d).unwrap_or(f64::INFINITY);
        if coop == self.cusp.coop {
            let p = TurningPoint { x: self.cusp.x, y: self.cusp.y };
            return Some(TurningPoints { up: p, down: p });
        }
        // Left arm: C_turn falls from +inf at X0 to the cusp value.
        let x_up = bisect(|x| c_turn(x) - coop, turning_region_start(), self.cusp.x);
        // Right arm: C_turn grows without bound.
        let mut hi = self.cusp.x * 2.0;
        while c_turn(hi) < coop {
            hi *= 2.0;
        }
        let x_down = bisect_log(|x| c_turn(x) - coop, self.cusp.x, hi);
        Some(TurningPoints {
            up: TurningPoint { x: x_up, y: self.input(x_up, coop) },
            down: TurningPoint { x: x_down, y: self.input(x_down, coop) },
        })
    }

    /// All steady states for input `y`, sorted by increasing output.
    pub fn solve(&self, y: f64, coop: f64) -> Vec<OperatingPoint> {
        let tp = self.turning_points(coop);
        self.solve_with(y, coop, tp.as_ref())
    }

    pub(crate) fn solve_with(&self, y: f64, coop: f64, tp: Option<&TurningPoints>) -> Vec<OperatingPoint> {
        let d = self.d;
        let point = |x: f64, branch: Branch, degenerate: bool| OperatingPoint {
            x,
            y,
            coop,
            d,
            branch,
            degenerate,
        };
        if y == 0.0 {
            return vec![point(0.0, Branch::Lower, false)];
        }
        let weak = 1.0 + 2.0 * coop;
        let lo_all = y / (weak * weak + d * d);
        let hi_all = y / (1.0 + d * d);
        let root = |lo: f64, hi: f64| bisect_log(|x| self.input(x, coop) - y, lo, hi.max(lo));

        let Some(tp) = tp else {
            let x = root(lo_all, hi_all);
            let branch = if x < self.cusp.x { Branch::Lower } else { Branch::Upper };
            return vec![point(x, branch, false)];
        };

        let near = |a: f64| (y - a).abs() <= DEGENERACY_TOL * a;
        let mut out = Vec::with_capacity(3);
        if near(tp.up.y) {
            out.push(point(tp.up.x, Branch::Lower, true));
        } else if y < tp.up.y {
            out.push(point(root(lo_all, tp.up.x.min(hi_all)), Branch::Lower, false));
            if y > tp.down.y && !near(tp.down.y) {
                out.push(point(root(tp.up.x, tp.down.x), Branch::Unstable, false));
            }
        }
        if near(tp.down.y) {
            out.push(point(tp.down.x, Branch::Upper, true));
        } else if y > tp.down.y {
            out.push(point(root(tp.down.x, hi_all.max(tp.down.x)), Branch::Upper, false));
        }
        out
    }

    /// Samples the S-curve on a log grid in X.
    pub fn s_curve(&self, coop: f64, x_min: f64, x_max: f64, n: usize) -> SCurve {
        let n = n.max(2);
        let (l0, l1) = (x_min.ln(), x_max.ln());
        let samples = (0..n)
            .map(|i| {
                let x = (l0 + (l1 - l0) * i as f64 / (n - 1) as f64).exp();
                SCurveSample {
                    x,
                    y: self.input(x, coop),
                    slope_sign: if self.slope(x, coop) < 0.0 { -1 } else { 1 },
                }
            })
            .collect();
        SCurve {
            coop,
            d: self.d,
            samples,
            turning_points: self.turning_points(coop),
        }
    }

    /// Cooperativity at which input `y` sits exactly on the `edge` turning
    /// point, i.e. where that branch is created or lost.
    ///
    /// Parametrizes the turning-point locus by X: on the left arm of
    /// `C_turn` for [`SwitchEdge::Up`], on the right arm for
    /// [`SwitchEdge::Down`], and bisects Y(X, C_turn(X)) = y.
    pub fn switch_cooperativity(&self, y: f64, edge: SwitchEdge) -> Result<f64> {
        if !(y >= self.cusp.y) || !y.is_finite() {
            return Err(Error::BelowSwitchingRange { y, y_min: self.cusp.y });
        }
        let d = self.d;
        let locus = |x: f64| match turning_cooperativity(x, d) {
            Some(c) => input_raw(x, c, d) - y,
            None => f64::INFINITY,
        };
        let x = match edge {
            SwitchEdge::Up => bisect(locus, turning_region_start(), self.cusp.x),
            SwitchEdge::Down => {
                let mut hi = self.cusp.x * 2.0;
                while locus(hi) < 0.0 {
                    hi *= 2.0;
                }
                bisect_log(locus, self.cusp.x, hi)
            }
        };
        turning_cooperativity(x, d).ok_or(Error::BelowSwitchingRange { y, y_min: self.cusp.y })
    }
}

/// All steady states for input `y` at cooperativity `coop` and detuning `d`.
pub fn solve_branches(y: f64, coop: f64, d: f64) -> Result<Vec<OperatingPoint>> {
    check_curve(coop, d)?;
    if !(y >= 0.0) || !y.is_finite() {
        return Err(Error::invalid("y", format!("must be finite and >= 0, got {y}")));
    }
    Ok(Bistability::new(d)?.solve(y, coop))
}

pub fn turning_points(coop: f64, d: f64) -> Result<Option<TurningPoints>> {
    check_curve(coop, d)?;
    Ok(Bistability::new(d)?.turning_points(coop))
}

pub fn bistability_threshold(d: f64) -> Result<f64> {
    Ok(Bistability::new(d)?.threshold())
}

pub fn cooperativity_at_switch(y: f64, d: f64, edge: SwitchEdge) -> Result<f64> {
    Bistability::new(d)?.switch_cooperativity(y, edge)
}

/// A branch change that was forced because the occupied branch vanished.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Switch {
    pub edge: SwitchEdge,
    pub y: f64,
    pub coop: f64,
}

/// Quasi-static state machine over the S-curve.
///
/// The state is the last steady output. On each update the new steady state is
/// the stable root on the same side of the separatrix (the unstable root) as
/// the previous output, so the system stays on its branch while it exists and
/// jumps only when it disappears.
#[derive(Debug, Clone, Copy)]
pub struct BranchFollower {
    solver: Bistability,
    state: Option<OperatingPoint>,
}

impl BranchFollower {
    pub fn new(solver: Bistability) -> Self {
        BranchFollower { solver, state: None }
    }

    /// Starts from the output `x` (e.g. 0 for probe off, or the empty-cavity
    /// response for a probe already on).
    pub fn with_state(solver: Bistability, x: f64) -> Self {
        BranchFollower {
            solver,
            state: Some(OperatingPoint {
                x,
                y: f64::NAN,
                coop: f64::NAN,
                d: solver.d,
                branch: Branch::Lower,
                degenerate: false,
            }),
        }
    }

    pub fn solver(&self) -> &Bistability {
        &self.solver
    }

    pub fn state(&self) -> Option<&OperatingPoint> {
        self.state.as_ref()
    }

    pub fn update(&mut self, y: f64, coop: f64) -> (OperatingPoint, Option<Switch>) {
        let tp = self.solver.turning_points(coop);
        let roots = self.solver.solve_with(y, coop, tp.as_ref());
        let prev = self.state;
        let chosen = match (prev, roots.len()) {
            (_, 1) | (None, _) => roots[0],
            (Some(p), _) => {
                let separatrix = roots
                    .iter()
                    .find(|r| r.branch == Branch::Unstable)
                    .or_else(|| roots.iter().find(|r| r.degenerate))
                    .map(|r| r.x)
                    .unwrap_or(f64::NAN);
                let stable = roots.iter().filter(|r| r.branch.is_stable());
                if p.x <= separatrix {
                    *stable.min_by(|a, b| a.x.total_cmp(&b.x)).unwrap()
                } else {
                    *stable.max_by(|a, b| a.x.total_cmp(&b.x)).unwrap()
                }
            }
        };
        let switched = match (prev, tp) {
            (Some(p), Some(tp)) if p.y.is_finite() && p.branch != chosen.branch => {
                let lost_lower = p.branch == Branch::Lower && y > tp.up.y;
                let lost_upper = p.branch == Branch::Upper && y < tp.down.y;
                if lost_lower {
                    Some(Switch { edge: SwitchEdge::Up, y: tp.up.y, coop })
                } else if lost_upper {
                    Some(Switch { edge: SwitchEdge::Down, y: tp.down.y, coop })
                } else {
                    None
                }
            }
            _ => None,
        };
        self.state = Some(chosen);
        (chosen, switched)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HysteresisTrace {
    pub ramp: Vec<f64>,
    pub response: Vec<OperatingPoint>,
    /// Input at which the lower branch was lost on the way up.
    pub switch_up_y: Option<f64>,
    /// Input at which the upper branch was lost on the way down.
    pub switch_down_y: Option<f64>,
    /// Index of the ramp maximum; samples up to it form the rising half.
    pub peak_index: usize,
}

impl HysteresisTrace {
    /// switch_up_y / switch_down_y, or 1 when the sweep never switched.
    pub fn switch_ratio(&self) -> f64 {
        match (self.switch_up_y, self.switch_down_y) {
            (Some(u), Some(d)) => u / d,
            _ => 1.0,
        }
    }
}

fn validate_ramp(ramp: &[f64]) -> Result<usize> {
    if ramp.is_empty() || ramp[0] != 0.0 {
        return Err(Error::NonMonotoneRamp { index: 0 });
    }
    if let Some(i) = ramp.iter().position(|y| !(*y >= 0.0) || !y.is_finite()) {
        return Err(Error::NonMonotoneRamp { index: i });
    }
    let mut peak = 0;
    while peak + 1 < ramp.len() && ramp[peak + 1] >= ramp[peak] {
        peak += 1;
    }
    for i in peak + 1..ramp.len() {
        if ramp[i] > ramp[i - 1] {
            return Err(Error::NonMonotoneRamp { index: i });
        }
    }
    if *ramp.last().unwrap() != 0.0 {
        return Err(Error::NonMonotoneRamp { index: ramp.len() - 1 });
    }
    Ok(peak)
}

/// Quasi-static response to an input ramp that rises from 0 and returns to 0.
///
/// Switch inputs are reported at the exact turning points rather than at the
/// first ramp sample past them.
pub fn hysteresis_sweep(coop: f64, d: f64, ramp: &[f64]) -> Result<HysteresisTrace> {
    check_curve(coop, d)?;
    let peak_index = validate_ramp(ramp)?;
    let mut follower = BranchFollower::with_state(Bistability::new(d)?, 0.0);
    let mut response = Vec::with_capacity(ramp.len());
    let (mut up, mut down) = (None, None);
    for &y in ramp {
        let (p, switched) = follower.update(y, coop);
        match switched {
            Some(Switch { edge: SwitchEdge::Up, y, .. }) => up = up.or(Some(y)),
            Some(Switch { edge: SwitchEdge::Down, y, .. }) => down = down.or(Some(y)),
            None => {}
        }
        response.push(p);
    }
    Ok(HysteresisTrace {
        ramp: ramp.to_vec(),
        response,
        switch_up_y: up,
        switch_down_y: down,
        peak_index,
    })
}

/// Triangular ramp 0 -> `y_max` -> 0 with `n` points per half, log spaced
/// above `y_max * 1e-6` so that every decade is resolved.
pub fn triangular_ramp(y_max: f64, n: usize) -> Vec<f64> {
    let n = n.max(2);
    let lo = (y_max * 1e-6).ln();
    let hi = y_max.ln();
    let mut up: Vec<f64> = (0..n)
        .map(|i| (lo + (hi - lo) * i as f64 / (n - 1) as f64).exp())
        .collect();
    up.insert(0, 0.0);
    let mut ramp = up.clone();
    ramp.extend(up.iter().rev().skip(1));
    ramp
}

#[cfg(test)]
mod tests {
    use super::*;

    const D_PAPER: f64 = 4.0 / 2.4;

    #[test]
    fn chi_limits_and_closed_forms() {
        assert_eq!(chi(0.0).unwrap(), 1.0);
        assert!((chi(3.0).unwrap() - 0.5 * 2f64.ln()).abs() < 1e-15);
        assert!(chi(-1.0).is_err());
        assert!(chi(f64::NAN).is_err());
    }

    #[test]
    fn chi_against_high_precision() {
        // 50-digit mpmath evaluations of 3 ln((1+sqrt(1+8x/3))/2) / (2x)
        let cases = [
            (1e-8, 0.999_999_990_000_000_148_15),
            (1e-5, 0.999_990_000_148_145_555_61),
            (1e-4, 0.999_900_014_812_222_719_9),
            (100.0, 0.032_415_773_605_120_030_046),
            (1e6, 1.005_845_264_598_821_6e-5),
        ];
        for (x, want) in cases {
            let got = chi(x).unwrap();
            assert!(((got - want) / want).abs() < 1e-14, "x={x}: {got} vs {want}");
        }
    }

    #[test]
    fn chi_series_crossover_is_continuous() {
        let below = chi_raw(CHI_SERIES_CUTOFF * (1.0 - 1e-12));
        let above = chi_raw(CHI_SERIES_CUTOFF);
        assert!((below - above).abs() < 1e-15);
    }

    #[test]
    fn input_for_output_examples() {
        // mpmath: 1e-6 * (1 + 2*50.6*chi(1e-6))^2
        let y = input_for_output(1e-6, 50.6, 0.0).unwrap();
        assert!((y / 0.010_444_819_314_760_886 - 1.0).abs() < 1e-12);
        let y = input_for_output(1.0, 200.0, D_PAPER).unwrap();
        assert!((y / 51_533.401_156_790_150 - 1.0).abs() < 1e-13);
        for x in [0.0, 1e-3, 2.0, 4e5] {
            assert_eq!(input_for_output(x, 0.0, 0.0).unwrap(), x);
        }
    }

    #[test]
    fn linear_cavity_single_root() {
        let roots = solve_branches(7.5, 0.0, 2.0).unwrap();
        assert_eq!(roots.len(), 1);
        assert!((roots[0].x / (7.5 / 5.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn three_roots_inside_the_loop() {
        let s = Bistability::new(D_PAPER).unwrap();
        let tp = s.turning_points(200.0).unwrap();
        let y = (tp.up.y * tp.down.y).sqrt();
        let roots = s.solve(y, 200.0);
        let branches: Vec<_> = roots.iter().map(|r| r.branch).collect();
        assert_eq!(branches, [Branch::Lower, Branch::Unstable, Branch::Upper]);
        for r in &roots {
            assert!((s.input(r.x, 200.0) / y - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn degenerate_at_turning_point() {
        let s = Bistability::new(D_PAPER).unwrap();
        let tp = s.turning_points(200.0).unwrap();
        let roots = s.solve(tp.up.y, 200.0);
        assert_eq!(roots.len(), 2);
        assert!(roots[0].degenerate);
        assert_eq!(roots[0].x, tp.up.x);
    }

    #[test]
    fn below_threshold_no_turning_points() {
        assert!(turning_points(0.0, 0.0).unwrap().is_none());
        assert!(turning_points(5.0, 0.0).unwrap().is_none());
        let tp = turning_points(200.0, D_PAPER).unwrap().unwrap();
        assert!(tp.up.y > tp.down.y);
        assert!(tp.up.x < tp.down.x);
    }

    #[test]
    fn turning_points_have_zero_slope() {
        let s = Bistability::new(D_PAPER).unwrap();
        for c in [20.0, 200.0, 5400.0] {
            let tp = s.turning_points(c).unwrap();
            let scale = (1.0 + 2.0 * c).powi(2) + D_PAPER * D_PAPER;
            for p in [tp.up, tp.down] {
                assert!(s.slope(p.x, c).abs() / scale < 1e-8, "C={c} {p:?}");
            }
        }
    }

    #[test]
    fn threshold_values() {
        let t0 = bistability_threshold(0.0).unwrap();
        assert!((t0 - 10.0442).abs() < 1e-3, "{t0}");
        let t1 = bistability_threshold(D_PAPER).unwrap();
        assert!((t1 - 14.3340).abs() < 1e-3, "{t1}");
    }

    #[test]
    fn threshold_turning_region_start() {
        assert!((turning_region_start() - 2.580_547_686).abs() < 1e-8);
    }

    #[test]
    fn switch_cooperativity_round_trip() {
        let s = Bistability::new(D_PAPER).unwrap();
        for c in [20.0, 200.0, 5400.0] {
            let tp = s.turning_points(c).unwrap();
            for edge in [SwitchEdge::Up, SwitchEdge::Down] {
                let back = s.switch_cooperativity(tp.input(edge), edge).unwrap();
                assert!((back / c - 1.0).abs() < 1e-9, "{edge:?} C={c} -> {back}");
            }
        }
    }

    #[test]
    fn switch_below_cusp_is_an_error() {
        let s = Bistability::new(D_PAPER).unwrap();
        let err = s.switch_cooperativity(s.cusp().y * 0.5, SwitchEdge::Down).unwrap_err();
        assert!(matches!(err, Error::BelowSwitchingRange { .. }));
    }

    #[test]
    fn hysteresis_linear_without_atoms() {
        let ramp = triangular_ramp(1e4, 50);
        let trace = hysteresis_sweep(0.0, D_PAPER, &ramp).unwrap();
        assert_eq!(trace.switch_ratio(), 1.0);
        for p in &trace.response {
            assert!((p.x * (1.0 + D_PAPER * D_PAPER) - p.y).abs() <= 1e-9 * p.y.max(1e-300));
        }
    }

    #[test]
    fn hysteresis_switches_at_turning_points() {
        let ramp = triangular_ramp(1e6, 400);
        let trace = hysteresis_sweep(200.0, D_PAPER, &ramp).unwrap();
        let tp = turning_points(200.0, D_PAPER).unwrap().unwrap();
        assert_eq!(trace.switch_up_y, Some(tp.up.y));
        assert_eq!(trace.switch_down_y, Some(tp.down.y));
        assert!(trace.switch_ratio() >= 1.0);
    }

    #[test]
    fn ramp_validation() {
        assert!(hysteresis_sweep(10.0, 0.0, &[0.0, 1.0, 2.0, 1.0, 0.0]).is_ok());
        assert_eq!(
            hysteresis_sweep(10.0, 0.0, &[0.0, 2.0, 1.0, 2.0, 0.0]).unwrap_err(),
            Error::NonMonotoneRamp { index: 3 }
        );
        assert!(hysteresis_sweep(10.0, 0.0, &[1.0, 2.0, 0.0]).is_err());
        assert!(hysteresis_sweep(10.0, 0.0, &[0.0, 2.0, 1.0]).is_err());
    }
}
