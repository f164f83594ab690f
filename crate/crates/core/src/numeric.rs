//! Small bracketing solvers shared by the physics modules.
//!
//! Everything here works on a closed bracket and never iterates open-ended,
//! so a result is always inside the caller's interval.

/// Finds a root of `f` in `[lo, hi]` by bisection.
///
/// `f(lo)` and `f(hi)` must not have the same strict sign. Iterates until the
/// midpoint can no longer be distinguished from an endpoint, which for `f64`
/// takes at most ~1100 halvings and in practice ~60.
pub fn bisect<F: FnMut(f64) -> f64>(mut f: F, mut lo: f64, mut hi: f64) -> f64 {
    let mut f_lo = f(lo);
    if f_lo == 0.0 {
        return lo;
    }
    if f(hi) == 0.0 {
        return hi;
    }
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return mid;
        }
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return mid;
        }
        if (f_mid < 0.0) == (f_lo < 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
}

/// Bisection on a logarithmic scale for strictly positive brackets.
///
/// Converges in relative rather than absolute precision, which is what the
/// decade-spanning bistability variables need.
pub fn bisect_log<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64) -> f64 {
    debug_assert!(lo > 0.0 && hi >= lo);
    let u = bisect(|u| f(u.exp()), lo.ln(), hi.ln());
    u.exp().clamp(lo, hi)
}

/// Golden-section search for the minimum of a unimodal function on `[lo, hi]`.
pub fn golden_min<F: FnMut(f64) -> f64>(mut f: F, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..200 {
        if (hi - lo).abs() <= tol {
            break;
        }
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = f(d);
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisect_finds_sqrt2() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0);
        assert!((r - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn bisect_log_relative_precision() {
        let r = bisect_log(|x| x - 1.234e-7, 1e-12, 1e3);
        assert!((r / 1.234e-7 - 1.0).abs() < 1e-13);
    }

    #[test]
    fn golden_min_parabola() {
        let m = golden_min(|x| (x - 0.3).powi(2), -2.0, 5.0, 1e-10);
        assert!((m - 0.3).abs() < 1e-8);
    }
}
