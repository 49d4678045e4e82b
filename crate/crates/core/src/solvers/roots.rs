//! Bracketed bisection.

/// Stopping rule for [`bisect`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bisection {
    /// Absolute width of the final bracket.
    pub tolerance: f64,
    pub max_iterations: u32,
}

impl Default for Bisection {
    fn default() -> Self {
        Self { tolerance: 1e-12, max_iterations: 200 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root {
    pub x: f64,
    pub iterations: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
#[error("no sign change on [{lo}, {hi}]")]
pub struct NoSignChange {
    pub lo: f64,
    pub hi: f64,
}

/// Finds a zero of `f` on `[lo, hi]`, which must bracket a sign change.
pub fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, rule: Bisection) -> Result<Root, NoSignChange> {
    let mut f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == 0.0 {
        return Ok(Root { x: lo, iterations: 0 });
    }
    if f_hi == 0.0 {
        return Ok(Root { x: hi, iterations: 0 });
    }
    if f_lo.is_nan() || f_hi.is_nan() || (f_lo > 0.0) == (f_hi > 0.0) {
        return Err(NoSignChange { lo, hi });
    }
    let mut iterations = 0;
    while iterations < rule.max_iterations && hi - lo > rule.tolerance {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        iterations += 1;
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return Ok(Root { x: mid, iterations });
        }
        if (f_mid > 0.0) == (f_lo > 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Ok(Root { x: 0.5 * (lo + hi), iterations })
}
