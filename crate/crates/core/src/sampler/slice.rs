//! Univariate slice sampling with the doubling and shrinkage procedures
//! (Neal, 2003), used for the non-conjugate `λ_t` update.

use rand::Rng;

use crate::error::{Error, Result};

pub const MAX_DOUBLINGS: usize = 1000;

/// One slice-sampling transition from `x0` for the log density `log_f`.
pub fn slice_step<R, G>(x0: f64, mut log_f: G, width: f64, rng: &mut R) -> Result<f64>
where
    R: Rng + ?Sized,
    G: FnMut(f64) -> f64,
{
    let f0 = log_f(x0);
    if !f0.is_finite() {
        return Err(Error::Slice(format!("log density at start point {x0} is {f0}")));
    }
    let level = f0 + rng.random::<f64>().ln();

    let mut left = x0 - width * rng.random::<f64>();
    let mut right = left + width;
    let (mut f_left, mut f_right) = (log_f(left), log_f(right));
    let mut doublings = 0;
    while level < f_left || level < f_right {
        if doublings == MAX_DOUBLINGS {
            return Err(Error::Slice(format!("bracket not found after {MAX_DOUBLINGS} doublings")));
        }
        doublings += 1;
        let w = right - left;
        if rng.random::<f64>() < 0.5 {
            left -= w;
            f_left = log_f(left);
        } else {
            right += w;
            f_right = log_f(right);
        }
        if !(left.is_finite() && right.is_finite()) {
            return Err(Error::Slice("bracket overflowed".into()));
        }
    }

    let (mut lo, mut hi) = (left, right);
    loop {
        let x1 = lo + rng.random::<f64>() * (hi - lo);
        let f1 = log_f(x1);
        if level < f1 && accept(x0, x1, level, left, right, width, &mut log_f) {
            return Ok(x1);
        }
        if x1 < x0 {
            lo = x1;
        } else {
            hi = x1;
        }
        if hi - lo <= f64::EPSILON * x0.abs().max(1.0) {
            return Ok(x0);
        }
    }
}

/// Acceptance test guaranteeing reversibility of the doubling bracket.
fn accept<G: FnMut(f64) -> f64>(
    x0: f64,
    x1: f64,
    level: f64,
    mut left: f64,
    mut right: f64,
    width: f64,
    log_f: &mut G,
) -> bool {
    let mut differ = false;
    while right - left > 1.1 * width {
        let mid = 0.5 * (left + right);
        if (x0 < mid) != (x1 < mid) {
            differ = true;
        }
        if x1 < mid {
            right = mid;
        } else {
            left = mid;
        }
        if differ && level >= log_f(left) && level >= log_f(right) {
            return false;
        }
    }
    true
}
