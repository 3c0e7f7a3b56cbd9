//! Marginal prior of a difference under the half-Cauchy local scale.
//!
//! Integrating `λ_t` out of the difference prior leaves, as a function of
//! `z = ‖Φ_t δ_t‖`, a density proportional to
//!
//! ```text
//! π(z) = ∫₀^∞ λ^{-L} (1 + λ²)^{-1} exp(−z² / (2σ²τ²λ²)) dλ.
//! ```
//!
//! With `c = z² / (2σ²τ²)` and `w = √c / λ` (so `w² = c/λ²`),
//!
//! ```text
//! π(z) = c^{-(L+1)/2} ∫₀^∞ w^L e^{−w²} / (1 + w²/c) dw,
//! ```
//!
//! whose integrand is bounded and Gaussian-tailed. The prefactor carries the
//! `z^{-(L+1)}` tail and the pole at the origin.

use quadrature::double_exponential;

use crate::error::{invalid, Error, Result};

pub const RELATIVE_TOLERANCE: f64 = 1e-8;

/// `π(z)` for `L ≥ 1`; `+∞` at `z = 0`.
pub fn marginal_prior_density(z: f64, n_basis: usize, tau: f64, sigma: f64) -> Result<f64> {
    if n_basis == 0 {
        return Err(invalid("L must be at least 1"));
    }
    if !(tau > 0.0 && sigma > 0.0) {
        return Err(invalid("tau and sigma must be positive"));
    }
    if !(z >= 0.0) {
        return Err(invalid("z must be nonnegative"));
    }
    if z == 0.0 {
        return Ok(f64::INFINITY);
    }
    let c = z * z / (2.0 * sigma * sigma * tau * tau);
    let l = n_basis as f64;
    let log_prefactor = -0.5 * (l + 1.0) * c.ln();
    Ok((log_prefactor + scaled_integral(c, n_basis)?.ln()).exp())
}

/// `∫₀^∞ w^L e^{−w²} / (1 + w²/c) dw` by double-exponential quadrature,
/// split at `√c` (where the rational factor turns over) and at the mode of
/// `w^L e^{−w²}`.
pub fn scaled_integral(c: f64, n_basis: usize) -> Result<f64> {
    let l = n_basis as f64;
    let f = |w: f64| {
        if w <= 0.0 {
            return 0.0;
        }
        (l * w.ln() - w * w).exp() / (1.0 + w * w / c)
    };
    let upper = l.sqrt() + 12.0;
    let mut cuts = vec![0.0, c.sqrt().min(upper), (0.5 * l).sqrt(), upper];
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();

    // First pass fixes the scale for the absolute target of the second.
    let rough: f64 = cuts.windows(2).map(|w| double_exponential::integrate(f, w[0], w[1], 1e-6).integral).sum();
    if !(rough > 0.0 && rough.is_finite()) {
        return Err(Error::Quadrature(format!("integral estimate {rough} at c = {c}")));
    }
    let target = 1e-3 * RELATIVE_TOLERANCE * rough;
    let mut total = 0.0;
    let mut err = 0.0;
    for w in cuts.windows(2) {
        let out = double_exponential::integrate(f, w[0], w[1], target);
        total += out.integral;
        err += out.error_estimate;
    }
    if !(err <= RELATIVE_TOLERANCE * total) {
        return Err(Error::Quadrature(format!("error estimate {err:e} for integral {total:e} at c = {c}")));
    }
    Ok(total)
}

/// Least-squares slope of `ln π` against `ln z` over log-spaced `z`.
pub fn tail_slope(n_basis: usize, tau: f64, sigma: f64, z_lo: f64, z_hi: f64, points: usize) -> Result<f64> {
    if points < 2 || !(z_lo > 0.0 && z_hi > z_lo) {
        return Err(invalid("tail slope needs at least two points on a positive range"));
    }
    let mut xs = Vec::with_capacity(points);
    let mut ys = Vec::with_capacity(points);
    for i in 0..points {
        let x = z_lo.ln() + (z_hi / z_lo).ln() * i as f64 / (points - 1) as f64;
        xs.push(x);
        ys.push(marginal_prior_density(x.exp(), n_basis, tau, sigma)?.ln());
    }
    let mx = xs.iter().sum::<f64>() / points as f64;
    let my = ys.iter().sum::<f64>() / points as f64;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Ok(sxy / sxx)
}
