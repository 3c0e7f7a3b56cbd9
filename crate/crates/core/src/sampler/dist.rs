//! Densities and variates used by the block updates. Variates are drawn in
//! `f64`.

use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Draw from `IG(shape, rate)`, density `∝ x^{-shape-1} exp(-rate / x)`.
pub fn inverse_gamma<R: Rng + ?Sized>(shape: f64, rate: f64, rng: &mut R) -> Result<f64> {
    if !(shape > 0.0 && rate > 0.0 && shape.is_finite() && rate.is_finite()) {
        return Err(Error::NonFinite(format!("inverse gamma IG({shape}, {rate})")));
    }
    let g = Gamma::new(shape, 1.0 / rate)
        .map_err(|e| Error::NonFinite(format!("gamma({shape}, {rate}): {e}")))?;
    let x = 1.0 / g.sample(rng);
    if x.is_finite() && x > 0.0 {
        Ok(x)
    } else {
        Err(Error::NonFinite(format!("IG({shape}, {rate}) draw {x}")))
    }
}

pub fn ln_inverse_gamma(x: f64, shape: f64, rate: f64) -> f64 {
    shape * rate.ln() - ln_gamma(shape) - (shape + 1.0) * x.ln() - rate / x
}

pub fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}
