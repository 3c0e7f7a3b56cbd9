use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Every sampled quantity of one chain.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainState<F: Scalar> {
    /// `T × L`, row `t` is `b_t`.
    pub coeffs: DMatrix<F>,
    /// `λ_t²`, one per difference.
    pub lambda2: Vec<F>,
    /// Auxiliaries of the half-Cauchy augmentation for `λ_t²`.
    pub nu: Vec<F>,
    pub tau2: F,
    /// Auxiliary of the half-Cauchy augmentation for `τ²`.
    pub xi: F,
    pub sigma2: F,
}

impl<F: Scalar> ChainState<F> {
    pub fn n_times(&self) -> usize {
        self.coeffs.nrows()
    }

    pub fn n_basis(&self) -> usize {
        self.coeffs.ncols()
    }

    pub fn validate(&self, n_times: usize, n_basis: usize, n_diffs: usize) -> Result<()> {
        if self.coeffs.shape() != (n_times, n_basis) {
            return Err(Error::Shape(format!(
                "coefficients are {:?}, expected ({n_times}, {n_basis})",
                self.coeffs.shape()
            )));
        }
        if self.lambda2.len() != n_diffs || self.nu.len() != n_diffs {
            return Err(Error::Shape(format!("expected {n_diffs} local scales")));
        }
        if self.coeffs.iter().any(|v| !v.finite()) {
            return Err(Error::NonFinite("coefficient".into()));
        }
        let positive = |v: &F| *v > F::zero() && v.finite();
        if !self.lambda2.iter().chain(&self.nu).all(positive)
            || ![self.tau2, self.xi, self.sigma2].iter().all(positive)
        {
            return Err(Error::NonFinite("variance parameters must be positive and finite".into()));
        }
        Ok(())
    }
}
