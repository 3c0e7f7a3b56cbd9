use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::scalar::Scalar;
use crate::sampler::ChainState;

/// Prior on the local scales `λ_t`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LocalPrior {
    /// `λ_t ~ C⁺(0, 1)`, sampled through the inverse-gamma augmentation.
    HalfCauchy,
    /// `λ_t ~ Exp(1)`: the Laplace-like alternative.
    Exponential,
}

/// How the coefficient matrix is refreshed within a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum CoeffScheme {
    /// All `b_t` at once from their joint Gaussian conditional.
    #[default]
    Joint,
    /// `b_1, …, b_T` one at a time, each from its own conditional.
    Sweep,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriorConfig<F> {
    /// Difference order `k` (0 or 1).
    pub order: usize,
    pub a_sigma: F,
    pub b_sigma: F,
    pub local_prior: LocalPrior,
    /// Scale each difference variance by the time gap `h_t` (k = 0 only).
    pub use_gaps: bool,
    /// When set, the Gram matrices inside the difference prior get
    /// `eps * trace(G) / L` added to their diagonal.
    pub gram_jitter: Option<F>,
    /// Proper prior `b_t ~ N(0, v (Φ_tᵀΦ_t)⁻¹)` on the first `k + 1`
    /// coefficient vectors. `None` keeps them flat.
    pub level_prior_var: Option<F>,
}

impl<F: Scalar> Default for PriorConfig<F> {
    fn default() -> Self {
        Self {
            order: 0,
            a_sigma: F::one(),
            b_sigma: F::one(),
            local_prior: LocalPrior::HalfCauchy,
            use_gaps: false,
            gram_jitter: None,
            level_prior_var: None,
        }
    }
}

impl<F: Scalar> PriorConfig<F> {
    pub fn validate(&self) -> Result<()> {
        if self.order > 1 {
            return Err(invalid(format!("sampler supports k in {{0, 1}}, got {}", self.order)));
        }
        if !(self.a_sigma > F::zero() && self.b_sigma > F::zero()) {
            return Err(invalid("a_sigma and b_sigma must be positive"));
        }
        if self.use_gaps && self.order != 0 {
            return Err(invalid("irregular time gaps are supported for k = 0 only"));
        }
        if let Some(eps) = self.gram_jitter {
            if !(eps > F::zero() && eps.finite()) {
                return Err(invalid("gram jitter must be positive"));
            }
        }
        if let Some(v) = self.level_prior_var {
            if !(v > F::zero() && v.finite()) {
                return Err(invalid("level prior variance must be positive"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub enum Init<F: Scalar> {
    /// Ridge fit per time, unit scales, residual-variance `σ²`.
    #[default]
    Default,
    Supplied(ChainState<F>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct McmcConfig<F: Scalar> {
    pub n_burn: usize,
    /// Post burn-in sweeps; every `thin`-th one is retained.
    pub n_draws: usize,
    pub thin: usize,
    pub seed: u64,
    /// Selects the random stream under `seed`; see [`crate::rng`].
    pub chain_id: u64,
    pub init: Init<F>,
    pub scheme: CoeffScheme,
}

impl<F: Scalar> Default for McmcConfig<F> {
    fn default() -> Self {
        Self { n_burn: 3000, n_draws: 3000, thin: 1, seed: 0, chain_id: 0, init: Init::Default, scheme: CoeffScheme::Joint }
    }
}

impl<F: Scalar> McmcConfig<F> {
    pub fn validate(&self) -> Result<()> {
        if self.n_draws == 0 || self.thin == 0 {
            return Err(invalid("n_draws and thin must be at least 1"));
        }
        if self.n_draws < self.thin {
            return Err(invalid("n_draws must be at least thin"));
        }
        Ok(())
    }

    pub fn retained(&self) -> usize {
        self.n_draws / self.thin
    }
}
