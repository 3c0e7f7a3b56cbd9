//! Blocked Gibbs sampler for functional horseshoe smoothing.

pub mod banded;
mod config;
pub mod dist;
mod posterior;
pub mod slice;
mod state;
mod store;

pub use config::{CoeffScheme, Init, LocalPrior, McmcConfig, PriorConfig};
pub use posterior::{gaussian_log_kernel, quad_floor, Posterior};
pub use state::ChainState;
pub use store::{Draw, DrawStore, MAGIC};

use crate::basis::{BSplineSystem, DesignMatrix};
use crate::data::FunctionalDataset;
use crate::error::Result;
use crate::rng::{self, streams};
use crate::scalar::Scalar;

/// Run one chain: `n_burn + n_draws` sweeps, keeping every `thin`-th
/// post burn-in state. The random stream is `(mcmc.seed, CHAIN + chain_id)`.
pub fn run_chain<F: Scalar>(
    data: &FunctionalDataset<F>,
    system: &BSplineSystem<F>,
    cfg: PriorConfig<F>,
    mcmc: &McmcConfig<F>,
) -> Result<DrawStore<F>> {
    let designs = system.designs(data)?;
    run_chain_with_designs(data, &designs, cfg, mcmc)
}

pub fn run_chain_with_designs<F: Scalar>(
    data: &FunctionalDataset<F>,
    designs: &[DesignMatrix<F>],
    cfg: PriorConfig<F>,
    mcmc: &McmcConfig<F>,
) -> Result<DrawStore<F>> {
    mcmc.validate()?;
    let post = Posterior::new(data, designs, cfg)?;
    let mut state = match &mcmc.init {
        Init::Default => post.default_state()?,
        Init::Supplied(s) => s.clone(),
    };
    state.validate(post.n_times(), post.n_basis(), post.n_diffs())?;

    let mut rng = rng::stream(mcmc.seed, streams::CHAIN.wrapping_add(mcmc.chain_id));
    let mut store = DrawStore::new(post.n_times(), post.n_basis(), cfg.order);
    for _ in 0..mcmc.n_burn {
        post.sweep_with(&mut state, &mut rng, mcmc.scheme)?;
    }
    for i in 1..=mcmc.n_draws {
        post.sweep_with(&mut state, &mut rng, mcmc.scheme)?;
        if i % mcmc.thin == 0 {
            store.push(Draw {
                iteration: (mcmc.n_burn + i) as u64,
                sigma2: state.sigma2,
                tau2: state.tau2,
                lambda2: state.lambda2.clone(),
                coeffs: state.coeffs.clone(),
            })?;
        }
    }
    Ok(store)
}
