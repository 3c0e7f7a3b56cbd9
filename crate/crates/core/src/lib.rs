//! Functional horseshoe smoothing.
//!
//! Locally adaptive trend estimation for a sequence of noisy curves
//! `Y_1(·), …, Y_T(·)`. Each mean curve is expanded in a common cubic
//! B-spline basis, `Z_t(s) = Σ_ℓ b_{tℓ} φ_ℓ(s)`, and the k-th order
//! differences of the coefficient vectors over `t` receive a horseshoe-type
//! global-local shrinkage prior. Posterior inference is by blocked Gibbs
//! sampling; the basis size and difference order are chosen by posterior
//! predictive loss.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases at
//! the crate root fix it to `f64`.
//!
//! ```no_run
//! use fhs::{select, BSplines, Dataset, Domain, McmcConfig, PriorConfig};
//!
//! let ds = Dataset::load("data.csv", Domain::new(1.0, 120.0)?)?;
//! let result = select::select_model(
//!     &ds,
//!     &[5, 9, 13, 17, 21, 25],
//!     &[0],
//!     PriorConfig::default(),
//!     &McmcConfig::default(),
//! )?;
//! println!("L = {}, k = {}", result.best_l, result.best_k);
//! # Ok::<(), fhs::Error>(())
//! ```

pub mod basis;
pub mod data;
pub mod diffs;
mod error;
pub mod metrics;
pub mod rng;
pub mod sampler;
mod scalar;
pub mod select;
pub mod simulate;
pub mod verify;

pub use basis::{BSplineSystem, DesignMatrix};
pub use data::{Domain, FunctionalDataset, Record};
pub use diffs::{Convention, DifferenceOperator};
pub use error::{Error, Result};
pub use sampler::{run_chain, ChainState, CoeffScheme, DrawStore, Init, LocalPrior, McmcConfig, Posterior, PriorConfig};
pub use scalar::Scalar;

pub type Dataset = FunctionalDataset<f64>;
pub type BSplines = BSplineSystem<f64>;
pub type Design = DesignMatrix<f64>;
pub type State = ChainState<f64>;
pub type Draws = DrawStore<f64>;
pub type Prior = PriorConfig<f64>;
pub type Mcmc = McmcConfig<f64>;
/// Exact integer difference operator.
pub type DifferenceMatrix = DifferenceOperator<i64>;
pub type Summary = metrics::PosteriorSummary<f64>;
pub type Moments = select::PosteriorMoments<f64>;
