//! Joint-distribution test of the Gibbs sampler (Geweke, 2004).
//!
//! Two samplers of `p(θ, y)` are compared on a tiny instance:
//!
//! * marginal-conditional: independent draws `θ ~ p(θ)`, `y ~ p(y | θ)`;
//! * successive-conditional: one Gibbs sweep `θ ~ p(θ | y)` followed by
//!   `y ~ p(y | θ)`, repeated.
//!
//! Both target the same joint, so the means of any test function agree when
//! the conditionals are right. The global scale mixes slowly in the
//! successive-conditional chain, so many short chains are run instead of
//! one long one, each started from a marginal-conditional draw; their chain
//! means are independent and give the standard error directly. The leading coefficient vectors need a proper prior
//! for the joint to exist, so a level prior is always set here.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::Exp1;

use crate::basis::{cholesky, BSplineSystem, DesignMatrix};
use crate::data::{Domain, FunctionalDataset, Record};
use crate::diffs::{Convention, DifferenceOperator};
use crate::error::{invalid, Error, Result};
use crate::rng::{self, streams};
use crate::sampler::dist::{inverse_gamma, standard_normal};
use crate::sampler::{ChainState, CoeffScheme, LocalPrior, Posterior, PriorConfig};

/// Deliberate defects for negative controls.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Fault {
    #[default]
    None,
    /// Adds the offset to the shape of the `σ²` conditional.
    Sigma2ShapeOffset(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GewekeConfig {
    pub n_times: usize,
    pub n_points: usize,
    pub n_basis: usize,
    pub order: usize,
    pub local_prior: LocalPrior,
    pub a_sigma: f64,
    pub b_sigma: f64,
    pub level_prior_var: f64,
    pub n_samples: usize,
    /// Length of each successive-conditional chain; `n_samples / chain_length`
    /// independent chains are run.
    pub chain_length: usize,
    pub seed: u64,
    pub fault: Fault,
    pub scheme: CoeffScheme,
}

impl Default for GewekeConfig {
    fn default() -> Self {
        Self {
            n_times: 4,
            n_points: 6,
            n_basis: 4,
            order: 0,
            local_prior: LocalPrior::HalfCauchy,
            a_sigma: 3.0,
            b_sigma: 2.0,
            level_prior_var: 10.0,
            n_samples: 20_000,
            chain_length: 20,
            seed: 0,
            fault: Fault::None,
            scheme: CoeffScheme::Joint,
        }
    }
}

impl GewekeConfig {
    fn prior(&self) -> PriorConfig<f64> {
        PriorConfig {
            order: self.order,
            a_sigma: self.a_sigma,
            b_sigma: self.b_sigma,
            local_prior: self.local_prior,
            use_gaps: false,
            gram_jitter: None,
            level_prior_var: Some(self.level_prior_var),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n_times > 5 || self.n_points > 8 || self.n_basis > 4 {
            return Err(invalid("the joint test is meant for T ≤ 5, n ≤ 8, L ≤ 4"));
        }
        if self.n_points < self.n_basis {
            return Err(invalid("need n ≥ L for a nonsingular Gram matrix"));
        }
        if self.n_samples < 100 {
            return Err(invalid("need at least 100 samples"));
        }
        if self.chain_length == 0 || self.n_samples / self.chain_length < 2 {
            return Err(invalid("need at least two successive-conditional chains"));
        }
        self.prior().validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GewekeStat {
    pub name: String,
    pub marginal_mean: f64,
    pub successive_mean: f64,
    pub z: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GewekeResult {
    pub stats: Vec<GewekeStat>,
}

impl GewekeResult {
    pub fn max_abs_z(&self) -> f64 {
        self.stats.iter().map(|s| s.z.abs()).fold(0.0, f64::max)
    }
}

pub const STAT_NAMES: [&str; 5] =
    ["atan(sigma2)", "atan(tau2)", "atan(lambda2[0])", "atan(b[1,1])", "atan(b[T,1])"];

fn statistics(s: &ChainState<f64>) -> [f64; 5] {
    let last = s.coeffs.nrows() - 1;
    [s.sigma2.atan(), s.tau2.atan(), s.lambda2[0].atan(), s.coeffs[(0, 0)].atan(), s.coeffs[(last, 0)].atan()]
}

struct Instance {
    cfg: GewekeConfig,
    domain: Domain<f64>,
    points: Vec<f64>,
    designs: Vec<DesignMatrix<f64>>,
    /// Lower Cholesky factor of the common Gram matrix.
    gram_l: DMatrix<f64>,
    diffs: DifferenceOperator<i64>,
}

impl Instance {
    fn new(cfg: &GewekeConfig) -> Result<Self> {
        let domain = Domain::new(0.0, 1.0)?;
        let system = BSplineSystem::new(domain, cfg.n_basis)?;
        let n = cfg.n_points;
        let points: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
        let design = system.design_matrix(&points)?;
        let gram_l = cholesky(design.gram.clone(), "Gram matrix")?.l();
        let diffs = DifferenceOperator::with_convention(cfg.order, cfg.n_times, Convention::Forward)?;
        Ok(Self { cfg: cfg.clone(), domain, points, designs: vec![design; cfg.n_times], gram_l, diffs })
    }

    /// `N(0, scale · G⁻¹)`.
    fn gram_normal<R: Rng + ?Sized>(&self, scale: f64, rng: &mut R) -> DVector<f64> {
        let z = DVector::from_fn(self.cfg.n_basis, |_, _| standard_normal(rng));
        self.gram_l.tr_solve_lower_triangular(&z).expect("nonsingular factor") * scale.sqrt()
    }

    fn draw_prior<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<ChainState<f64>> {
        let c = &self.cfg;
        let n_diffs = self.diffs.n_diffs();
        let xi = inverse_gamma(0.5, 1.0, rng)?;
        let tau2 = inverse_gamma(0.5, 1.0 / xi, rng)?;
        let mut lambda2 = Vec::with_capacity(n_diffs);
        let mut nu = Vec::with_capacity(n_diffs);
        for _ in 0..n_diffs {
            match c.local_prior {
                LocalPrior::HalfCauchy => {
                    let v = inverse_gamma(0.5, 1.0, rng)?;
                    nu.push(v);
                    lambda2.push(inverse_gamma(0.5, 1.0 / v, rng)?);
                }
                LocalPrior::Exponential => {
                    let lam: f64 = rng.sample(Exp1);
                    nu.push(1.0);
                    lambda2.push(lam * lam);
                }
            }
        }
        let sigma2 = inverse_gamma(c.a_sigma, c.b_sigma, rng)?;

        let mut coeffs = DMatrix::zeros(c.n_times, c.n_basis);
        for t in 0..=c.order {
            coeffs.set_row(t, &self.gram_normal(c.level_prior_var, rng).transpose());
        }
        // The last entry of forward difference row j sits at j + k + 1 with
        // weight one, so each difference determines the next coefficient.
        for (j, lam2) in lambda2.iter().enumerate() {
            let mut b = self.gram_normal(sigma2 * tau2 * lam2, rng);
            let entries = self.diffs.row_entries(j);
            let (last, rest) = entries.split_last().expect("nonempty row");
            debug_assert_eq!(*last, (j + c.order + 1, 1));
            for &(i, w) in rest {
                b.axpy(-(w as f64), &coeffs.row(i).transpose(), 1.0);
            }
            coeffs.set_row(last.0, &b.transpose());
        }
        Ok(ChainState { coeffs, lambda2, nu, tau2, xi, sigma2 })
    }

    fn draw_data<R: Rng + ?Sized>(&self, s: &ChainState<f64>, rng: &mut R) -> Result<FunctionalDataset<f64>> {
        let sd = s.sigma2.sqrt();
        let records = self
            .designs
            .iter()
            .enumerate()
            .map(|(t, d)| {
                let mean = &d.phi * s.coeffs.row(t).transpose();
                Record { points: self.points.clone(), values: mean.iter().map(|m| m + sd * standard_normal(rng)).collect() }
            })
            .collect();
        FunctionalDataset::new(records, self.domain, None)
    }

    fn gibbs_step<R: Rng + ?Sized>(&self, s: &mut ChainState<f64>, data: &FunctionalDataset<f64>, rng: &mut R) -> Result<()> {
        let post = Posterior::new(data, &self.designs, self.cfg.prior())?;
        match self.cfg.scheme {
            CoeffScheme::Joint => post.update_coeffs_joint(s, rng)?,
            CoeffScheme::Sweep => post.update_coeffs(s, rng)?,
        }
        post.update_lambdas(s, rng)?;
        post.update_tau2(s, rng)?;
        let (shape, rate) = post.sigma2_conditional(s);
        let shape = match self.cfg.fault {
            Fault::None => shape,
            Fault::Sigma2ShapeOffset(d) => shape + d,
        };
        s.sigma2 = inverse_gamma(shape, rate, rng)?;
        Ok(())
    }
}

/// Test functions of `n_samples` independent draws from `p(θ, y)`.
pub fn marginal_conditional(cfg: &GewekeConfig) -> Result<Vec<[f64; 5]>> {
    cfg.validate()?;
    let inst = Instance::new(cfg)?;
    let mut rng = rng::stream(cfg.seed, streams::GEWEKE);
    (0..cfg.n_samples).map(|_| Ok(statistics(&inst.draw_prior(&mut rng)?))).collect()
}

/// Test functions along independent successive-conditional chains, one
/// vector per chain. Each chain starts from an exact draw of `p(θ, y)`, so
/// every state is a draw from the joint when the conditionals are right.
pub fn successive_conditional(cfg: &GewekeConfig) -> Result<Vec<Vec<[f64; 5]>>> {
    cfg.validate()?;
    let inst = Instance::new(cfg)?;
    let mut rng = rng::stream(cfg.seed, streams::GEWEKE + 1);
    let n_chains = cfg.n_samples / cfg.chain_length;
    let mut out = Vec::with_capacity(n_chains);
    for _ in 0..n_chains {
        let mut state = inst.draw_prior(&mut rng)?;
        let mut data = inst.draw_data(&state, &mut rng)?;
        let mut chain = Vec::with_capacity(cfg.chain_length);
        for _ in 0..cfg.chain_length {
            inst.gibbs_step(&mut state, &data, &mut rng)?;
            data = inst.draw_data(&state, &mut rng)?;
            chain.push(statistics(&state));
        }
        out.push(chain);
    }
    Ok(out)
}

/// Runs both samplers for `n_samples` each and returns one z-score per
/// test function.
pub fn geweke_joint_test(cfg: &GewekeConfig) -> Result<GewekeResult> {
    let marginal = marginal_conditional(cfg)?;
    let chains = successive_conditional(cfg)?;
    let m = cfg.n_samples;
    let mut stats = Vec::with_capacity(5);
    for (k, name) in STAT_NAMES.iter().enumerate() {
        let a: Vec<f64> = marginal.iter().map(|r| r[k]).collect();
        let chain_means: Vec<f64> =
            chains.iter().map(|c| c.iter().map(|r| r[k]).sum::<f64>() / c.len() as f64).collect();
        let (ma, va) = mean_var(&a);
        let (mb, vb) = mean_var(&chain_means);
        let se2 = va / m as f64 + vb / chain_means.len() as f64;
        let z = (ma - mb) / se2.sqrt();
        if !z.is_finite() {
            return Err(Error::NonFinite(format!("z-score of {name}")));
        }
        stats.push(GewekeStat { name: name.to_string(), marginal_mean: ma, successive_mean: mb, z });
    }
    Ok(GewekeResult { stats })
}

fn mean_var(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    let v = x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1.0);
    (m, v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prior_draw_respects_shapes() {
        let cfg = GewekeConfig { order: 1, ..Default::default() };
        let inst = Instance::new(&cfg).unwrap();
        let s = inst.draw_prior(&mut rng::stream(2, 0)).unwrap();
        s.validate(4, 4, 2).unwrap();
    }

    #[test]
    fn oversized_instance_is_rejected() {
        assert!(geweke_joint_test(&GewekeConfig { n_times: 9, ..Default::default() }).is_err());
    }
}
