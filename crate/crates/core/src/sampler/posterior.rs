//! Joint density and Gibbs block updates.
//!
//! Model, with `δ_j = Σ_i w_{ji} b_i` the forward differences of order `k`:
//!
//! ```text
//! y_t | b_t, σ²        ~ N(Φ_t b_t, σ² I)                     t = 1..T
//! δ_j | λ_j, τ, σ      ~ N(0, σ² τ² λ_j² h_j G_j⁻¹)           j = 1..T-k-1
//! λ_j² | ν_j ~ IG(1/2, 1/ν_j),  ν_j ~ IG(1/2, 1)              (λ_j ~ C⁺(0,1))
//! τ²  | ξ   ~ IG(1/2, 1/ξ),     ξ   ~ IG(1/2, 1)              (τ ~ C⁺(0,1))
//! σ²        ~ IG(a_σ, b_σ)
//! ```
//!
//! `G_j = Φ_jᵀΦ_j` (optionally jittered) and `h_j = 1` unless gap scaling is
//! on. With the exponential local prior `λ_j ~ Exp(1)` and the `ν_j` are
//! unused. The joint is evaluated on the augmented space
//! `(B, λ², ν, τ², ξ, σ²)` with Lebesgue reference measure, so that every
//! block conditional can be checked against differences of [`Posterior::log_joint`].
//!
//! The coefficient conditionals are derived from this joint directly. For
//! `k ∈ {0, 1}` they coincide with the closed forms usually quoted for this
//! model, with two corrections to the commonly quoted versions: the `t = T`
//! precision for `k = 0` is `{τ² G_T + λ_{T-1}⁻² G_{T-1}} / (τ²σ²)` (the whole
//! bracket is divided), and for `k = 1`, `t ∈ {T-1, T}` the leading term is
//! simply `G_t / σ²`.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;

use crate::basis::{cholesky, DesignMatrix};
use crate::data::FunctionalDataset;
use crate::diffs::{Convention, DifferenceOperator};
use crate::error::{Error, Result};
use crate::sampler::banded::BlockBanded;
use crate::sampler::config::{CoeffScheme, LocalPrior, PriorConfig};
use crate::sampler::dist::{inverse_gamma, ln_inverse_gamma, standard_normal};
use crate::sampler::slice::slice_step;
use crate::sampler::ChainState;
use crate::scalar::Scalar;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Floor applied to difference quadratic forms before they enter a scale
/// conditional.
pub fn quad_floor<F: Scalar>() -> F {
    let tiny = F::lit(1e-300);
    if tiny > F::zero() {
        tiny
    } else {
        F::lit(1e-37)
    }
}

/// Homogeneous-design precomputation: one Gram factor, per-time LS fits.
#[derive(Debug, Clone)]
struct SharedDesign<F: Scalar> {
    chol: Cholesky<F, Dyn>,
    ls_fits: Vec<DVector<F>>,
}

/// Data, designs and prior bound together; owns all per-dataset
/// precomputation. Cheap to share across threads by reference.
#[derive(Debug, Clone)]
pub struct Posterior<'a, F: Scalar> {
    data: &'a FunctionalDataset<F>,
    designs: &'a [DesignMatrix<F>],
    cfg: PriorConfig<F>,
    diffs: DifferenceOperator<i64>,
    /// `(j, w_{jt})` for each time `t`: the differences touching `b_t`.
    touching: Vec<Vec<(usize, F)>>,
    /// Row entries `(i, w_{ji})` of each difference.
    rows: Vec<Vec<(usize, F)>>,
    xty: Vec<DVector<F>>,
    prior_grams: Vec<DMatrix<F>>,
    prior_logdet: Vec<F>,
    gap_scale: Vec<F>,
    shared: Option<SharedDesign<F>>,
    n_basis: usize,
    n_level: usize,
}

impl<'a, F: Scalar> Posterior<'a, F> {
    pub fn new(
        data: &'a FunctionalDataset<F>,
        designs: &'a [DesignMatrix<F>],
        cfg: PriorConfig<F>,
    ) -> Result<Self> {
        cfg.validate()?;
        let n_times = data.len();
        if designs.len() != n_times {
            return Err(Error::Shape(format!(
                "{} designs for {n_times} time indices",
                designs.len()
            )));
        }
        let n_basis = designs[0].cols();
        for (t, (d, r)) in designs.iter().zip(data.records()).enumerate() {
            if d.cols() != n_basis || d.rows() != r.len() {
                return Err(Error::Shape(format!("design {} does not match its record", t + 1)));
            }
        }
        let diffs = DifferenceOperator::<i64>::with_convention(cfg.order, n_times, Convention::Forward)?;
        let n_diffs = diffs.n_diffs();
        let rows: Vec<Vec<(usize, F)>> = (0..n_diffs)
            .map(|j| {
                diffs
                    .row_entries(j)
                    .into_iter()
                    .map(|(i, w)| (i, F::lit(w as f64)))
                    .collect()
            })
            .collect();
        let mut touching = vec![Vec::new(); n_times];
        for (j, row) in rows.iter().enumerate() {
            for &(i, w) in row {
                touching[i].push((j, w));
            }
        }
        let n_level = if cfg.level_prior_var.is_some() { cfg.order + 1 } else { 0 };

        // Prior Gram matrices are needed for every difference and every
        // level-prior time; all of those indices are below n_diffs.max(n_level).
        let n_prior = n_diffs.max(n_level);
        let mut prior_grams = Vec::with_capacity(n_prior);
        let mut prior_logdet = Vec::with_capacity(n_prior);
        for (t, d) in designs.iter().enumerate().take(n_prior) {
            let g = match cfg.gram_jitter {
                Some(eps) => d.jittered_gram(eps),
                None => d.gram.clone(),
            };
            let chol = cholesky(g.clone(), &format!("prior Gram matrix of t={}", t + 1))?;
            let logdet = chol.l().diagonal().iter().fold(F::zero(), |acc, v| acc + v.ln()) * F::lit(2.0);
            prior_grams.push(g);
            prior_logdet.push(logdet);
        }

        let xty = designs
            .iter()
            .zip(data.records())
            .map(|(d, r)| d.phi.tr_mul(&DVector::from_column_slice(&r.values)))
            .collect::<Vec<_>>();

        let gap_scale = (0..n_diffs)
            .map(|j| if cfg.use_gaps { data.gap(j) } else { F::one() })
            .collect();

        let shared = if cfg.gram_jitter.is_none() && data.is_homogeneous() {
            let chol = designs[0].gram_cholesky()?;
            let ls_fits = xty.iter().map(|v| chol.solve(v)).collect();
            Some(SharedDesign { chol, ls_fits })
        } else {
            None
        };

        Ok(Self {
            data,
            designs,
            cfg,
            diffs,
            touching,
            rows,
            xty,
            prior_grams,
            prior_logdet,
            gap_scale,
            shared,
            n_basis,
            n_level,
        })
    }

    pub fn config(&self) -> &PriorConfig<F> {
        &self.cfg
    }

    pub fn data(&self) -> &FunctionalDataset<F> {
        self.data
    }

    pub fn designs(&self) -> &[DesignMatrix<F>] {
        self.designs
    }

    pub fn n_times(&self) -> usize {
        self.data.len()
    }

    pub fn n_basis(&self) -> usize {
        self.n_basis
    }

    pub fn n_diffs(&self) -> usize {
        self.diffs.n_diffs()
    }

    /// Whether the single-factor shortcut for identical designs is in use.
    pub fn is_homogeneous(&self) -> bool {
        self.shared.is_some()
    }

    /// Forward differences `δ_j` as rows.
    pub fn deltas(&self, state: &ChainState<F>) -> DMatrix<F> {
        self.diffs.deltas(&state.coeffs).expect("state shape checked")
    }

    fn delta(&self, coeffs: &DMatrix<F>, j: usize) -> DVector<F> {
        let mut d = DVector::zeros(self.n_basis);
        for &(i, w) in &self.rows[j] {
            d.axpy(w, &coeffs.row(i).transpose(), F::one());
        }
        d
    }

    /// `δ_jᵀ G_j δ_j` for every difference.
    pub fn quad_forms(&self, state: &ChainState<F>) -> Vec<F> {
        (0..self.n_diffs())
            .map(|j| {
                let d = self.delta(&state.coeffs, j);
                d.dot(&(&self.prior_grams[j] * &d))
            })
            .collect()
    }

    /// `‖y_t − Φ_t b_t‖²` for every time.
    pub fn residual_ss(&self, state: &ChainState<F>) -> Vec<F> {
        self.designs
            .iter()
            .zip(self.data.records())
            .enumerate()
            .map(|(t, (d, r))| {
                let fit = &d.phi * state.coeffs.row(t).transpose();
                fit.iter()
                    .zip(&r.values)
                    .fold(F::zero(), |acc, (f, y)| acc + (*y - *f) * (*y - *f))
            })
            .collect()
    }

    /// Prior variance multiplier of difference `j` apart from `σ²τ²`.
    fn local_var(&self, state: &ChainState<F>, j: usize) -> F {
        state.lambda2[j] * self.gap_scale[j]
    }

    /// Log of the unnormalized joint density.
    pub fn log_joint(&self, state: &ChainState<F>) -> Result<F> {
        state.validate(self.n_times(), self.n_basis, self.n_diffs())?;
        let half = F::lit(0.5);
        let ln2pi = F::lit(LN_2PI);
        let l = F::from_usize_lossy(self.n_basis);
        let mut lp = F::zero();

        for (rss, rec) in self.residual_ss(state).into_iter().zip(self.data.records()) {
            let n = F::from_usize_lossy(rec.len());
            lp -= half * n * (ln2pi + state.sigma2.ln()) + half * rss / state.sigma2;
        }

        for (j, q) in self.quad_forms(state).into_iter().enumerate() {
            let var = state.sigma2 * state.tau2 * self.local_var(state, j);
            lp += -half * l * (ln2pi + var.ln()) + half * self.prior_logdet[j] - half * q / var;
        }

        if let Some(v) = self.cfg.level_prior_var {
            for t in 0..self.n_level {
                let b = state.coeffs.row(t).transpose();
                let q = b.dot(&(&self.prior_grams[t] * &b));
                lp += -half * l * (ln2pi + v.ln()) + half * self.prior_logdet[t] - half * q / v;
            }
        }

        let ig = |x: F, a: f64, b: f64| F::lit(ln_inverse_gamma(x.as_f64(), a, b));
        lp += ig(state.sigma2, self.cfg.a_sigma.as_f64(), self.cfg.b_sigma.as_f64());
        lp += ig(state.tau2, 0.5, 1.0 / state.xi.as_f64()) + ig(state.xi, 0.5, 1.0);
        match self.cfg.local_prior {
            LocalPrior::HalfCauchy => {
                for (lam2, nu) in state.lambda2.iter().zip(&state.nu) {
                    lp += ig(*lam2, 0.5, 1.0 / nu.as_f64()) + ig(*nu, 0.5, 1.0);
                }
            }
            LocalPrior::Exponential => {
                // density of λ² when λ ~ Exp(1)
                for lam2 in &state.lambda2 {
                    let lam = lam2.sqrt();
                    lp += -lam - (F::lit(2.0) * lam).ln();
                }
            }
        }
        if lp.finite() {
            Ok(lp)
        } else {
            Err(Error::NonFinite(format!("log joint is {lp}")))
        }
    }

    /// `(shape, rate)` of the inverse-gamma conditional of `σ²`.
    pub fn sigma2_conditional(&self, state: &ChainState<F>) -> (F, F) {
        let half = F::lit(0.5);
        let n_total = F::from_usize_lossy(self.data.total_points());
        let shape = self.cfg.a_sigma
            + half * F::from_usize_lossy(self.n_basis * self.n_diffs())
            + half * n_total;
        let rss = self.residual_ss(state).into_iter().fold(F::zero(), |a, b| a + b);
        let prior = self
            .quad_forms(state)
            .into_iter()
            .enumerate()
            .fold(F::zero(), |acc, (j, q)| acc + q / self.local_var(state, j));
        let rate = self.cfg.b_sigma + half * rss + half * prior / state.tau2;
        (shape, rate)
    }

    pub fn update_sigma2<R: Rng + ?Sized>(&self, state: &mut ChainState<F>, rng: &mut R) -> Result<()> {
        let (shape, rate) = self.sigma2_conditional(state);
        state.sigma2 = F::lit(inverse_gamma(shape.as_f64(), rate.as_f64(), rng)?);
        Ok(())
    }

    /// `(shape, rate)` of the conditional of `τ²` given `ξ`.
    pub fn tau2_conditional(&self, state: &ChainState<F>) -> (F, F) {
        let half = F::lit(0.5);
        let shape = half * F::from_usize_lossy(self.n_basis * self.n_diffs() + 1);
        let sum = self
            .quad_forms(state)
            .into_iter()
            .enumerate()
            .fold(F::zero(), |acc, (j, q)| acc + q / self.local_var(state, j));
        let rate = F::one() / state.xi + half * sum / state.sigma2;
        (shape, rate)
    }

    /// Draws `τ²`, then `ξ ~ IG(1, 1 + 1/τ²)`.
    pub fn update_tau2<R: Rng + ?Sized>(&self, state: &mut ChainState<F>, rng: &mut R) -> Result<()> {
        let (shape, rate) = self.tau2_conditional(state);
        state.tau2 = F::lit(inverse_gamma(shape.as_f64(), rate.as_f64(), rng)?);
        let xi_rate = 1.0 + 1.0 / state.tau2.as_f64();
        state.xi = F::lit(inverse_gamma(1.0, xi_rate, rng)?);
        Ok(())
    }

    /// `(shape, rate)` of the half-Cauchy conditional of `λ_j²` given `ν_j`.
    pub fn lambda2_conditional(&self, state: &ChainState<F>, j: usize, q: F) -> (F, F) {
        let half = F::lit(0.5);
        let shape = half * F::from_usize_lossy(self.n_basis + 1);
        let q = q.max(quad_floor());
        let rate = F::one() / state.nu[j]
            + half * q / (state.tau2 * state.sigma2 * self.gap_scale[j]);
        (shape, rate)
    }

    pub fn update_lambdas<R: Rng + ?Sized>(&self, state: &mut ChainState<F>, rng: &mut R) -> Result<()> {
        match self.cfg.local_prior {
            LocalPrior::HalfCauchy => self.update_lambdas_half_cauchy(state, rng),
            LocalPrior::Exponential => self.update_lambdas_exponential(state, rng),
        }
    }

    /// Draws each `λ_j²`, then `ν_j ~ IG(1, 1 + 1/λ_j²)`.
    pub fn update_lambdas_half_cauchy<R: Rng + ?Sized>(
        &self,
        state: &mut ChainState<F>,
        rng: &mut R,
    ) -> Result<()> {
        let qs = self.quad_forms(state);
        for (j, q) in qs.into_iter().enumerate() {
            let (shape, rate) = self.lambda2_conditional(state, j, q);
            state.lambda2[j] = F::lit(inverse_gamma(shape.as_f64(), rate.as_f64(), rng)?);
            let nu_rate = 1.0 + 1.0 / state.lambda2[j].as_f64();
            state.nu[j] = F::lit(inverse_gamma(1.0, nu_rate, rng)?);
        }
        Ok(())
    }

    /// Log conditional of `λ_j` under the exponential prior, as a function of
    /// `η = ln λ_j` (Jacobian included):
    /// `-(L-1)η - a e^{-2η} - e^{η}` with `a = q / (2σ²τ²h)`.
    pub fn log_lambda_exponential(&self, state: &ChainState<F>, j: usize, q: F, eta: f64) -> f64 {
        let q = q.max(quad_floor()).as_f64();
        let a = 0.5 * q / (state.sigma2 * state.tau2 * self.gap_scale[j]).as_f64();
        let l = self.n_basis as f64;
        -(l - 1.0) * eta - a * (-2.0 * eta).exp() - eta.exp()
    }

    /// Slice-samples each `λ_j` on the log scale.
    pub fn update_lambdas_exponential<R: Rng + ?Sized>(
        &self,
        state: &mut ChainState<F>,
        rng: &mut R,
    ) -> Result<()> {
        let qs = self.quad_forms(state);
        for (j, q) in qs.into_iter().enumerate() {
            let eta0 = 0.5 * state.lambda2[j].as_f64().ln();
            let eta = slice_step(eta0, |e| self.log_lambda_exponential(state, j, q, e), 1.0, rng)?;
            state.lambda2[j] = F::lit((2.0 * eta).exp());
            if !(state.lambda2[j] > F::zero() && state.lambda2[j].finite()) {
                return Err(Error::NonFinite(format!("λ² draw {}", state.lambda2[j])));
            }
        }
        Ok(())
    }

    /// Mean and precision of the Gaussian conditional of `b_t`, built from
    /// the joint for arbitrary designs.
    pub fn coeff_conditional(&self, state: &ChainState<F>, t: usize) -> Result<(DVector<F>, DMatrix<F>)> {
        let (precision, linear) = self.precision_and_linear(state, t);
        let chol = Cholesky::new(precision.clone()).ok_or_else(|| {
            Error::NotPositiveDefinite(format!("conditional precision of b_{}", t + 1))
        })?;
        Ok((chol.solve(&linear), precision))
    }

    /// Conditional precision `P` and linear term `r` (mean `P⁻¹ r`).
    fn precision_and_linear(&self, state: &ChainState<F>, t: usize) -> (DMatrix<F>, DVector<F>) {
        let inv_s2 = F::one() / state.sigma2;
        let mut precision = &self.designs[t].gram * inv_s2;
        let mut linear = &self.xty[t] * inv_s2;
        for &(j, w) in &self.touching[t] {
            let scale = F::one() / (state.sigma2 * state.tau2 * self.local_var(state, j));
            precision += &self.prior_grams[j] * (w * w * scale);
            linear -= &self.prior_grams[j] * self.delta_without(&state.coeffs, j, t) * (w * scale);
        }
        if let (Some(v), true) = (self.cfg.level_prior_var, t < self.n_level) {
            precision += &self.prior_grams[t] / v;
        }
        (precision, linear)
    }

    /// `Σ_{i≠t} w_{ji} b_i`.
    fn delta_without(&self, coeffs: &DMatrix<F>, j: usize, t: usize) -> DVector<F> {
        let mut d = DVector::zeros(self.n_basis);
        for &(i, w) in &self.rows[j] {
            if i != t {
                d.axpy(w, &coeffs.row(i).transpose(), F::one());
            }
        }
        d
    }

    /// Mean and scalar `c_t` of the conditional `N(μ_t, c_t G⁻¹)` when all
    /// designs coincide. `None` if the shortcut does not apply.
    pub fn coeff_conditional_homogeneous(&self, state: &ChainState<F>, t: usize) -> Option<(DVector<F>, F)> {
        let shared = self.shared.as_ref()?;
        let inv_s2 = F::one() / state.sigma2;
        let mut s = inv_s2;
        let mut pull = DVector::zeros(self.n_basis);
        for &(j, w) in &self.touching[t] {
            let scale = F::one() / (state.sigma2 * state.tau2 * self.local_var(state, j));
            s += w * w * scale;
            pull -= self.delta_without(&state.coeffs, j, t) * (w * scale);
        }
        if let (Some(v), true) = (self.cfg.level_prior_var, t < self.n_level) {
            s += F::one() / v;
        }
        let c = F::one() / s;
        let mean = (pull + &shared.ls_fits[t] * inv_s2) * c;
        Some((mean, c))
    }

    /// One sweep `t = 1..T` of coefficient draws.
    pub fn update_coeffs<R: Rng + ?Sized>(&self, state: &mut ChainState<F>, rng: &mut R) -> Result<()> {
        for t in 0..self.n_times() {
            let draw = match &self.shared {
                Some(shared) => {
                    let (mean, c) = self.coeff_conditional_homogeneous(state, t).expect("shared design");
                    let z = self.normal_vector(rng);
                    let noise = shared.chol.l().tr_solve_lower_triangular(&z).expect("nonsingular factor");
                    mean + noise * c.sqrt()
                }
                None => {
                    let (precision, linear) = self.precision_and_linear(state, t);
                    let chol = Cholesky::new(precision).ok_or_else(|| {
                        Error::NotPositiveDefinite(format!("conditional precision of b_{}", t + 1))
                    })?;
                    let z = self.normal_vector(rng);
                    let noise = chol.l().tr_solve_lower_triangular(&z).expect("nonsingular factor");
                    chol.solve(&linear) + noise
                }
            };
            if draw.iter().any(|v| !v.finite()) {
                return Err(Error::NonFinite(format!("draw of b_{}", t + 1)));
            }
            state.coeffs.set_row(t, &draw.transpose());
        }
        Ok(())
    }

    /// Precision and linear term of the joint Gaussian conditional of
    /// `vec(Bᵀ) = (b_1, …, b_T)`, block-banded with bandwidth `k + 1`.
    pub fn joint_coeff_conditional(&self, state: &ChainState<F>) -> (BlockBanded<F>, DVector<F>) {
        let (n_times, l) = (self.n_times(), self.n_basis);
        let inv_s2 = F::one() / state.sigma2;
        let mut q = BlockBanded::zeros(n_times, l, self.cfg.order + 1);
        let mut linear = DVector::zeros(n_times * l);
        for t in 0..n_times {
            *q.get_mut(t, t) = &self.designs[t].gram * inv_s2;
            linear.rows_mut(t * l, l).copy_from(&(&self.xty[t] * inv_s2));
            if let (Some(v), true) = (self.cfg.level_prior_var, t < self.n_level) {
                *q.get_mut(t, t) += &self.prior_grams[t] / v;
            }
        }
        for (j, row) in self.rows.iter().enumerate() {
            let scale = F::one() / (state.sigma2 * state.tau2 * self.local_var(state, j));
            for &(a, wa) in row {
                for &(b, wb) in row.iter().filter(|(b, _)| *b <= a) {
                    *q.get_mut(a, b) += &self.prior_grams[j] * (wa * wb * scale);
                }
            }
        }
        (q, linear)
    }

    /// Draw all coefficients jointly.
    pub fn update_coeffs_joint<R: Rng + ?Sized>(&self, state: &mut ChainState<F>, rng: &mut R) -> Result<()> {
        let (n_times, l) = (self.n_times(), self.n_basis);
        let (q, linear) = self.joint_coeff_conditional(state);
        let c = q.cholesky()?;
        let z = DVector::from_fn(n_times * l, |_, _| F::lit(standard_normal(rng)));
        // x = Q⁻¹ r + C⁻ᵀ z
        let x = c.solve_upper(&(c.solve_lower(&linear) + z));
        if x.iter().any(|v| !v.finite()) {
            return Err(Error::NonFinite("joint draw of the coefficients".into()));
        }
        for t in 0..n_times {
            state.coeffs.set_row(t, &x.rows(t * l, l).transpose());
        }
        Ok(())
    }

    fn normal_vector<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<F> {
        DVector::from_fn(self.n_basis, |_, _| F::lit(standard_normal(rng)))
    }

    /// Full Gibbs sweep in the order b → λ → τ² → σ², coefficients drawn
    /// jointly.
    pub fn sweep<R: Rng + ?Sized>(&self, state: &mut ChainState<F>, rng: &mut R) -> Result<()> {
        self.sweep_with(state, rng, CoeffScheme::Joint)
    }

    pub fn sweep_with<R: Rng + ?Sized>(&self, state: &mut ChainState<F>, rng: &mut R, scheme: CoeffScheme) -> Result<()> {
        match scheme {
            CoeffScheme::Joint => self.update_coeffs_joint(state, rng)?,
            CoeffScheme::Sweep => self.update_coeffs(state, rng)?,
        }
        self.update_lambdas(state, rng)?;
        self.update_tau2(state, rng)?;
        self.update_sigma2(state, rng)
    }

    /// Ridge fit per time (jitter `1e-6`), unit scales and the pooled
    /// residual variance.
    pub fn default_state(&self) -> Result<ChainState<F>> {
        let n_times = self.n_times();
        let mut coeffs = DMatrix::zeros(n_times, self.n_basis);
        for t in 0..n_times {
            let mut g = self.designs[t].gram.clone();
            for i in 0..self.n_basis {
                g[(i, i)] += F::lit(1e-6);
            }
            let b = cholesky(g, "ridge system")?.solve(&self.xty[t]);
            coeffs.set_row(t, &b.transpose());
        }
        let n_diffs = self.n_diffs();
        let mut state = ChainState {
            coeffs,
            lambda2: vec![F::one(); n_diffs],
            nu: vec![F::one(); n_diffs],
            tau2: F::one(),
            xi: F::one(),
            sigma2: F::one(),
        };
        let rss = self.residual_ss(&state).into_iter().fold(F::zero(), |a, b| a + b);
        let s2 = rss / F::from_usize_lossy(self.data.total_points());
        if s2 > F::lit(1e-8) && s2.finite() {
            state.sigma2 = s2;
        }
        Ok(state)
    }
}

/// Log density of `N(mean, precision⁻¹)` at `x` up to the constant that
/// does not depend on `x`.
pub fn gaussian_log_kernel<F: Scalar>(x: &DVector<F>, mean: &DVector<F>, precision: &DMatrix<F>) -> F {
    let d = x - mean;
    -F::lit(0.5) * d.dot(&(precision * &d))
}
