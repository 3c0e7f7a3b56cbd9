//! Posterior predictive loss and selection of the basis size `L` and the
//! difference order `k`.
//!
//! ```text
//! PPL = T/(T+1) Σ_t ‖y_t − Φ_t E[b_t]‖²  +  (Σ_t n_t) E[σ²]  +  Σ_t tr(Φ_t Cov(b_t) Φ_tᵀ)
//! ```

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::basis::{BSplineSystem, DesignMatrix};
use crate::data::FunctionalDataset;
use crate::error::{invalid, Error, Result};
use crate::sampler::{run_chain_with_designs, DrawStore, McmcConfig, PriorConfig};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorMoments<F: Scalar> {
    pub means: Vec<DVector<F>>,
    /// Sample covariances with `1/(m-1)` normalization.
    pub covariances: Vec<DMatrix<F>>,
    pub sigma2_mean: F,
    pub n_draws: usize,
    /// Set when fewer than two draws were available, in which case the
    /// covariances are zero.
    pub degenerate: bool,
}

pub fn posterior_moments<F: Scalar>(store: &DrawStore<F>) -> Result<PosteriorMoments<F>> {
    let m = store.len();
    if m == 0 {
        return Err(invalid("posterior moments need at least one draw"));
    }
    let (n_times, n_basis) = (store.n_times(), store.n_basis());
    let mf = F::from_usize_lossy(m);
    let mut means = vec![DVector::zeros(n_basis); n_times];
    let mut sigma2_mean = F::zero();
    for d in store.draws() {
        for (t, mean) in means.iter_mut().enumerate() {
            *mean += d.coeffs.row(t).transpose();
        }
        sigma2_mean += d.sigma2;
    }
    means.iter_mut().for_each(|v| *v /= mf);
    sigma2_mean /= mf;

    let mut covariances = vec![DMatrix::zeros(n_basis, n_basis); n_times];
    if m >= 2 {
        for d in store.draws() {
            for (t, cov) in covariances.iter_mut().enumerate() {
                let c = d.coeffs.row(t).transpose() - &means[t];
                cov.ger(F::one(), &c, &c, F::one());
            }
        }
        let denom = F::from_usize_lossy(m - 1);
        covariances.iter_mut().for_each(|c| *c /= denom);
    }
    Ok(PosteriorMoments { means, covariances, sigma2_mean, n_draws: m, degenerate: m < 2 })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PplResult<F> {
    pub n_basis: usize,
    pub order: usize,
    pub ppl: F,
    /// `T/(T+1) Σ ‖y_t − Φ_t E[b_t]‖²`.
    pub fit: F,
    /// `(Σ n_t) E[σ²]`.
    pub variance: F,
    /// `Σ tr(Φ_t Cov(b_t) Φ_tᵀ)`.
    pub penalty: F,
}

pub fn compute_ppl<F: Scalar>(
    mom: &PosteriorMoments<F>,
    data: &FunctionalDataset<F>,
    designs: &[DesignMatrix<F>],
    order: usize,
) -> Result<PplResult<F>> {
    let n_times = data.len();
    if mom.means.len() != n_times || designs.len() != n_times {
        return Err(Error::Shape("moments, designs and data disagree on T".into()));
    }
    let n_basis = mom.means[0].len();
    let mut rss = F::zero();
    let mut penalty = F::zero();
    for ((d, rec), (mean, cov)) in designs
        .iter()
        .zip(data.records())
        .zip(mom.means.iter().zip(&mom.covariances))
    {
        if d.cols() != n_basis || d.rows() != rec.len() || cov.shape() != (n_basis, n_basis) {
            return Err(Error::Shape("design does not match moments or record".into()));
        }
        let fit = &d.phi * mean;
        rss += fit.iter().zip(&rec.values).fold(F::zero(), |a, (f, y)| a + (*y - *f) * (*y - *f));
        // tr(Φ C Φᵀ) = Σ_ij (ΦᵀΦ)_ij C_ij
        penalty += d.gram.component_mul(cov).sum();
    }
    let tf = F::from_usize_lossy(n_times);
    let fit = tf / (tf + F::one()) * rss;
    let variance = F::from_usize_lossy(data.total_points()) * mom.sigma2_mean;
    Ok(PplResult { n_basis, order, ppl: fit + variance + penalty, fit, variance, penalty })
}

/// Outcome for one `(L, k)` candidate.
#[derive(Debug, Clone)]
pub struct CandidateOutcome<F: Scalar> {
    pub n_basis: usize,
    pub order: usize,
    pub result: std::result::Result<PplResult<F>, String>,
}

#[derive(Debug, Clone)]
pub struct Selection<F: Scalar> {
    pub best_l: usize,
    pub best_k: usize,
    pub outcomes: Vec<CandidateOutcome<F>>,
    /// Draws of the winning candidate.
    pub best_draws: DrawStore<F>,
}

impl<F: Scalar> Selection<F> {
    pub fn best(&self) -> &PplResult<F> {
        self.outcomes
            .iter()
            .find(|o| o.n_basis == self.best_l && o.order == self.best_k)
            .and_then(|o| o.result.as_ref().ok())
            .expect("best candidate succeeded")
    }
}

/// Index of the smallest PPL; ties go to the smaller `L`, then smaller `k`.
pub fn argmin_ppl<F: Scalar>(results: &[PplResult<F>]) -> Option<usize> {
    (0..results.len()).min_by(|&a, &b| {
        let (ra, rb) = (&results[a], &results[b]);
        ra.ppl
            .as_f64()
            .total_cmp(&rb.ppl.as_f64())
            .then(ra.n_basis.cmp(&rb.n_basis))
            .then(ra.order.cmp(&rb.order))
    })
}

/// Fit every `(L, k)` pair and keep the one with the smallest PPL.
///
/// Candidate `i` (in `L`-major order) runs on chain id `mcmc.chain_id + i`,
/// so the outcome does not depend on the number of worker threads.
pub fn select_model<F: Scalar>(
    data: &FunctionalDataset<F>,
    l_candidates: &[usize],
    k_candidates: &[usize],
    prior: PriorConfig<F>,
    mcmc: &McmcConfig<F>,
) -> Result<Selection<F>> {
    if l_candidates.is_empty() || k_candidates.is_empty() {
        return Err(invalid("candidate lists must be nonempty"));
    }
    let grid: Vec<(usize, usize)> = l_candidates
        .iter()
        .flat_map(|&l| k_candidates.iter().map(move |&k| (l, k)))
        .collect();

    let runs: Vec<(CandidateOutcome<F>, Option<DrawStore<F>>)> = grid
        .par_iter()
        .enumerate()
        .map(|(i, &(l, k))| {
            let mut mcmc = mcmc.clone();
            mcmc.chain_id = mcmc.chain_id.wrapping_add(i as u64);
            let prior = PriorConfig { order: k, ..prior };
            let run = fit_candidate(data, l, prior, &mcmc);
            match run {
                Ok((ppl, store)) => {
                    (CandidateOutcome { n_basis: l, order: k, result: Ok(ppl) }, Some(store))
                }
                Err(e) => (CandidateOutcome { n_basis: l, order: k, result: Err(e.to_string()) }, None),
            }
        })
        .collect();

    let ok: Vec<(usize, PplResult<F>)> = runs
        .iter()
        .enumerate()
        .filter_map(|(i, (o, _))| o.result.as_ref().ok().map(|r| (i, r.clone())))
        .collect();
    let results: Vec<PplResult<F>> = ok.iter().map(|(_, r)| r.clone()).collect();
    let Some(best) = argmin_ppl(&results) else {
        let reasons: Vec<String> = runs
            .iter()
            .map(|(o, _)| format!("L={} k={}: {}", o.n_basis, o.order, o.result.as_ref().err().unwrap()))
            .collect();
        return Err(Error::NoCandidate(reasons.join("; ")));
    };
    let best_index = ok[best].0;
    let (best_l, best_k) = grid[best_index];
    let mut outcomes = Vec::with_capacity(runs.len());
    let mut best_draws = None;
    for (i, (o, store)) in runs.into_iter().enumerate() {
        if i == best_index {
            best_draws = store;
        }
        outcomes.push(o);
    }
    Ok(Selection { best_l, best_k, outcomes, best_draws: best_draws.expect("best has draws") })
}

/// Run one chain at basis size `l` and score it.
pub fn fit_candidate<F: Scalar>(
    data: &FunctionalDataset<F>,
    l: usize,
    prior: PriorConfig<F>,
    mcmc: &McmcConfig<F>,
) -> Result<(PplResult<F>, DrawStore<F>)> {
    let system = BSplineSystem::new(data.domain(), l)?;
    let designs = system.designs(data)?;
    let store = run_chain_with_designs(data, &designs, prior, mcmc)?;
    let mom = posterior_moments(&store)?;
    let ppl = compute_ppl(&mom, data, &designs, prior.order)?;
    Ok((ppl, store))
}

/// Text table and CSV rows, one per candidate.
pub fn write_report<F: Scalar>(outcomes: &[CandidateOutcome<F>], mut table: impl Write, mut csv: impl Write) -> Result<()> {
    writeln!(table, "{:>4} {:>2} {:>16} {:>16} {:>16} {:>16}", "L", "k", "PPL", "fit", "variance", "penalty")?;
    writeln!(csv, "L,k,ppl,fit,variance,penalty,status")?;
    for o in outcomes {
        match &o.result {
            Ok(r) => {
                writeln!(
                    table,
                    "{:>4} {:>2} {:>16.6} {:>16.6} {:>16.6} {:>16.6}",
                    o.n_basis,
                    o.order,
                    r.ppl.as_f64(),
                    r.fit.as_f64(),
                    r.variance.as_f64(),
                    r.penalty.as_f64()
                )?;
                writeln!(
                    csv,
                    "{},{},{},{},{},{},ok",
                    o.n_basis,
                    o.order,
                    r.ppl.as_f64(),
                    r.fit.as_f64(),
                    r.variance.as_f64(),
                    r.penalty.as_f64()
                )?;
            }
            Err(e) => {
                writeln!(table, "{:>4} {:>2} failed: {e}", o.n_basis, o.order)?;
                writeln!(csv, "{},{},,,,,failed", o.n_basis, o.order)?;
            }
        }
    }
    Ok(())
}
