//! Shrinkage of the first difference under a large local scale.
//!
//! For `k = 0` with a common design, stack the first differences of the data
//! `z_t = y_{t+1} − y_t` by time. Then `z ~ N(Δ, Σ)`, `Δ ~ N(0, S_0)` with
//!
//! ```text
//! Σ   = σ² M ⊗ I_n,     M   = tridiag(1, 2, 1)            ((T−1) × (T−1))
//! S_0 = σ²τ² diag(λ_1², …, λ_{T−1}²) ⊗ I_n
//! E[Δ | z] = {I − Σ(Σ + S_0)⁻¹} z.
//! ```
//!
//! With `λ_2 = … = λ_{T−1} = λ`, the top-left `n × n` block of the smoother
//! is `c I_n` where, writing `a = 2 + τ²λ_1²` and `2 cosh ω = 2 + τ²λ²`,
//!
//! ```text
//! r = sinh((T−2)ω) / sinh((T−1)ω)         (the (1,1) entry of the inverse
//!                                           of the lower-right tridiagonal block)
//! c = 1 − (2 − r) / (a − r).
//! ```
//!
//! The widely quoted version of this result writes the block-inverse entry as
//! `R_11 = −sinh((T−1)ω) / sinh(Tω)` and the denominator as `a − R_11⁻¹`;
//! [`alt_closed_form`] evaluates that expression so the two can be
//! compared against the dense computation.

use nalgebra::DMatrix;

use crate::basis::cholesky;
use crate::error::{invalid, Result};

/// Largest `(T − 1) n` handled by [`brute_force`].
pub const MAX_DENSE: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShrinkageBlockSpec {
    pub n_times: usize,
    pub n: usize,
    pub tau: f64,
    pub sigma: f64,
    pub lambda1: f64,
    pub lambda_rest: f64,
}

impl ShrinkageBlockSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_times < 3 || self.n == 0 {
            return Err(invalid("need T ≥ 3 and n ≥ 1"));
        }
        let scales = [self.tau, self.sigma, self.lambda1, self.lambda_rest];
        if scales.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(invalid("all scales must be positive and finite"));
        }
        Ok(())
    }
}

/// `ln(x + √(x² − 1))`, for `x ≥ 1`.
pub fn arccosh(x: f64) -> f64 {
    (x + (x * x - 1.0).sqrt()).ln()
}

fn omega(spec: &ShrinkageBlockSpec) -> Result<f64> {
    let s = spec.tau * spec.tau * spec.lambda_rest * spec.lambda_rest;
    if s == 0.0 {
        return Err(invalid("τ²λ² = 0 leaves ω undefined"));
    }
    Ok(arccosh(1.0 + 0.5 * s))
}

/// `sinh(mω) / sinh((m+1)ω)` without overflow.
fn sinh_ratio(m: usize, w: f64) -> f64 {
    let (m, m1) = (m as f64, (m + 1) as f64);
    (-w).exp() * (-(-2.0 * m * w).exp_m1()) / (-(-2.0 * m1 * w).exp_m1())
}

/// The scalar `c` from the block-inverse identity.
pub fn closed_form(spec: &ShrinkageBlockSpec) -> Result<f64> {
    spec.validate()?;
    let w = omega(spec)?;
    let a = 2.0 + spec.tau * spec.tau * spec.lambda1 * spec.lambda1;
    let r = sinh_ratio(spec.n_times - 2, w);
    Ok(1.0 - (2.0 - r) / (a - r))
}

/// The widely quoted `R_ij` (1-based indices).
pub fn alt_r(spec: &ShrinkageBlockSpec, i: usize, j: usize) -> Result<f64> {
    let w = omega(spec)?;
    let t = spec.n_times as f64;
    let (i, j) = (i as f64, j as f64);
    Ok(-(((t - (j - i).abs()) * w).cosh() - ((t - j - i) * w).cosh()) / (2.0 * w.sinh() * (t * w).sinh()))
}

/// `1 − (2 − R_11) / (2 + τ²λ_1² − R_11⁻¹)` with the quoted `R_11`.
pub fn alt_closed_form(spec: &ShrinkageBlockSpec) -> Result<f64> {
    spec.validate()?;
    let r11 = alt_r(spec, 1, 1)?;
    let a = 2.0 + spec.tau * spec.tau * spec.lambda1 * spec.lambda1;
    Ok(1.0 - (2.0 - r11) / (a - 1.0 / r11))
}

/// `Σ` and `S_0` in time-major order (index `t n + i`).
pub fn build_matrices(spec: &ShrinkageBlockSpec) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    spec.validate()?;
    let m = spec.n_times - 1;
    let n = spec.n;
    if m * n > MAX_DENSE {
        return Err(invalid(format!("(T−1)n = {} exceeds {MAX_DENSE}", m * n)));
    }
    let s2 = spec.sigma * spec.sigma;
    let mut sigma = DMatrix::zeros(m * n, m * n);
    let mut s0 = DMatrix::zeros(m * n, m * n);
    for t in 0..m {
        let lam = if t == 0 { spec.lambda1 } else { spec.lambda_rest };
        for i in 0..n {
            let p = t * n + i;
            sigma[(p, p)] = 2.0 * s2;
            if t + 1 < m {
                sigma[(p, p + n)] = s2;
                sigma[(p + n, p)] = s2;
            }
            s0[(p, p)] = s2 * spec.tau * spec.tau * lam * lam;
        }
    }
    Ok((sigma, s0))
}

/// Top-left `n × n` block of `I − Σ(Σ + S_0)⁻¹`.
pub fn brute_force(spec: &ShrinkageBlockSpec) -> Result<DMatrix<f64>> {
    let (sigma, s0) = build_matrices(spec)?;
    let dim = sigma.nrows();
    let chol = cholesky(&sigma + &s0, "Σ + S_0")?;
    // Σ(Σ+S_0)⁻¹ = ((Σ+S_0)⁻¹ Σ)ᵀ since both are symmetric
    let smoother = DMatrix::identity(dim, dim) - chol.solve(&sigma).transpose();
    Ok(smoother.view((0, 0), (spec.n, spec.n)).into_owned())
}

/// Parameter grid used by the verification report.
pub fn default_grid() -> Vec<ShrinkageBlockSpec> {
    let mut out = Vec::new();
    for n_times in [3, 5, 10] {
        for n in [1, 3] {
            for tau in [0.5, 1.0, 2.0] {
                for lambda1 in [0.1, 1.0, 10.0] {
                    for lambda_rest in [0.5, 1.0, 2.0] {
                        out.push(ShrinkageBlockSpec { n_times, n, tau, sigma: 1.0, lambda1, lambda_rest });
                    }
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(n_times: usize, lambda1: f64) -> ShrinkageBlockSpec {
        ShrinkageBlockSpec { n_times, n: 1, tau: 1.0, sigma: 1.0, lambda1, lambda_rest: 1.0 }
    }

    #[test]
    fn large_local_scale_leaves_data_alone() {
        assert!((closed_form(&spec(5, 1e6)).unwrap() - 1.0).abs() < 1e-4);
    }

    #[test]
    fn three_times_is_a_scalar_problem() {
        // T = 3: Σ + S_0 = [[3,1],[1,3]], first row of Σ(Σ+S_0)⁻¹ is (5, −1)/8
        let s = spec(3, 1.0);
        let expected = 3.0 / 8.0;
        assert!((closed_form(&s).unwrap() - expected).abs() < 1e-14);
        assert!((brute_force(&s).unwrap()[(0, 0)] - expected).abs() < 1e-12);
    }

    #[test]
    fn vanishing_local_scale_shrinks_fully() {
        let b = brute_force(&spec(6, 1e-6)).unwrap();
        assert!(b[(0, 0)].abs() < 1e-9);
    }

    #[test]
    fn arccosh_matches_std() {
        for x in [1.0, 1.0001, 2.0, 50.0] {
            assert!((arccosh(x) - x.acosh()).abs() < 1e-12);
        }
    }

    #[test]
    fn bad_spec() {
        assert!(closed_form(&spec(2, 1.0)).is_err());
        assert!(closed_form(&ShrinkageBlockSpec { tau: 0.0, ..spec(4, 1.0) }).is_err());
    }
}
