//! Cubic B-spline basis on an open-uniform knot vector, and the per-time
//! design and Gram matrices built from it.

use std::io::Write;

use nalgebra::{Cholesky, DMatrix, Dyn};

use crate::data::{Domain, FunctionalDataset};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const DEGREE: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct BSplineSystem<F> {
    n_basis: usize,
    knots: Vec<F>,
    domain: Domain<F>,
}

impl<F: Scalar> BSplineSystem<F> {
    /// `n_basis` cubic B-splines: boundary knots repeated `DEGREE + 1`
    /// times and `n_basis - DEGREE - 1` equally spaced interior knots.
    pub fn new(domain: Domain<F>, n_basis: usize) -> Result<Self> {
        if n_basis < DEGREE + 1 {
            return Err(Error::InvalidArgument(format!(
                "need at least {} basis functions, got {n_basis}",
                DEGREE + 1
            )));
        }
        let interior = n_basis - DEGREE - 1;
        let step = domain.width() / F::from_usize_lossy(interior + 1);
        let mut knots = Vec::with_capacity(n_basis + DEGREE + 1);
        knots.extend(std::iter::repeat_n(domain.lo, DEGREE + 1));
        knots.extend((1..=interior).map(|i| domain.lo + step * F::from_usize_lossy(i)));
        knots.extend(std::iter::repeat_n(domain.hi, DEGREE + 1));
        Ok(Self { n_basis, knots, domain })
    }

    pub fn len(&self) -> usize {
        self.n_basis
    }

    pub fn is_empty(&self) -> bool {
        self.n_basis == 0
    }

    pub fn degree(&self) -> usize {
        DEGREE
    }

    pub fn knots(&self) -> &[F] {
        &self.knots
    }

    pub fn domain(&self) -> Domain<F> {
        self.domain
    }

    pub fn interior_knots(&self) -> &[F] {
        &self.knots[DEGREE + 1..self.n_basis]
    }

    /// Knot span `i` with `knots[i] <= s < knots[i + 1]`; the right end of the
    /// domain belongs to the last nonempty span.
    fn span(&self, s: F) -> usize {
        let last = self.n_basis - 1;
        if s >= self.knots[last + 1] {
            return last;
        }
        let (mut lo, mut hi) = (DEGREE, last + 1);
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if s < self.knots[mid] {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        lo
    }

    /// The `DEGREE + 1` possibly nonzero basis values at `s` and the index of
    /// the first of them (triangular Cox-de Boor scheme).
    pub fn eval_local(&self, s: F) -> Result<(usize, [F; DEGREE + 1])> {
        if !self.domain.contains(s) {
            return Err(Error::InvalidArgument(format!(
                "point {s} outside [{}, {}]",
                self.domain.lo, self.domain.hi
            )));
        }
        let span = self.span(s);
        let k = &self.knots;
        let mut n = [F::zero(); DEGREE + 1];
        let mut left = [F::zero(); DEGREE + 1];
        let mut right = [F::zero(); DEGREE + 1];
        n[0] = F::one();
        for j in 1..=DEGREE {
            left[j] = s - k[span + 1 - j];
            right[j] = k[span + j] - s;
            let mut saved = F::zero();
            for r in 0..j {
                let temp = n[r] / (right[r + 1] + left[j - r]);
                n[r] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            n[j] = saved;
        }
        Ok((span - DEGREE, n))
    }

    /// All `L` basis values at `s`.
    pub fn eval(&self, s: F) -> Result<Vec<F>> {
        let (first, local) = self.eval_local(s)?;
        let mut row = vec![F::zero(); self.n_basis];
        row[first..first + DEGREE + 1].copy_from_slice(&local);
        Ok(row)
    }

    pub fn design_matrix(&self, points: &[F]) -> Result<DesignMatrix<F>> {
        let mut phi = DMatrix::zeros(points.len(), self.n_basis);
        for (i, &s) in points.iter().enumerate() {
            let (first, local) = self.eval_local(s)?;
            for (j, v) in local.into_iter().enumerate() {
                phi[(i, first + j)] = v;
            }
        }
        Ok(DesignMatrix::new(phi))
    }

    /// One design matrix per record of `ds`.
    pub fn designs(&self, ds: &FunctionalDataset<F>) -> Result<Vec<DesignMatrix<F>>> {
        ds.records().iter().map(|r| self.design_matrix(&r.points)).collect()
    }

    pub fn dump_knots(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "# degree={} n_basis={}", DEGREE, self.n_basis)?;
        for k in &self.knots {
            writeln!(out, "{}", k.as_f64())?;
        }
        Ok(())
    }
}

/// `Φ_t` (n_t × L) together with its Gram matrix `Φ_tᵀ Φ_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix<F: Scalar> {
    pub phi: DMatrix<F>,
    pub gram: DMatrix<F>,
}

impl<F: Scalar> DesignMatrix<F> {
    pub fn new(phi: DMatrix<F>) -> Self {
        let gram = phi.tr_mul(&phi);
        Self { phi, gram }
    }

    pub fn rows(&self) -> usize {
        self.phi.nrows()
    }

    pub fn cols(&self) -> usize {
        self.phi.ncols()
    }

    /// Gram matrix with `eps * trace(G) / L` added to the diagonal.
    pub fn jittered_gram(&self, eps: F) -> DMatrix<F> {
        let l = self.cols();
        let shift = eps * self.gram.trace() / F::from_usize_lossy(l);
        let mut g = self.gram.clone();
        for i in 0..l {
            g[(i, i)] += shift;
        }
        g
    }

    pub fn gram_cholesky(&self) -> Result<Cholesky<F, Dyn>> {
        cholesky(self.gram.clone(), "Gram matrix")
    }
}

pub(crate) fn cholesky<F: Scalar>(m: DMatrix<F>, what: &str) -> Result<Cholesky<F, Dyn>> {
    Cholesky::new(m).ok_or_else(|| Error::NotPositiveDefinite(what.to_string()))
}
