//! k-th order forward difference operators over the time index.
//!
//! `Δ_0 = D⁽⁰⁾` and `Δ_k = D⁽ᵏ⁾ Δ_{k-1}`, where `D⁽ᵏ⁾` is the
//! `(T-k-1) × (T-k)` band matrix with `1` on the diagonal and `-1` on the
//! superdiagonal. Taken literally this gives `δ_t = b_t - b_{t+1}` for
//! `k = 0`; the sampler works with the forward convention
//! `δ_t = b_{t+1} - b_t`, which differs by the global sign `(-1)^{k+1}`.
//! The difference prior is a zero-mean Gaussian, so the sign never changes
//! a density.

use std::fmt::Debug;

use nalgebra::DMatrix;
use num_traits::{Signed, ToPrimitive};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Sign convention for the rows of `Δ_k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Convention {
    /// The recursion exactly as composed from `D⁽ᵏ⁾` (`δ_0 = b_0 - b_1`).
    Recursion,
    /// Forward differences (`δ_0 = b_1 - b_0`).
    Forward,
}

/// Integer-valued `(T-k-1) × T` difference matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DifferenceOperator<N: Signed + Copy + Debug + 'static> {
    order: usize,
    len: usize,
    matrix: DMatrix<N>,
}

impl<N> DifferenceOperator<N>
where
    N: Signed + Copy + Debug + ToPrimitive + PartialEq + 'static,
{
    pub fn new(order: usize, len: usize) -> Result<Self> {
        Self::with_convention(order, len, Convention::Recursion)
    }

    pub fn with_convention(order: usize, len: usize, convention: Convention) -> Result<Self> {
        if order + 1 >= len {
            return Err(Error::InvalidArgument(format!(
                "difference order {order} needs T > {}, got T = {len}",
                order + 1
            )));
        }
        let mut rows: Vec<Vec<N>> = band(len - 1);
        for k in 1..=order {
            let d = band::<N>(len - k - 1);
            rows = matmul(&d, &rows);
        }
        if convention == Convention::Forward && order % 2 == 0 {
            for r in &mut rows {
                r.iter_mut().for_each(|v| *v = -*v);
            }
        }
        let matrix = DMatrix::from_fn(rows.len(), len, |i, j| rows[i][j]);
        Ok(Self { order, len, matrix })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Sequence length `T`.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Number of differences `T - k - 1`.
    pub fn n_diffs(&self) -> usize {
        self.len - self.order - 1
    }

    pub fn matrix(&self) -> &DMatrix<N> {
        &self.matrix
    }

    /// Nonzero `(column, weight)` pairs of row `j`.
    pub fn row_entries(&self, j: usize) -> Vec<(usize, N)> {
        (j..(j + self.order + 2).min(self.len))
            .filter_map(|c| {
                let w = self.matrix[(j, c)];
                (!w.is_zero()).then_some((c, w))
            })
            .collect()
    }

    /// `Δ_k B` for a `T × L` coefficient matrix.
    pub fn deltas<F: Scalar>(&self, b: &DMatrix<F>) -> Result<DMatrix<F>> {
        if b.nrows() != self.len {
            return Err(Error::Shape(format!(
                "coefficient matrix has {} rows, operator expects {}",
                b.nrows(),
                self.len
            )));
        }
        let mut out = DMatrix::zeros(self.n_diffs(), b.ncols());
        for j in 0..self.n_diffs() {
            for (c, w) in self.row_entries(j) {
                let w = F::lit(w.to_f64().expect("small integer weight"));
                for l in 0..b.ncols() {
                    out[(j, l)] += w * b[(c, l)];
                }
            }
        }
        Ok(out)
    }
}

/// `D` of size `m × (m + 1)`.
fn band<N: Signed + Copy>(m: usize) -> Vec<Vec<N>> {
    (0..m)
        .map(|i| {
            let mut row = vec![N::zero(); m + 1];
            row[i] = N::one();
            row[i + 1] = -N::one();
            row
        })
        .collect()
}

fn matmul<N: Signed + Copy>(a: &[Vec<N>], b: &[Vec<N>]) -> Vec<Vec<N>> {
    let cols = b[0].len();
    a.iter()
        .map(|row| {
            (0..cols)
                .map(|j| {
                    row.iter()
                        .zip(b)
                        .fold(N::zero(), |acc, (&x, brow)| acc + x * brow[j])
                })
                .collect()
        })
        .collect()
}
