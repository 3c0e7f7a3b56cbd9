//! Symmetric positive definite block-banded matrices: Cholesky factor and
//! triangular solves, `O(T p² L³)` for `T` blocks of size `L` and block
//! bandwidth `p`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Lower block band of a symmetric matrix. `blocks[i][d]` holds block
/// `(i, i - d)` for `d = 0..=min(i, bandwidth)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockBanded<F: Scalar> {
    block: usize,
    bandwidth: usize,
    blocks: Vec<Vec<DMatrix<F>>>,
}

impl<F: Scalar> BlockBanded<F> {
    pub fn zeros(n_blocks: usize, block: usize, bandwidth: usize) -> Self {
        let blocks = (0..n_blocks)
            .map(|i| vec![DMatrix::zeros(block, block); i.min(bandwidth) + 1])
            .collect();
        Self { block, bandwidth, blocks }
    }

    pub fn n_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn bandwidth(&self) -> usize {
        self.bandwidth
    }

    /// Block `(i, j)` with `j <= i <= j + bandwidth`.
    pub fn get_mut(&mut self, i: usize, j: usize) -> &mut DMatrix<F> {
        assert!(j <= i && i - j <= self.bandwidth, "block ({i}, {j}) outside the band");
        &mut self.blocks[i][i - j]
    }

    pub fn get(&self, i: usize, j: usize) -> &DMatrix<F> {
        assert!(j <= i && i - j <= self.bandwidth, "block ({i}, {j}) outside the band");
        &self.blocks[i][i - j]
    }

    pub fn to_dense(&self) -> DMatrix<F> {
        let (n, b) = (self.n_blocks(), self.block);
        let mut out = DMatrix::zeros(n * b, n * b);
        for i in 0..n {
            for d in 0..self.blocks[i].len() {
                let j = i - d;
                let blk = &self.blocks[i][d];
                out.view_mut((i * b, j * b), (b, b)).copy_from(blk);
                if d > 0 {
                    out.view_mut((j * b, i * b), (b, b)).copy_from(&blk.transpose());
                }
            }
        }
        out
    }

    /// Lower Cholesky factor `C` with `A = C Cᵀ`, in the same layout.
    pub fn cholesky(&self) -> Result<BlockBanded<F>> {
        let n = self.n_blocks();
        let mut c = BlockBanded::zeros(n, self.block, self.bandwidth);
        for i in 0..n {
            let lo = i.saturating_sub(self.bandwidth);
            for j in lo..=i {
                let mut s = self.get(i, j).clone();
                for m in lo.max(j.saturating_sub(self.bandwidth))..j {
                    s -= c.get(i, m) * c.get(j, m).transpose();
                }
                if i == j {
                    let chol = nalgebra::Cholesky::new(s).ok_or_else(|| {
                        Error::NotPositiveDefinite(format!("diagonal block {} of a banded precision", i + 1))
                    })?;
                    *c.get_mut(i, i) = chol.unpack();
                } else {
                    // C_ij = S C_jj⁻ᵀ, i.e. C_jj C_ijᵀ = Sᵀ
                    let t = c
                        .get(j, j)
                        .solve_lower_triangular(&s.transpose())
                        .ok_or_else(|| Error::NotPositiveDefinite("singular banded factor".into()))?;
                    *c.get_mut(i, j) = t.transpose();
                }
            }
        }
        Ok(c)
    }

    /// Solve `C x = r` for this lower factor; `r` is stacked block-wise.
    pub fn solve_lower(&self, r: &DVector<F>) -> DVector<F> {
        let (n, b) = (self.n_blocks(), self.block);
        let mut x = r.clone();
        for i in 0..n {
            let mut v = x.rows(i * b, b).into_owned();
            for j in i.saturating_sub(self.bandwidth)..i {
                v -= self.get(i, j) * x.rows(j * b, b);
            }
            let v = self.get(i, i).solve_lower_triangular(&v).expect("nonsingular factor");
            x.rows_mut(i * b, b).copy_from(&v);
        }
        x
    }

    /// Solve `Cᵀ x = r` for this lower factor.
    pub fn solve_upper(&self, r: &DVector<F>) -> DVector<F> {
        let (n, b) = (self.n_blocks(), self.block);
        let mut x = r.clone();
        for i in (0..n).rev() {
            let mut v = x.rows(i * b, b).into_owned();
            for k in i + 1..(i + self.bandwidth + 1).min(n) {
                v -= self.get(k, i).tr_mul(&x.rows(k * b, b));
            }
            let v = self.get(i, i).tr_solve_lower_triangular(&v).expect("nonsingular factor");
            x.rows_mut(i * b, b).copy_from(&v);
        }
        x
    }
}
