//! Finite-dimensional C*-algebras `M_{n_1} ⊕ … ⊕ M_{n_r}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, op_norm, CMat, C64};

/// Direct sum of full matrix algebras, described by the block sizes.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BaseAlgebra {
    blocks: Vec<usize>,
}

/// Element of a [`BaseAlgebra`], one square matrix per block.
#[derive(Clone, Debug, PartialEq)]
pub struct BaseElement {
    pub blocks: Vec<CMat>,
}

impl BaseAlgebra {
    pub fn new(blocks: Vec<usize>) -> Result<Self> {
        if blocks.is_empty() || blocks.contains(&0) {
            return Err(Error::Invalid(
                "a base algebra needs at least one block and all block sizes positive".into(),
            ));
        }
        Ok(BaseAlgebra { blocks })
    }

    /// The scalars `C`.
    pub fn scalars() -> Self {
        BaseAlgebra { blocks: vec![1] }
    }

    pub fn matrices(n: usize) -> Self {
        BaseAlgebra {
            blocks: vec![n.max(1)],
        }
    }

    pub fn blocks(&self) -> &[usize] {
        &self.blocks
    }

    pub fn is_scalars(&self) -> bool {
        self.blocks == [1]
    }

    /// Vector-space dimension, the sum of the squared block sizes.
    pub fn dim(&self) -> usize {
        self.blocks.iter().map(|n| n * n).sum()
    }

    /// Size of the block-diagonal matrices the algebra acts by.
    pub fn size(&self) -> usize {
        self.blocks.iter().sum()
    }

    pub fn zero(&self) -> BaseElement {
        BaseElement {
            blocks: self.blocks.iter().map(|&n| CMat::zeros(n, n)).collect(),
        }
    }

    pub fn unit(&self) -> BaseElement {
        BaseElement {
            blocks: self.blocks.iter().map(|&n| CMat::identity(n, n)).collect(),
        }
    }

    /// `(block, row, col)` of the `i`-th matrix unit; units are ordered by
    /// block, then row-major.
    pub fn basis_position(&self, mut i: usize) -> (usize, usize, usize) {
        for (b, &n) in self.blocks.iter().enumerate() {
            if i < n * n {
                return (b, i / n, i % n);
            }
            i -= n * n;
        }
        panic!("basis index out of range");
    }

    pub fn basis_offset(&self, block: usize) -> usize {
        self.blocks[..block].iter().map(|n| n * n).sum()
    }

    pub fn basis_element(&self, i: usize) -> BaseElement {
        let (b, j, k) = self.basis_position(i);
        let mut x = self.zero();
        x.blocks[b][(j, k)] = c(1.0);
        x
    }

    /// Index of the basis element `e_{kj}` adjoint to the `i`-th.
    pub fn adjoint_index(&self, i: usize) -> usize {
        let (b, j, k) = self.basis_position(i);
        self.basis_offset(b) + k * self.blocks[b] + j
    }

    pub fn from_coords(&self, coords: &[C64]) -> Result<BaseElement> {
        if coords.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                context: "base algebra coordinates".into(),
                expected: self.dim(),
                found: coords.len(),
            });
        }
        let mut off = 0;
        let blocks = self
            .blocks
            .iter()
            .map(|&n| {
                let m = CMat::from_row_slice(n, n, &coords[off..off + n * n]);
                off += n * n;
                m
            })
            .collect();
        Ok(BaseElement { blocks })
    }

    pub fn to_full(&self, x: &BaseElement) -> CMat {
        let mut m = CMat::zeros(self.size(), self.size());
        let mut off = 0;
        for (blk, &n) in x.blocks.iter().zip(&self.blocks) {
            m.view_mut((off, off), (n, n)).copy_from(blk);
            off += n;
        }
        m
    }

    /// Read off the diagonal blocks of a full matrix; also returns the norm
    /// of everything outside the blocks.
    pub fn from_full(&self, m: &CMat) -> (BaseElement, f64) {
        let mut rest = m.clone();
        let mut blocks = Vec::with_capacity(self.blocks.len());
        let mut off = 0;
        for &n in &self.blocks {
            blocks.push(m.view((off, off), (n, n)).into_owned());
            rest.view_mut((off, off), (n, n)).fill(c(0.0));
            off += n;
        }
        (BaseElement { blocks }, rest.norm())
    }
}

impl BaseElement {
    pub fn mul(&self, other: &BaseElement) -> BaseElement {
        BaseElement {
            blocks: self
                .blocks
                .iter()
                .zip(&other.blocks)
                .map(|(a, b)| a * b)
                .collect(),
        }
    }

    pub fn add(&self, other: &BaseElement) -> BaseElement {
        BaseElement {
            blocks: self
                .blocks
                .iter()
                .zip(&other.blocks)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &BaseElement) -> BaseElement {
        BaseElement {
            blocks: self
                .blocks
                .iter()
                .zip(&other.blocks)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn scale(&self, s: C64) -> BaseElement {
        BaseElement {
            blocks: self.blocks.iter().map(|a| a * s).collect(),
        }
    }

    pub fn adjoint(&self) -> BaseElement {
        BaseElement {
            blocks: self.blocks.iter().map(|a| a.adjoint()).collect(),
        }
    }

    /// Operator norm: the largest block norm.
    pub fn norm(&self) -> f64 {
        self.blocks.iter().map(op_norm).fold(0.0, f64::max)
    }

    /// Euclidean norm of the coordinates.
    pub fn frobenius(&self) -> f64 {
        self.blocks
            .iter()
            .map(|a| a.norm_squared())
            .sum::<f64>()
            .sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.blocks
            .iter()
            .all(|a| a.iter().all(|z| *z == C64::new(0.0, 0.0)))
    }

    pub fn coords(&self) -> Vec<C64> {
        let mut v = Vec::new();
        for a in &self.blocks {
            for i in 0..a.nrows() {
                for j in 0..a.ncols() {
                    v.push(a[(i, j)]);
                }
            }
        }
        v
    }

    /// Conjugation `u x u*` by a block-diagonal matrix given per block.
    pub fn conjugate(&self, u: &[CMat]) -> BaseElement {
        BaseElement {
            blocks: self
                .blocks
                .iter()
                .zip(u)
                .map(|(a, w)| w * a * w.adjoint())
                .collect(),
        }
    }

    /// Conjugation `u* x u`.
    pub fn conjugate_adjoint(&self, u: &[CMat]) -> BaseElement {
        BaseElement {
            blocks: self
                .blocks
                .iter()
                .zip(u)
                .map(|(a, w)| w.adjoint() * a * w)
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coordinates_round_trip() {
        let alg = BaseAlgebra::new(vec![1, 2]).unwrap();
        assert_eq!(alg.dim(), 5);
        let x = alg.basis_element(3);
        assert_eq!(alg.basis_position(3), (1, 1, 0));
        let back = alg.from_coords(&x.coords()).unwrap();
        assert_eq!(back, x);
        assert_eq!(alg.adjoint_index(3), 2);
    }

    #[test]
    fn full_matrix_round_trip() {
        let alg = BaseAlgebra::new(vec![2, 1]).unwrap();
        let x = alg.basis_element(1).add(&alg.basis_element(4));
        let full = alg.to_full(&x);
        let (y, off) = alg.from_full(&full);
        assert_eq!(y, x);
        assert_eq!(off, 0.0);
    }

    #[test]
    fn rejects_empty_blocks() {
        assert!(BaseAlgebra::new(vec![]).is_err());
        assert!(BaseAlgebra::new(vec![2, 0]).is_err());
    }
}
