use nalgebra::DMatrix;

use super::operator::Dictionary;
use crate::{Error, Result, C64};

/// Dense `S x (D+1)` block whose column `delta` is `delta` zeros, the
/// nonzero pilot, then `D - delta` zeros.
pub fn shift_matrix(pilot_nonzero: &[C64], max_delay: usize) -> DMatrix<C64> {
    ShiftBlock::new(0, pilot_nonzero.to_vec(), max_delay).to_dense()
}

/// One user's block of the shift dictionary, stored as its nonzero pilot.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftBlock {
    user: usize,
    pilot: Vec<C64>,
    max_delay: usize,
}

impl ShiftBlock {
    pub fn new(user: usize, pilot_nonzero: Vec<C64>, max_delay: usize) -> Self {
        Self {
            user,
            pilot: pilot_nonzero,
            max_delay,
        }
    }

    pub fn user(&self) -> usize {
        self.user
    }

    pub fn rows(&self) -> usize {
        self.pilot.len() + self.max_delay
    }

    pub fn cols(&self) -> usize {
        self.max_delay + 1
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let mut m = DMatrix::zeros(self.rows(), self.cols());
        for delta in 0..self.cols() {
            for (i, &s) in self.pilot.iter().enumerate() {
                m[(delta + i, delta)] = s;
            }
        }
        m
    }
}

/// Horizontal concatenation of user blocks in ascending user order.
///
/// Applied as a sum of short convolutions rather than a dense product;
/// [`Dictionary::to_dense`] materialises the matrix when needed.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftMatrix {
    rows: usize,
    blocks: Vec<ShiftBlock>,
}

pub fn stack_shift_matrices(mut blocks: Vec<ShiftBlock>) -> Result<ShiftMatrix> {
    let first = blocks
        .first()
        .ok_or_else(|| Error::Dimension("no shift blocks".into()))?;
    let (rows, max_delay) = (first.rows(), first.max_delay);
    if let Some(b) = blocks.iter().find(|b| b.rows() != rows || b.max_delay != max_delay) {
        return Err(Error::Dimension(format!(
            "block for user {} is {}x{}, expected {rows}x{}",
            b.user,
            b.rows(),
            b.cols(),
            max_delay + 1
        )));
    }
    blocks.sort_by_key(|b| b.user);
    Ok(ShiftMatrix { rows, blocks })
}

impl ShiftMatrix {
    pub fn blocks(&self) -> &[ShiftBlock] {
        &self.blocks
    }

    /// Users owning the blocks, in column order.
    pub fn users(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.user).collect()
    }

    pub fn max_delay(&self) -> usize {
        self.blocks[0].max_delay
    }

    pub fn block_len(&self) -> usize {
        self.max_delay() + 1
    }

}

impl Dictionary for ShiftMatrix {
    fn rows(&self) -> usize {
        self.rows
    }

    fn cols(&self) -> usize {
        self.blocks.len() * self.block_len()
    }

    fn apply(&self, x: &[C64], out: &mut [C64]) {
        out.iter_mut().for_each(|o| *o = C64::new(0.0, 0.0));
        let bl = self.block_len();
        for (b, block) in self.blocks.iter().enumerate() {
            for (delta, &xd) in x[b * bl..(b + 1) * bl].iter().enumerate() {
                if xd == C64::new(0.0, 0.0) {
                    continue;
                }
                for (o, s) in out[delta..].iter_mut().zip(&block.pilot) {
                    *o += s * xd;
                }
            }
        }
    }

    fn apply_adjoint(&self, r: &[C64], out: &mut [C64]) {
        let bl = self.block_len();
        for (b, block) in self.blocks.iter().enumerate() {
            for (delta, o) in out[b * bl..(b + 1) * bl].iter_mut().enumerate() {
                *o = block
                    .pilot
                    .iter()
                    .zip(&r[delta..])
                    .map(|(s, ri)| s.conj() * ri)
                    .sum();
            }
        }
    }

    fn all_finite(&self) -> bool {
        self.blocks
            .iter()
            .flat_map(|b| &b.pilot)
            .all(|c| c.re.is_finite() && c.im.is_finite())
    }

    fn to_dense(&self) -> DMatrix<C64> {
        let mut m = DMatrix::zeros(self.rows, self.cols());
        let bl = self.block_len();
        for (b, block) in self.blocks.iter().enumerate() {
            m.columns_mut(b * bl, bl).copy_from(&block.to_dense());
        }
        m
    }
}
