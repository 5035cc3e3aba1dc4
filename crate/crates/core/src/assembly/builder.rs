use crate::error::{Error, Result};
use crate::linalg::{add_block, Matrix};

use super::layout::{Block, BlockLayout};

/// Accumulates `M`, the skew part `S` and the dissipation `D` block by block. The
/// generator is `S - D`, so `UᵀAU = -UᵀDU` holds up to roundoff for every assembly that
/// only uses [`skew`](Self::skew), [`dissipative`](Self::dissipative) and
/// [`transport`](Self::transport).
pub(crate) struct PencilBuilder {
    layout: BlockLayout,
    gram: Matrix,
    skew: Matrix,
    dissipation: Matrix,
    transport: Matrix,
}

impl PencilBuilder {
    pub(crate) fn new(layout: BlockLayout) -> Self {
        let n = layout.dim();
        Self {
            layout,
            gram: Matrix::zeros(n, n),
            skew: Matrix::zeros(n, n),
            dissipation: Matrix::zeros(n, n),
            transport: Matrix::zeros(n, n),
        }
    }

    fn locate(&self, row: Block, col: Block, m: &Matrix) -> Result<(usize, usize)> {
        let r = self.layout.range(row).ok_or_else(|| Error::Layout(format!("no block {row:?}")))?;
        let c = self.layout.range(col).ok_or_else(|| Error::Layout(format!("no block {col:?}")))?;
        if m.nrows() != r.size || m.ncols() != c.size {
            return Err(Error::Shape(format!(
                "block ({row:?}, {col:?}) is {}x{}, got {}x{}",
                r.size,
                c.size,
                m.nrows(),
                m.ncols()
            )));
        }
        Ok((r.offset, c.offset))
    }

    pub(crate) fn gram(&mut self, row: Block, col: Block, m: &Matrix, scale: f64) -> Result<()> {
        let (r, c) = self.locate(row, col, m)?;
        add_block(&mut self.gram, r, c, m.as_ref(), scale);
        Ok(())
    }

    /// `A[row, col] += s·m` and `A[col, row] -= s·mᵀ`.
    pub(crate) fn skew(&mut self, row: Block, col: Block, m: &Matrix, scale: f64) -> Result<()> {
        let (r, c) = self.locate(row, col, m)?;
        add_block(&mut self.skew, r, c, m.as_ref(), scale);
        add_block(&mut self.skew, c, r, m.transpose(), -scale);
        Ok(())
    }

    /// `D[block, block] += s·m` for a symmetric positive semidefinite `m`.
    pub(crate) fn dissipative(&mut self, block: Block, m: &Matrix, scale: f64) -> Result<()> {
        let (r, c) = self.locate(block, block, m)?;
        add_block(&mut self.dissipation, r, c, m.as_ref(), scale);
        Ok(())
    }

    /// `A[row, col] += s·m` with no structural pairing; its symmetric part is moved
    /// into `D` by [`finish`](Self::finish).
    pub(crate) fn transport(&mut self, row: Block, col: Block, m: &Matrix, scale: f64) -> Result<()> {
        let (r, c) = self.locate(row, col, m)?;
        add_block(&mut self.transport, r, c, m.as_ref(), scale);
        Ok(())
    }

    /// Returns `(M, A, D)`.
    pub(crate) fn finish(self) -> (Matrix, Matrix, Matrix) {
        let generator = &(&self.skew - &self.dissipation) + &self.transport;
        let n = self.transport.nrows();
        let sym = Matrix::from_fn(n, n, |i, j| 0.5 * (self.transport[(i, j)] + self.transport[(j, i)]));
        let dissipation = &self.dissipation - &sym;
        (self.gram, generator, dissipation)
    }
}
