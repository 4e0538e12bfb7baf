//! Block partitioning of weight matrices and vectors over a node grid.

use crate::cluster::CostLedger;
use crate::dnn::LayerSpec;
use crate::linalg::Matrix;

pub fn ceil_div(a: usize, b: usize) -> usize {
    a.div_ceil(b)
}

/// Block shape of one layer's weight matrix on an `m × n` base grid. Both
/// dimensions are zero-padded up to the next multiple of the grid size.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerGeom {
    pub out_dim: usize,
    pub in_dim: usize,
    pub m: usize,
    pub n: usize,
    /// Rows per block.
    pub rb: usize,
    /// Columns per block.
    pub cb: usize,
}

impl LayerGeom {
    pub fn new(out_dim: usize, in_dim: usize, m: usize, n: usize) -> Self {
        Self {
            out_dim,
            in_dim,
            m,
            n,
            rb: ceil_div(out_dim, m),
            cb: ceil_div(in_dim, n),
        }
    }

    pub fn of(spec: &LayerSpec, m: usize, n: usize) -> Self {
        Self::new(spec.out_dim, spec.in_dim, m, n)
    }

    /// Unpadded rows in base row-block `i`.
    pub fn valid_rows(&self, i: usize) -> usize {
        self.out_dim.saturating_sub(i * self.rb).min(self.rb)
    }

    /// Unpadded columns in base column-block `j`.
    pub fn valid_cols(&self, j: usize) -> usize {
        self.in_dim.saturating_sub(j * self.cb).min(self.cb)
    }

    /// Block `(i, j)` of `w`, zero-padded.
    pub fn block_of(&self, w: &Matrix, i: usize, j: usize) -> Matrix {
        Matrix::from_fn(self.rb, self.cb, |r, c| {
            let (gr, gc) = (i * self.rb + r, j * self.cb + c);
            if gr < self.out_dim && gc < self.in_dim {
                w[(gr, gc)]
            } else {
                0.0
            }
        })
    }

    /// Reassembles the unpadded matrix from the `m × n` base blocks.
    pub fn assemble(&self, block: impl Fn(usize, usize) -> Matrix) -> Matrix {
        let mut w = Matrix::zeros(self.out_dim, self.in_dim);
        for i in 0..self.m {
            for j in 0..self.n {
                let b = block(i, j);
                for r in 0..self.valid_rows(i) {
                    for c in 0..self.valid_cols(j) {
                        w[(i * self.rb + r, j * self.cb + c)] = b[(r, c)];
                    }
                }
            }
        }
        w
    }
}

/// Splits `v` into `parts` zero-padded pieces of `len` entries.
pub fn split(v: &[f64], parts: usize, len: usize) -> Vec<Vec<f64>> {
    assert!(v.len() <= parts * len, "vector longer than its partition");
    (0..parts)
        .map(|p| {
            let mut piece = vec![0.0; len];
            let lo = (p * len).min(v.len());
            let hi = ((p + 1) * len).min(v.len());
            piece[..hi - lo].copy_from_slice(&v[lo..hi]);
            piece
        })
        .collect()
}

/// Concatenates pieces and drops padding beyond `len`.
pub fn join(pieces: &[Vec<f64>], len: usize) -> Vec<f64> {
    let mut out: Vec<f64> = pieces.iter().flatten().copied().collect();
    out.truncate(len);
    out
}

/// Charges moving a vector of `total` entries from pieces of `src_len` to
/// pieces of `dst_len`. Each target piece is fetched by one broadcast per
/// source piece it overlaps. All lines run in parallel, so only the first
/// target piece is charged.
pub fn charge_redistribute(ledger: &mut CostLedger, group: usize, total: usize, src_len: usize, dst_len: usize) {
    let hi = dst_len.min(total);
    let mut pos = 0;
    while pos < hi {
        let end = ((pos / src_len + 1) * src_len).min(hi);
        ledger.charge_broadcast(group, end - pos);
        pos = end;
    }
}

/// Dense grid of blocks with optional holes (the coded grid's corner).
#[derive(Debug, Clone, PartialEq)]
pub struct BlockGrid {
    rows: usize,
    cols: usize,
    blocks: Vec<Option<Matrix>>,
}

impl BlockGrid {
    pub fn new(rows: usize, cols: usize, mut make: impl FnMut(usize, usize) -> Option<Matrix>) -> Self {
        let mut blocks = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                blocks.push(make(r, c));
            }
        }
        Self { rows, cols, blocks }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn has(&self, r: usize, c: usize) -> bool {
        r < self.rows && c < self.cols && self.blocks[r * self.cols + c].is_some()
    }

    /// Panics on a hole.
    pub fn get(&self, r: usize, c: usize) -> &Matrix {
        self.blocks[r * self.cols + c]
            .as_ref()
            .expect("no block at this grid position")
    }

    pub fn get_mut(&mut self, r: usize, c: usize) -> &mut Matrix {
        self.blocks[r * self.cols + c]
            .as_mut()
            .expect("no block at this grid position")
    }

    pub fn set(&mut self, r: usize, c: usize, m: Matrix) {
        let slot = &mut self.blocks[r * self.cols + c];
        assert!(slot.is_some(), "cannot fill a grid hole");
        *slot = Some(m);
    }

    /// Present blocks in row-major order.
    pub fn scan(&self) -> impl Iterator<Item = &Matrix> {
        self.blocks.iter().flatten()
    }

    pub fn scan_mut(&mut self) -> impl Iterator<Item = &mut Matrix> {
        self.blocks.iter_mut().flatten()
    }

    pub fn block_count(&self) -> usize {
        self.blocks.iter().filter(|b| b.is_some()).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn padded_partition_round_trip() {
        let g = LayerGeom::new(7, 5, 3, 2);
        assert_eq!((g.rb, g.cb), (3, 3));
        assert_eq!((g.valid_rows(2), g.valid_cols(1)), (1, 2));
        let w = Matrix::from_fn(7, 5, |r, c| (r * 5 + c) as f64);
        let back = g.assemble(|i, j| g.block_of(&w, i, j));
        assert_eq!(back, w);
        let corner = g.block_of(&w, 2, 1);
        assert_eq!(corner[(0, 0)], w[(6, 3)]);
        assert_eq!(corner[(1, 0)], 0.0);
        assert_eq!(corner[(0, 2)], 0.0);
    }

    #[test]
    fn split_and_join() {
        let v = [1.0, 2.0, 3.0, 4.0, 5.0];
        let parts = split(&v, 2, 3);
        assert_eq!(parts, vec![vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 0.0]]);
        assert_eq!(join(&parts, 5), v.to_vec());
    }

    #[test]
    fn grid_holes() {
        let mut g = BlockGrid::new(3, 3, |r, c| (r < 2 || c < 2).then(|| Matrix::zeros(1, 1)));
        assert_eq!(g.block_count(), 8);
        assert!(!g.has(2, 2));
        g.get_mut(2, 1)[(0, 0)] = 4.0;
        assert_eq!(g.scan().map(|b| b[(0, 0)]).sum::<f64>(), 4.0);
    }
}
