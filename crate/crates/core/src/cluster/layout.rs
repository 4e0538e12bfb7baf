use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LayoutError {
    #[error("grid dimensions must be at least 1 (got m={m}, n={n})")]
    EmptyGrid { m: usize, n: usize },
}

/// Node grid of the coded strategy.
///
/// Rows `0..m` and columns `0..n` hold base blocks. Rows `m..m+2(t1+t3)` hold
/// row-parity blocks and columns `n..n+2(t2+t3)` hold column-parity blocks;
/// the parity-by-parity corner holds no node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridLayout {
    pub m: usize,
    pub n: usize,
    /// Tolerated errors in feedforward products.
    pub t1: usize,
    /// Tolerated errors in backprop products.
    pub t2: usize,
    /// Tolerated errors in updates.
    pub t3: usize,
}

impl GridLayout {
    pub fn new(m: usize, n: usize, t1: usize, t2: usize, t3: usize) -> Result<Self, LayoutError> {
        if m == 0 || n == 0 {
            return Err(LayoutError::EmptyGrid { m, n });
        }
        Ok(Self { m, n, t1, t2, t3 })
    }

    /// Single tolerance `t` for every step, i.e. `t1 + t3 = t2 + t3 = t`.
    pub fn symmetric(m: usize, n: usize, t: usize) -> Result<Self, LayoutError> {
        Self::new(m, n, 0, 0, t)
    }

    /// Errors correctable per column of row outputs.
    pub fn row_t(&self) -> usize {
        self.t1 + self.t3
    }

    /// Errors correctable per row of column outputs.
    pub fn col_t(&self) -> usize {
        self.t2 + self.t3
    }

    pub fn parity_rows(&self) -> usize {
        2 * self.row_t()
    }

    pub fn parity_cols(&self) -> usize {
        2 * self.col_t()
    }

    pub fn total_rows(&self) -> usize {
        self.m + self.parity_rows()
    }

    pub fn total_cols(&self) -> usize {
        self.n + self.parity_cols()
    }

    /// Base node count `P = m n`.
    pub fn base_nodes(&self) -> usize {
        self.m * self.n
    }

    /// `P̂ = m n + 2n(t1 + t3) + 2m(t2 + t3)`.
    pub fn node_count(&self) -> usize {
        self.m * self.n + 2 * self.n * self.row_t() + 2 * self.m * self.col_t()
    }

    /// True for grid positions that hold a node.
    pub fn contains(&self, row: usize, col: usize) -> bool {
        row < self.total_rows() && col < self.total_cols() && (row < self.m || col < self.n)
    }

    pub fn is_feedforward_active(&self, row: usize, col: usize) -> bool {
        row < self.total_rows() && col < self.n
    }

    pub fn is_backprop_active(&self, row: usize, col: usize) -> bool {
        row < self.m && col < self.total_cols()
    }

    /// Every node in row-major scan order, skipping the corner.
    pub fn nodes(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.total_rows()).flat_map(move |r| {
            let cols = if r < self.m { self.total_cols() } else { self.n };
            (0..cols).map(move |c| (r, c))
        })
    }
}
