//! Small dense row-major matrix type and the handful of solvers the codec
//! and the simulator need. Sizes here are tiny (code matrices) or
//! block-sized (weight sub-matrices), so nothing is blocked or vectorised.

use std::fmt;

#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            writeln!(f, "  {:?}", self.row(r))?;
        }
        write!(f, "]")
    }
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// Panics if `data.len() != rows * cols`.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix data length mismatch");
        Self { rows, cols, data }
    }

    /// Panics on ragged input.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Self {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.as_ref().len(), cols, "ragged rows");
            data.extend_from_slice(r.as_ref());
        }
        Self {
            rows: rows.len(),
            cols,
            data,
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self[(r, c)]).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |r, c| self[(c, r)])
    }

    /// `self * x`.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols, "matvec dimension mismatch");
        (0..self.rows).map(|r| dot(self.row(r), x)).collect()
    }

    /// `yᵀ * self`, returned as a plain vector of length `cols`.
    pub fn vecmat(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.rows, "vecmat dimension mismatch");
        let mut out = vec![0.0; self.cols];
        for (r, &yr) in y.iter().enumerate() {
            if yr == 0.0 {
                continue;
            }
            for (o, &w) in out.iter_mut().zip(self.row(r)) {
                *o += yr * w;
            }
        }
        out
    }

    /// `self += alpha * u vᵀ`.
    pub fn rank1_update(&mut self, alpha: f64, u: &[f64], v: &[f64]) {
        assert_eq!(u.len(), self.rows, "rank-1 update row mismatch");
        assert_eq!(v.len(), self.cols, "rank-1 update column mismatch");
        for (r, &ur) in u.iter().enumerate() {
            let a = alpha * ur;
            if a == 0.0 {
                continue;
            }
            for (w, &vc) in self.row_mut(r).iter_mut().zip(v) {
                *w += a * vc;
            }
        }
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "matmul dimension mismatch");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(r, k)];
                if a == 0.0 {
                    continue;
                }
                for c in 0..other.cols {
                    out[(r, c)] += a * other[(k, c)];
                }
            }
        }
        out
    }

    /// `self += a * other`.
    pub fn add_scaled(&mut self, a: f64, other: &Matrix) {
        assert_eq!(self.shape(), other.shape(), "add_scaled shape mismatch");
        axpy(a, &other.data, &mut self.data);
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.data)
    }

    /// Columns picked in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> Matrix {
        Matrix::from_fn(self.rows, cols.len(), |r, c| self[(r, cols[c])])
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    #[inline]
    fn index(&self, (r, c): (usize, usize)) -> &f64 {
        debug_assert!(r < self.rows && c < self.cols);
        &self.data[r * self.cols + c]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut f64 {
        debug_assert!(r < self.rows && c < self.cols);
        &mut self.data[r * self.cols + c]
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `y += a * x`.
#[inline]
pub fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

pub fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()))
}

/// Solves `a * x = b` for square `a` by Gaussian elimination with partial
/// pivoting. `b` may carry several right-hand sides as columns. Returns
/// `None` when a pivot falls below `1e-13` times the largest entry of `a`.
pub fn solve(a: &Matrix, b: &Matrix) -> Option<Matrix> {
    let n = a.rows();
    assert_eq!(a.cols(), n, "solve needs a square system");
    assert_eq!(b.rows(), n, "right-hand side row mismatch");
    let rhs = b.cols();
    let mut m = a.clone();
    let mut x = b.clone();
    let tiny = 1e-13 * m.max_abs().max(f64::MIN_POSITIVE);

    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&p, &q| m[(p, col)].abs().total_cmp(&m[(q, col)].abs()))
            .expect("non-empty pivot range");
        if m[(pivot, col)].abs() <= tiny {
            return None;
        }
        if pivot != col {
            for c in 0..n {
                let tmp = m[(col, c)];
                m[(col, c)] = m[(pivot, c)];
                m[(pivot, c)] = tmp;
            }
            for c in 0..rhs {
                let tmp = x[(col, c)];
                x[(col, c)] = x[(pivot, c)];
                x[(pivot, c)] = tmp;
            }
        }
        let p = m[(col, col)];
        for r in col + 1..n {
            let f = m[(r, col)] / p;
            if f == 0.0 {
                continue;
            }
            for c in col..n {
                m[(r, c)] -= f * m[(col, c)];
            }
            for c in 0..rhs {
                x[(r, c)] -= f * x[(col, c)];
            }
        }
    }
    for col in (0..n).rev() {
        let p = m[(col, col)];
        for c in 0..rhs {
            let mut acc = x[(col, c)];
            for k in col + 1..n {
                acc -= m[(col, k)] * x[(k, c)];
            }
            x[(col, c)] = acc / p;
        }
    }
    Some(x)
}

/// Least-squares solution of `a * x ≈ b` for a tall, full-column-rank `a`
/// via the normal equations. Only used with a handful of columns.
pub fn least_squares(a: &Matrix, b: &Matrix) -> Option<Matrix> {
    let at = a.transpose();
    solve(&at.matmul(a), &at.matmul(b))
}

/// Numerical rank by Gaussian elimination with a relative threshold.
pub fn rank(a: &Matrix, rel_tol: f64) -> usize {
    let mut m = a.clone();
    let (rows, cols) = m.shape();
    let tol = rel_tol * m.max_abs().max(f64::MIN_POSITIVE);
    let mut rank = 0;
    for col in 0..cols {
        if rank == rows {
            break;
        }
        let pivot = (rank..rows)
            .max_by(|&p, &q| m[(p, col)].abs().total_cmp(&m[(q, col)].abs()))
            .expect("non-empty pivot range");
        if m[(pivot, col)].abs() <= tol {
            continue;
        }
        for c in 0..cols {
            let tmp = m[(rank, c)];
            m[(rank, c)] = m[(pivot, c)];
            m[(pivot, c)] = tmp;
        }
        for r in rank + 1..rows {
            let f = m[(r, col)] / m[(rank, col)];
            for c in col..cols {
                m[(r, c)] -= f * m[(rank, c)];
            }
        }
        rank += 1;
    }
    rank
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solve_recovers_known_solution() {
        let a = Matrix::from_rows(&[[2.0, 1.0, -1.0], [-3.0, -1.0, 2.0], [-2.0, 1.0, 2.0]]);
        let b = Matrix::from_rows(&[[8.0], [-11.0], [-3.0]]);
        let x = solve(&a, &b).unwrap();
        assert!((x[(0, 0)] - 2.0).abs() < 1e-12);
        assert!((x[(1, 0)] - 3.0).abs() < 1e-12);
        assert!((x[(2, 0)] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn solve_rejects_singular() {
        let a = Matrix::from_rows(&[[1.0, 2.0], [2.0, 4.0]]);
        assert!(solve(&a, &Matrix::identity(2)).is_none());
    }

    #[test]
    fn vecmat_matches_transpose_matvec() {
        let a = Matrix::from_fn(3, 4, |r, c| (r * 4 + c) as f64 - 5.0);
        let y = [0.5, -1.0, 2.0];
        assert_eq!(a.vecmat(&y), a.transpose().matvec(&y));
    }

    #[test]
    fn rank_of_degenerate_matrix() {
        let a = Matrix::from_rows(&[[1.0, 2.0, 3.0], [2.0, 4.0, 6.0], [1.0, 0.0, 1.0]]);
        assert_eq!(rank(&a, 1e-12), 2);
    }

    #[test]
    fn least_squares_exact_for_consistent_system() {
        let a = Matrix::from_rows(&[[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]);
        let b = Matrix::from_rows(&[[1.0], [2.0], [3.0]]);
        let x = least_squares(&a, &b).unwrap();
        assert!((x[(0, 0)] - 1.0).abs() < 1e-12);
        assert!((x[(1, 0)] - 2.0).abs() < 1e-12);
    }
}
