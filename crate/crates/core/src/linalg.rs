//! Minimal dense linear algebra: a row-major matrix and Householder-QR least
//! squares. The solver never forms an explicit inverse of the normal equations;
//! `(X'X)^{-1}` is materialized from the triangular factor only when a caller
//! needs it for covariance estimates.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Relative tolerance under which a triangular-factor diagonal entry is
/// treated as zero, flagging a rank-deficient design.
pub const RANK_TOL: f64 = 1e-10;

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixOf<F> {
    rows: usize,
    cols: usize,
    data: Vec<F>,
}

impl<F: Real> MatrixOf<F> {
    /// Zero matrix of the given shape.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        MatrixOf {
            rows,
            cols,
            data: vec![F::zero(); rows * cols],
        }
    }

    /// Build from row-major data; `data.len()` must equal `rows * cols`.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<F>) -> Self {
        assert_eq!(data.len(), rows * cols, "shape/data mismatch");
        MatrixOf { rows, cols, data }
    }

    /// Build from a list of equal-length rows.
    pub fn from_rows(rows: &[Vec<F>]) -> Self {
        let r = rows.len();
        let c = if r == 0 { 0 } else { rows[0].len() };
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        MatrixOf { rows: r, cols: c, data }
    }

    /// Build from a list of equal-length columns.
    pub fn from_columns(cols: &[Vec<F>]) -> Self {
        let c = cols.len();
        let r = if c == 0 { 0 } else { cols[0].len() };
        let mut m = MatrixOf::zeros(r, c);
        for (j, col) in cols.iter().enumerate() {
            assert_eq!(col.len(), r, "ragged columns");
            for (i, &v) in col.iter().enumerate() {
                m[(i, j)] = v;
            }
        }
        m
    }

    /// Number of rows.
    pub fn nrows(&self) -> usize {
        self.rows
    }

    /// Number of columns.
    pub fn ncols(&self) -> usize {
        self.cols
    }

    /// Borrow row `i` as a slice.
    pub fn row(&self, i: usize) -> &[F] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Copy column `j` out.
    pub fn column(&self, j: usize) -> Vec<F> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    /// Matrix-vector product `A v`.
    pub fn matvec(&self, v: &[F]) -> Vec<F> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v)
                    .fold(F::zero(), |acc, (&a, &b)| acc + a * b)
            })
            .collect()
    }

    /// Transposed matrix-vector product `A' v`.
    pub fn t_matvec(&self, v: &[F]) -> Vec<F> {
        assert_eq!(v.len(), self.rows);
        let mut out = vec![F::zero(); self.cols];
        for i in 0..self.rows {
            let vi = v[i];
            for (j, o) in out.iter_mut().enumerate() {
                *o = *o + self[(i, j)] * vi;
            }
        }
        out
    }

    /// Matrix product `A B`.
    pub fn matmul(&self, other: &MatrixOf<F>) -> MatrixOf<F> {
        assert_eq!(self.cols, other.rows);
        let mut out = MatrixOf::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let aik = self[(i, k)];
                if aik == F::zero() {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] = out[(i, j)] + aik * other[(k, j)];
                }
            }
        }
        out
    }

    /// Transpose.
    pub fn transpose(&self) -> MatrixOf<F> {
        let mut out = MatrixOf::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)];
            }
        }
        out
    }
}

impl<F: Real> std::ops::Index<(usize, usize)> for MatrixOf<F> {
    type Output = F;
    fn index(&self, (i, j): (usize, usize)) -> &F {
        &self.data[i * self.cols + j]
    }
}

impl<F: Real> std::ops::IndexMut<(usize, usize)> for MatrixOf<F> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut F {
        &mut self.data[i * self.cols + j]
    }
}

/// Output of the Householder-QR least-squares solve of `min ||y - X b||`.
#[derive(Debug, Clone)]
pub struct LeastSquares<F> {
    /// Solution vector `b` (length `p`).
    pub coefficients: Vec<F>,
    /// Upper-triangular factor `R` (`p x p`), for covariance computations.
    pub r: MatrixOf<F>,
}

impl<F: Real> LeastSquares<F> {
    /// `(X'X)^{-1} = R^{-1} R^{-T}`, materialized from the triangular factor.
    pub fn xtx_inverse(&self) -> MatrixOf<F> {
        let rinv = invert_upper(&self.r);
        rinv.matmul(&rinv.transpose())
    }
}

/// Solve the least-squares problem via Householder QR without forming `X'X`.
///
/// Errors with the index of the first column whose triangular-factor diagonal
/// falls below `RANK_TOL` times the largest diagonal (rank-deficient design).
pub fn householder_lstsq<F: Real>(x: &MatrixOf<F>, y: &[F]) -> Result<LeastSquares<F>> {
    let n = x.nrows();
    let p = x.ncols();
    assert_eq!(y.len(), n, "response length mismatch");
    if n < p {
        return Err(Error::invalid(format!(
            "least squares needs rows >= columns, got {n} x {p}"
        )));
    }
    let mut a = x.clone();
    let mut w: Vec<F> = y.to_vec();

    // Householder triangularization, applied simultaneously to the response.
    for k in 0..p {
        // Norm of the active part of column k.
        let mut norm = F::zero();
        for i in k..n {
            norm = norm + a[(i, k)] * a[(i, k)];
        }
        norm = norm.sqrt();
        if norm > F::zero() {
            let alpha = if a[(k, k)] >= F::zero() { -norm } else { norm };
            // Householder vector v, stored temporarily (v_k = a_kk - alpha).
            let mut v = vec![F::zero(); n - k];
            v[0] = a[(k, k)] - alpha;
            for i in k + 1..n {
                v[i - k] = a[(i, k)];
            }
            let vtv = v.iter().fold(F::zero(), |acc, &t| acc + t * t);
            a[(k, k)] = alpha;
            for i in k + 1..n {
                a[(i, k)] = F::zero();
            }
            if vtv > F::zero() {
                let two = F::of(2.0);
                for j in k + 1..p {
                    let mut dot = F::zero();
                    for i in k..n {
                        dot = dot + v[i - k] * a[(i, j)];
                    }
                    let scale = two * dot / vtv;
                    for i in k..n {
                        a[(i, j)] = a[(i, j)] - scale * v[i - k];
                    }
                }
                let mut dot = F::zero();
                for i in k..n {
                    dot = dot + v[i - k] * w[i];
                }
                let scale = two * dot / vtv;
                for i in k..n {
                    w[i] = w[i] - scale * v[i - k];
                }
            }
        }
    }

    // Rank check on the diagonal of R.
    let tol = F::of(RANK_TOL);
    let max_diag = (0..p)
        .map(|j| a[(j, j)].abs())
        .fold(F::zero(), |m, d| if d > m { d } else { m });
    for j in 0..p {
        if a[(j, j)].abs() <= tol * max_diag || max_diag == F::zero() {
            return Err(Error::SingularDesign {
                column_index: j,
                column_name: format!("x{j}"),
            });
        }
    }

    // Back substitution: R b = Q'y (first p components of w).
    let mut b = vec![F::zero(); p];
    for j in (0..p).rev() {
        let mut s = w[j];
        for k in j + 1..p {
            s = s - a[(j, k)] * b[k];
        }
        b[j] = s / a[(j, j)];
    }

    // Extract R.
    let mut r = MatrixOf::zeros(p, p);
    for i in 0..p {
        for j in i..p {
            r[(i, j)] = a[(i, j)];
        }
    }

    Ok(LeastSquares {
        coefficients: b,
        r,
    })
}

/// Invert an upper-triangular matrix by back substitution.
pub fn invert_upper<F: Real>(r: &MatrixOf<F>) -> MatrixOf<F> {
    let p = r.nrows();
    assert_eq!(p, r.ncols(), "triangular inverse needs a square matrix");
    let mut inv = MatrixOf::zeros(p, p);
    for col in 0..p {
        // Solve R x = e_col.
        for j in (0..p).rev() {
            let mut s = if j == col { F::one() } else { F::zero() };
            for k in j + 1..p {
                s = s - r[(j, k)] * inv[(k, col)];
            }
            inv[(j, col)] = s / r[(j, j)];
        }
    }
    inv
}

/// Solve a square linear system `A x = b` (used for Mahalanobis distances and
/// other small symmetric solves). Errors if `A` is singular at [`RANK_TOL`].
pub fn solve<F: Real>(a: &MatrixOf<F>, b: &[F]) -> Result<Vec<F>> {
    assert_eq!(a.nrows(), a.ncols(), "solve needs a square matrix");
    Ok(householder_lstsq(a, b)?.coefficients)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lstsq_recovers_exact_solution() {
        // y = 1 + 2 x with no noise.
        let xs = [0.0, 1.0, 2.0, 3.0];
        let x = MatrixOf::from_rows(&xs.iter().map(|&v| vec![1.0, v]).collect::<Vec<_>>());
        let y: Vec<f64> = xs.iter().map(|&v| 1.0 + 2.0 * v).collect();
        let fit = householder_lstsq(&x, &y).unwrap();
        assert!((fit.coefficients[0] - 1.0).abs() < 1e-12);
        assert!((fit.coefficients[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn rank_deficiency_names_column() {
        // Third column duplicates the second.
        let x = MatrixOf::from_rows(&[
            vec![1.0, 1.0, 1.0],
            vec![1.0, 2.0, 2.0],
            vec![1.0, 3.0, 3.0],
            vec![1.0, 4.0, 4.0],
        ]);
        let y = vec![0.0; 4];
        match householder_lstsq(&x, &y) {
            Err(Error::SingularDesign { column_index, .. }) => assert_eq!(column_index, 2),
            other => panic!("expected singular design, got {other:?}"),
        }
    }

    #[test]
    fn xtx_inverse_matches_direct_inverse() {
        let x = MatrixOf::from_rows(&[
            vec![1.0, 0.5],
            vec![1.0, 1.5],
            vec![1.0, -0.5],
            vec![1.0, 2.5],
        ]);
        let y = vec![1.0, 2.0, 0.0, 3.0];
        let fit = householder_lstsq(&x, &y).unwrap();
        let inv = fit.xtx_inverse();
        // Check (X'X) * inv = I.
        let xtx = x.transpose().matmul(&x);
        let prod = xtx.matmul(&inv);
        for i in 0..2 {
            for j in 0..2 {
                let expect: f64 = if i == j { 1.0 } else { 0.0 };
                assert!((prod[(i, j)] - expect).abs() < 1e-10);
            }
        }
    }
}
