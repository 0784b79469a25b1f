//! Small dense linear-algebra kernels.
//!
//! Problems handled here are dense and small (a few hundred variables at
//! most), so everything is stored row-major in a `Vec<f64>` and factorized
//! directly.

use serde::{Deserialize, Serialize};

use crate::error::{AdicError, Result};

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// Builds a matrix from row-major data.
    ///
    /// Panics if `data.len() != rows * cols`.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "row-major data has wrong length");
        Self { rows, cols, data }
    }

    /// Builds a matrix from a slice of equally long rows. `cols` is needed
    /// for the zero-row case.
    pub fn from_rows(cols: usize, rows: &[Vec<f64>]) -> Self {
        let mut data = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            assert_eq!(row.len(), cols, "ragged rows");
            data.extend_from_slice(row);
        }
        Self {
            rows: rows.len(),
            cols,
            data,
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    /// `A v`
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(v.len(), self.cols);
        (0..self.rows).map(|i| dot(self.row(i), v)).collect()
    }

    /// `Aᵀ v`
    pub fn tr_mul_vec(&self, v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(v.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for (i, &vi) in v.iter().enumerate() {
            if vi != 0.0 {
                axpy(vi, self.row(i), &mut out);
            }
        }
        out
    }

    /// `A Aᵀ`
    pub fn gram(&self) -> DenseMatrix {
        let m = self.rows;
        let mut g = DenseMatrix::zeros(m, m);
        for i in 0..m {
            for j in 0..=i {
                let v = dot(self.row(i), self.row(j));
                g[(i, j)] = v;
                g[(j, i)] = v;
            }
        }
        g
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut t = DenseMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    /// Keeps only the listed columns, in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.rows, cols.len());
        for i in 0..self.rows {
            for (jj, &j) in cols.iter().enumerate() {
                out[(i, jj)] = self[(i, j)];
            }
        }
        out
    }

    pub fn frobenius_norm(&self) -> f64 {
        norm2(&self.data)
    }
}

impl std::ops::Index<(usize, usize)> for DenseMatrix {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for DenseMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `y += a x`
#[inline]
pub fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

pub fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |acc: f64, x| acc.max(x.abs()))
}

/// Lower-triangular Cholesky factor of `JJᵀ + δI`.
#[derive(Debug, Clone)]
pub struct GramFactor {
    lower: DenseMatrix,
    delta: f64,
}

/// Relative regularization ladder tried after a failed plain factorization.
const REGULARIZATION_LADDER: [f64; 3] = [1e-10, 1e-8, 1e-6];

impl GramFactor {
    /// Factorizes `JJᵀ`, falling back to `JJᵀ + δI` with
    /// `δ ∈ {1e-10, 1e-8, 1e-6}·(1 + ‖JJᵀ‖_F)`.
    pub fn new(j: &DenseMatrix) -> Result<Self> {
        Self::from_gram(j.gram())
    }

    pub fn from_gram(a: DenseMatrix) -> Result<Self> {
        if let Some(lower) = cholesky(&a, 0.0) {
            return Ok(Self { lower, delta: 0.0 });
        }
        let scale = 1.0 + a.frobenius_norm();
        for rel in REGULARIZATION_LADDER {
            let delta = rel * scale;
            if let Some(lower) = cholesky(&a, delta) {
                return Ok(Self { lower, delta });
            }
        }
        Err(AdicError::RankDeficient { size: a.rows() })
    }

    pub fn size(&self) -> usize {
        self.lower.rows()
    }

    /// Regularization actually applied (0 when the plain factorization
    /// succeeded).
    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn lower(&self) -> &DenseMatrix {
        &self.lower
    }

    /// Solves `(JJᵀ + δI) y = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let l = &self.lower;
        let m = l.rows();
        let mut y = b.to_vec();
        for i in 0..m {
            let mut s = y[i];
            for k in 0..i {
                s -= l[(i, k)] * y[k];
            }
            y[i] = s / l[(i, i)];
        }
        for i in (0..m).rev() {
            let mut s = y[i];
            for k in i + 1..m {
                s -= l[(k, i)] * y[k];
            }
            y[i] = s / l[(i, i)];
        }
        y
    }
}

/// Plain Cholesky of `a + delta·I`; `None` when a pivot is not safely
/// positive.
fn cholesky(a: &DenseMatrix, delta: f64) -> Option<DenseMatrix> {
    let m = a.rows();
    let max_diag = (0..m).fold(0.0f64, |acc, i| acc.max(a[(i, i)].abs())) + delta;
    let pivot_floor = 1e-13 * max_diag.max(f64::MIN_POSITIVE);
    let mut l = DenseMatrix::zeros(m, m);
    for j in 0..m {
        let mut d = a[(j, j)] + delta;
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > pivot_floor) {
            return None;
        }
        let d = d.sqrt();
        l[(j, j)] = d;
        for i in j + 1..m {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / d;
        }
    }
    Some(l)
}

/// Least-squares multipliers and the nullspace projection of the gradient.
#[derive(Debug, Clone)]
pub struct LsqMultipliers {
    /// Solves `(JJᵀ) λ = −J g`.
    pub lambda: Vec<f64>,
    /// `g + Jᵀ λ`, the projection of `g` onto `null(J)`.
    pub g_t: Vec<f64>,
    /// Regularization used by the factorization (0 if none).
    pub delta: f64,
}

/// Least-squares Lagrange multipliers for gradient `g` and Jacobian `j`.
pub fn lsq_multipliers(j: &DenseMatrix, g: &[f64]) -> Result<LsqMultipliers> {
    assert_eq!(j.cols(), g.len(), "Jacobian / gradient shape mismatch");
    if j.rows() == 0 {
        return Ok(LsqMultipliers {
            lambda: Vec::new(),
            g_t: g.to_vec(),
            delta: 0.0,
        });
    }
    let factor = GramFactor::new(j)?;
    let rhs: Vec<f64> = j.mul_vec(g).into_iter().map(|v| -v).collect();
    let lambda = factor.solve(&rhs);
    let mut g_t = g.to_vec();
    axpy_rows(j, &lambda, &mut g_t);
    Ok(LsqMultipliers {
        lambda,
        g_t,
        delta: factor.delta(),
    })
}

/// `out += Jᵀ y`
fn axpy_rows(j: &DenseMatrix, y: &[f64], out: &mut [f64]) {
    for (i, &yi) in y.iter().enumerate() {
        axpy(yi, j.row(i), out);
    }
}

/// `‖J s‖∞`
pub fn nullspace_residual(j: &DenseMatrix, s: &[f64]) -> f64 {
    norm_inf(&j.mul_vec(s))
}

/// Solves a square system by Gaussian elimination with partial pivoting.
/// Returns `None` for a numerically singular matrix.
pub fn solve_dense(a: &DenseMatrix, b: &[f64]) -> Option<Vec<f64>> {
    let n = a.rows();
    assert_eq!(a.cols(), n);
    assert_eq!(b.len(), n);
    let mut m = a.clone();
    let mut x = b.to_vec();
    let scale = m.data().iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    if n == 0 {
        return Some(x);
    }
    if scale == 0.0 {
        return None;
    }
    for col in 0..n {
        let (piv, pval) =
            (col..n)
                .map(|r| (r, m[(r, col)].abs()))
                .fold(
                    (col, -1.0),
                    |best, cur| if cur.1 > best.1 { cur } else { best },
                );
        if pval <= 1e-13 * scale {
            return None;
        }
        if piv != col {
            for k in 0..n {
                m.data.swap(col * n + k, piv * n + k);
            }
            x.swap(col, piv);
        }
        let p = m[(col, col)];
        for r in col + 1..n {
            let f = m[(r, col)] / p;
            if f != 0.0 {
                for k in col..n {
                    m[(r, k)] -= f * m[(col, k)];
                }
                x[r] -= f * x[col];
            }
        }
    }
    for r in (0..n).rev() {
        let mut s = x[r];
        for k in r + 1..n {
            s -= m[(r, k)] * x[k];
        }
        x[r] = s / m[(r, r)];
    }
    Some(x)
}
