//! Dense row-major matrices and a Householder least-squares solver.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Alignment {
                expected: rows * cols,
                found: data.len(),
            });
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(Error::Alignment {
                    expected: cols,
                    found: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Ok(Matrix {
            rows: rows.len(),
            cols,
            data,
        })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
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
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Rows selected by index, in the given order.
    pub fn select_rows(&self, idx: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Matrix {
            rows: idx.len(),
            cols: self.cols,
            data,
        }
    }

    /// Copy with a leading column of ones.
    pub fn with_intercept(&self) -> Matrix {
        let cols = self.cols + 1;
        let mut data = Vec::with_capacity(self.rows * cols);
        for r in 0..self.rows {
            data.push(1.0);
            data.extend_from_slice(self.row(r));
        }
        Matrix {
            rows: self.rows,
            cols,
            data,
        }
    }

    /// `self * v`
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(v.len(), self.cols);
        (0..self.rows).map(|r| dot(self.row(r), v)).collect()
    }

    /// `selfᵀ * v`
    pub fn tr_mul_vec(&self, v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(v.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for (r, &w) in v.iter().enumerate() {
            for (o, x) in out.iter_mut().zip(self.row(r)) {
                *o += w * x;
            }
        }
        out
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `c = alpha * a * b + beta * c` for row-major operands, with optional transposes.
///
/// `a` is `m x k` after the optional transpose, `b` is `k x n`, `c` is `m x n`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn gemm(
    m: usize,
    k: usize,
    n: usize,
    alpha: f64,
    a: &[f64],
    a_trans: bool,
    b: &[f64],
    b_trans: bool,
    beta: f64,
    c: &mut [f64],
) {
    // Row/column strides for the logical (possibly transposed) views.
    let (rsa, csa) = if a_trans { (1, m as isize) } else { (k as isize, 1) };
    let (rsb, csb) = if b_trans { (1, k as isize) } else { (n as isize, 1) };
    assert!(a.len() >= m * k && b.len() >= k * n && c.len() >= m * n);
    // SAFETY: the asserted lengths cover every offset reachable from the strides above.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            alpha,
            a.as_ptr(),
            rsa,
            csa,
            b.as_ptr(),
            rsb,
            csb,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

/// Solves `min ||a x - b||₂` through a Householder QR factorization.
///
/// A column whose diagonal entry of R falls below `1e-10` times its original
/// norm is treated as linearly dependent on the columns before it, and its
/// name (from `names`) is reported in the error.
pub fn least_squares(a: &Matrix, b: &[f64], names: &[String]) -> Result<Vec<f64>> {
    let (n, p) = (a.rows(), a.cols());
    if b.len() != n {
        return Err(Error::Alignment {
            expected: n,
            found: b.len(),
        });
    }
    if n < p {
        return Err(Error::Size { n, min: p });
    }
    // Column-major working copy.
    let mut cols: Vec<Vec<f64>> = (0..p).map(|j| a.column(j)).collect();
    let norms: Vec<f64> = cols.iter().map(|c| dot(c, c).sqrt()).collect();
    let mut rhs = b.to_vec();
    let mut diag = vec![0.0; p];

    for j in 0..p {
        let alpha = {
            let tail = &cols[j][j..];
            let norm = dot(tail, tail).sqrt();
            if cols[j][j] > 0.0 {
                -norm
            } else {
                norm
            }
        };
        let name = || names.get(j).cloned().unwrap_or_else(|| format!("#{j}"));
        if alpha.abs() <= 1e-10 * norms[j] || norms[j] == 0.0 {
            return Err(Error::Singular { column: name() });
        }
        // v = x - alpha e1, stored in place.
        let mut v = cols[j][j..].to_vec();
        v[0] -= alpha;
        let vnorm2 = dot(&v, &v);
        diag[j] = alpha;
        if vnorm2 > 0.0 {
            for col in cols.iter_mut().skip(j + 1) {
                let s = 2.0 * dot(&v, &col[j..]) / vnorm2;
                for (c, vi) in col[j..].iter_mut().zip(&v) {
                    *c -= s * vi;
                }
            }
            let s = 2.0 * dot(&v, &rhs[j..]) / vnorm2;
            for (c, vi) in rhs[j..].iter_mut().zip(&v) {
                *c -= s * vi;
            }
        }
    }

    // Back substitution with R[j][j] = diag[j], R[i][j] = cols[j][i] for i < j.
    let mut x = vec![0.0; p];
    for i in (0..p).rev() {
        let mut s = rhs[i];
        for j in i + 1..p {
            s -= cols[j][i] * x[j];
        }
        x[i] = s / diag[i];
    }
    Ok(x)
}

pub(crate) fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Sample standard deviation with an `n - 1` denominator (0 for fewer than 2 values).
pub(crate) fn sample_sd(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let m = mean(v);
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(p: usize) -> Vec<String> {
        (0..p).map(|j| format!("x{j}")).collect()
    }

    #[test]
    fn exact_system_is_recovered() {
        let a = Matrix::from_rows(&[
            vec![1.0, 2.0, 0.5],
            vec![1.0, -1.0, 3.0],
            vec![1.0, 0.0, -2.0],
            vec![1.0, 4.0, 1.0],
        ])
        .unwrap();
        let beta = [0.3, -1.2, 2.5];
        let b = a.mul_vec(&beta);
        let x = least_squares(&a, &b, &names(3)).unwrap();
        for (xi, bi) in x.iter().zip(beta) {
            assert!((xi - bi).abs() < 1e-12);
        }
    }

    #[test]
    fn residual_is_orthogonal_to_columns() {
        let a = Matrix::from_rows(&[
            vec![1.0, 0.1],
            vec![1.0, 0.7],
            vec![1.0, 1.9],
            vec![1.0, 3.2],
            vec![1.0, 4.0],
        ])
        .unwrap();
        let b = [0.2, 1.1, 1.7, 3.9, 3.8];
        let x = least_squares(&a, &b, &names(2)).unwrap();
        let fitted = a.mul_vec(&x);
        let resid: Vec<f64> = b.iter().zip(&fitted).map(|(y, f)| y - f).collect();
        for g in a.tr_mul_vec(&resid) {
            assert!(g.abs() < 1e-12);
        }
    }

    #[test]
    fn dependent_column_is_named() {
        let a = Matrix::from_rows(&[
            vec![1.0, 1.0, 2.0],
            vec![1.0, 2.0, 4.0],
            vec![1.0, 3.0, 6.0],
            vec![1.0, 5.0, 10.0],
        ])
        .unwrap();
        let err = least_squares(&a, &[1.0, 2.0, 3.0, 4.0], &names(3)).unwrap_err();
        assert!(matches!(err, Error::Singular { ref column } if column == "x2"), "{err}");
    }

    #[test]
    fn zero_column_is_singular() {
        let a = Matrix::from_rows(&[vec![1.0, 0.0], vec![1.0, 0.0], vec![1.0, 0.0]]).unwrap();
        assert!(matches!(
            least_squares(&a, &[1.0, 2.0, 3.0], &names(2)),
            Err(Error::Singular { .. })
        ));
    }

    #[test]
    fn gemm_matches_naive_product_with_transposes() {
        let a: Vec<f64> = (0..6).map(|v| v as f64 - 2.0).collect(); // 2x3
        let b: Vec<f64> = (0..12).map(|v| (v as f64) * 0.5).collect(); // 3x4
        let mut c = vec![1.0; 8];
        gemm(2, 3, 4, 1.0, &a, false, &b, false, 2.0, &mut c);
        for i in 0..2 {
            for j in 0..4 {
                let s: f64 = (0..3).map(|k| a[i * 3 + k] * b[k * 4 + j]).sum();
                assert!((c[i * 4 + j] - (s + 2.0)).abs() < 1e-12);
            }
        }
        // aᵀ (3x2) times a (2x3) = 3x3
        let mut g = vec![0.0; 9];
        gemm(3, 2, 3, 1.0, &a, true, &a, false, 0.0, &mut g);
        for i in 0..3 {
            for j in 0..3 {
                let s: f64 = (0..2).map(|k| a[k * 3 + i] * a[k * 3 + j]).sum();
                assert!((g[i * 3 + j] - s).abs() < 1e-12);
            }
        }
    }
}
