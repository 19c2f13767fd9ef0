//! Row-major dense storage for the latent and augmented matrices.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Row-major `rows x cols` matrix of `f64`.
#[derive(Clone, Debug, PartialEq)]
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

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Argument(format!(
                "expected {} values for a {rows}x{cols} matrix, got {}",
                rows * cols,
                data.len()
            )));
        }
        if let Some(bad) = data.iter().find(|v| !v.is_finite()) {
            return Err(Error::Domain(*bad));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Argument("ragged rows".into()));
        }
        Self::from_vec(rows.len(), cols, rows.concat())
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
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

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
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

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.cols.max(1)).map(<[f64]>::to_vec).collect()
    }

    pub fn to_nalgebra(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }

    pub fn from_nalgebra(m: &DMatrix<f64>) -> Self {
        Self::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// `out = beta * out + alpha * a * b` where `b` is a column-major `k x n`
/// nalgebra matrix and `a`, `out` are row-major.
pub(crate) fn gemm_dense_nalgebra(
    alpha: f64,
    a: &DenseMatrix,
    b: &DMatrix<f64>,
    beta: f64,
    out: &mut DenseMatrix,
) {
    let (m, k) = a.shape();
    let n = b.ncols();
    assert_eq!(b.nrows(), k);
    assert_eq!(out.shape(), (m, n));
    if m == 0 || n == 0 {
        return;
    }
    // SAFETY: dimensions and strides describe the three buffers exactly.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            alpha,
            a.data.as_ptr(),
            k as isize,
            1,
            b.as_ptr(),
            1,
            k as isize,
            beta,
            out.data.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

/// `acc += a^T a` for a row-major `a`; `acc` is `cols x cols`.
pub(crate) fn accumulate_gram(a: &DenseMatrix, acc: &mut DMatrix<f64>) {
    let (m, k) = a.shape();
    assert_eq!(acc.shape(), (k, k));
    if m == 0 || k == 0 {
        return;
    }
    // a^T is k x m with row stride 1 and column stride k. acc is column-major.
    unsafe {
        matrixmultiply::dgemm(
            k,
            m,
            k,
            1.0,
            a.data.as_ptr(),
            1,
            k as isize,
            a.data.as_ptr(),
            k as isize,
            1,
            1.0,
            acc.as_mut_ptr(),
            1,
            k as isize,
        );
    }
}

/// Replace `s` by `(s + s^T) / 2`.
pub(crate) fn symmetrize(s: &mut DMatrix<f64>) {
    let n = s.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (s[(i, j)] + s[(j, i)]);
            s[(i, j)] = v;
            s[(j, i)] = v;
        }
    }
}
