//! Dense row-major matrices and the few kernels the selectors need.

use crate::error::{ClgError, Result};

/// Row-major `rows × cols` matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
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
        let expected = rows
            .checked_mul(cols)
            .ok_or_else(|| ClgError::dim(format!("{rows} x {cols} overflows")))?;
        if data.len() != expected {
            return Err(ClgError::dim(format!(
                "buffer of length {} cannot hold a {rows} x {cols} matrix",
                data.len()
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != cols {
                return Err(ClgError::dim(format!(
                    "row {i} has length {}, expected {cols}",
                    r.len()
                )));
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

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        (0..self.rows).map(move |i| self.row(i))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Copy of the matrix restricted to the given rows, in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        Matrix {
            rows: indices.len(),
            cols: self.cols,
            data,
        }
    }

    pub fn scale(&mut self, factor: f64) {
        self.data.iter_mut().for_each(|v| *v *= factor);
    }
}

/// Dot product with four independent accumulators.
///
/// The summation order depends only on the length, so results are identical
/// no matter which thread evaluates them.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let mut tail = 0.0;
    for (x, y) in ra.iter().zip(rb) {
        tail += x * y;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

#[inline]
pub fn squared_norm(a: &[f64]) -> f64 {
    dot(a, a)
}

#[inline]
pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

const PAIRWISE_BLOCK: usize = 8;

/// Column-wise sum of the listed rows using pairwise (cascade) summation.
pub fn pairwise_row_sum(m: &Matrix, indices: &[usize]) -> Vec<f64> {
    let mut out = vec![0.0; m.cols()];
    if indices.is_empty() {
        return out;
    }
    pairwise_into(m, indices, &mut out);
    out
}

fn pairwise_into(m: &Matrix, indices: &[usize], out: &mut [f64]) {
    if indices.len() <= PAIRWISE_BLOCK {
        out.copy_from_slice(m.row(indices[0]));
        for &i in &indices[1..] {
            for (o, v) in out.iter_mut().zip(m.row(i)) {
                *o += v;
            }
        }
        return;
    }
    let mid = indices.len() / 2;
    let mut right = vec![0.0; out.len()];
    pairwise_into(m, &indices[..mid], out);
    pairwise_into(m, &indices[mid..], &mut right);
    for (o, r) in out.iter_mut().zip(&right) {
        *o += r;
    }
}

/// Column means of the listed rows (pairwise summation, then one division).
pub fn pairwise_row_mean(m: &Matrix, indices: &[usize]) -> Vec<f64> {
    let mut s = pairwise_row_sum(m, indices);
    let n = indices.len() as f64;
    s.iter_mut().for_each(|v| *v /= n);
    s
}
