use serde::{Deserialize, Serialize};

use super::{NumericsError, Result};

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows * cols != data.len() {
            return Err(NumericsError::DimMismatch {
                expected: rows * cols,
                got: data.len(),
            });
        }
        if !super::all_finite(&data) {
            return Err(NumericsError::NonFinite("matrix data"));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// `y = self * x + bias`, written into `out`.
    pub(crate) fn affine_into(&self, x: &[f64], bias: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(
            self.data
                .chunks_exact(self.cols)
                .zip(bias)
                .map(|(row, b)| row.iter().zip(x).map(|(w, xi)| w * xi).sum::<f64>() + b),
        );
    }

    /// `out = selfᵀ * g`.
    pub(crate) fn transpose_mul_into(&self, g: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.resize(self.cols, 0.0);
        for (row, gi) in self.data.chunks_exact(self.cols).zip(g) {
            for (o, w) in out.iter_mut().zip(row) {
                *o += w * gi;
            }
        }
    }

    /// `self += alpha * g xᵀ`.
    pub(crate) fn add_outer(&mut self, alpha: f64, g: &[f64], x: &[f64]) {
        for (row, gi) in self.data.chunks_exact_mut(self.cols).zip(g) {
            let s = alpha * gi;
            for (w, xi) in row.iter_mut().zip(x) {
                *w += s * xi;
            }
        }
    }
}
