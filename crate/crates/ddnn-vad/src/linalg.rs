//! Small dense matrix type used by the network layers. Row-major `f64`.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::dim(rows * cols, data.len(), "Mat::from_vec"));
        }
        Ok(Mat { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
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

    /// y = A x
    pub fn mul_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(Error::dim(self.cols, x.len(), "Mat::mul_vec input"));
        }
        let mut y = vec![0.0; self.rows];
        for r in 0..self.rows {
            let row = self.row(r);
            let mut acc = 0.0;
            for (a, b) in row.iter().zip(x) {
                acc += a * b;
            }
            y[r] = acc;
        }
        Ok(y)
    }

    /// y = Aᵀ x
    pub fn mul_vec_transposed(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.rows {
            return Err(Error::dim(self.rows, x.len(), "Mat::mul_vec_transposed input"));
        }
        let mut y = vec![0.0; self.cols];
        for r in 0..self.rows {
            let row = self.row(r);
            let xr = x[r];
            for (yc, a) in y.iter_mut().zip(row) {
                *yc += a * xr;
            }
        }
        Ok(y)
    }

    /// self += scale · (a ⊗ b), the outer product of column `a` and row `b`.
    pub fn add_outer_scaled(&mut self, a: &[f64], b: &[f64], scale: f64) -> Result<()> {
        if a.len() != self.rows {
            return Err(Error::dim(self.rows, a.len(), "outer product rows"));
        }
        if b.len() != self.cols {
            return Err(Error::dim(self.cols, b.len(), "outer product cols"));
        }
        for r in 0..self.rows {
            let ar = a[r] * scale;
            let row = &mut self.data[r * self.cols..(r + 1) * self.cols];
            for (w, bv) in row.iter_mut().zip(b) {
                *w += ar * bv;
            }
        }
        Ok(())
    }

    /// self += scale · other, elementwise.
    pub fn add_scaled(&mut self, other: &Mat, scale: f64) -> Result<()> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::dim(
                self.rows * self.cols,
                other.rows * other.cols,
                "Mat::add_scaled shape",
            ));
        }
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += scale * b;
        }
        Ok(())
    }

    pub fn scale(&mut self, s: f64) {
        for v in &mut self.data {
            *v *= s;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

pub fn add_scaled_vec(dst: &mut [f64], src: &[f64], scale: f64) {
    debug_assert_eq!(dst.len(), src.len());
    for (d, s) in dst.iter_mut().zip(src) {
        *d += scale * s;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mul_vec_matches_scalar_loop() {
        let a = Mat::from_vec(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let x = [1.0, 0.5, -1.0];
        let y = a.mul_vec(&x).unwrap();
        let mut expected = [0.0; 2];
        for r in 0..2 {
            for c in 0..3 {
                expected[r] += a.get(r, c) * x[c];
            }
        }
        assert_eq!(y, expected);
    }

    #[test]
    fn transpose_mul_matches_scalar_loop() {
        let a = Mat::from_vec(2, 3, vec![1.0, -2.0, 3.0, 0.5, 5.0, -6.0]).unwrap();
        let x = [2.0, -1.0];
        let y = a.mul_vec_transposed(&x).unwrap();
        let mut expected = [0.0; 3];
        for c in 0..3 {
            for r in 0..2 {
                expected[c] += a.get(r, c) * x[r];
            }
        }
        assert_eq!(y, expected);
    }

    #[test]
    fn mul_vec_rejects_bad_width() {
        let a = Mat::zeros(2, 3);
        assert!(a.mul_vec(&[1.0, 2.0]).is_err());
    }
}
