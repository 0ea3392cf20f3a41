//! Dense row-major matrices and the elementwise operations every descriptor
//! in this crate is expressed in.
//!
//! All arithmetic is 64-bit floating point. Raw 8-bit pixels are converted
//! on ingest; intermediate maps hold unrestricted reals.

use std::ops::Index;

use crate::error::{Error, Result};

/// Dense real-valued `rows x cols` grid, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl ImageMatrix {
    /// Builds a matrix from row-major data. Fails when the data length does
    /// not equal `rows * cols` or when either dimension is zero.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Input(format!(
                "matrix dimensions must be at least 1x1, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::Input(format!(
                "data length {} does not match {rows}x{cols}",
                data.len()
            )));
        }
        Ok(ImageMatrix { rows, cols, data })
    }

    /// All-zeros matrix. Panics on zero dimensions (programmer error).
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows >= 1 && cols >= 1, "matrix dimensions must be >= 1");
        ImageMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn constant(rows: usize, cols: usize, value: f64) -> Self {
        let mut m = Self::zeros(rows, cols);
        m.data.fill(value);
        m
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    /// Builds a matrix by evaluating `f(row, col)` at every position.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                m.data[r * cols + c] = f(r, c);
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.data[row * self.cols + col] = value;
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.cols..(row + 1) * self.cols]
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

    fn require_same_shape(&self, other: &Self, op: &'static str) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::ShapeMismatch {
                op,
                a_rows: self.rows,
                a_cols: self.cols,
                b_rows: other.rows,
                b_cols: other.cols,
            });
        }
        Ok(())
    }

    /// Standard matrix product. Accumulation runs in ascending `k` order for
    /// every output entry; the banded and permutation fast paths in
    /// [`crate::projection`] reproduce exactly this order so the two routes
    /// stay bit-identical.
    pub fn matmul(&self, rhs: &Self) -> Result<Self> {
        if self.cols != rhs.rows {
            return Err(Error::ShapeMismatch {
                op: "matmul",
                a_rows: self.rows,
                a_cols: self.cols,
                b_rows: rhs.rows,
                b_cols: rhs.cols,
            });
        }
        let mut out = ImageMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            let row_out = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                let row_b = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
                for (o, &b) in row_out.iter_mut().zip(row_b) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// Elementwise product.
    pub fn hadamard(&self, rhs: &Self) -> Result<Self> {
        self.require_same_shape(rhs, "hadamard")?;
        let data = self
            .data
            .iter()
            .zip(&rhs.data)
            .map(|(a, b)| a * b)
            .collect();
        Ok(ImageMatrix {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    /// Entrywise power. For exponent -1/2 every entry must be strictly
    /// positive; callers add their epsilon guard first.
    pub fn elementwise_pow(&self, exponent: f64) -> Result<Self> {
        if exponent == -0.5 {
            if let Some(bad) = self.data.iter().find(|v| **v <= 0.0) {
                return Err(Error::Domain(format!(
                    "elementwise_pow(-1/2) requires strictly positive entries, found {bad}"
                )));
            }
        }
        let data = self.data.iter().map(|v| v.powf(exponent)).collect();
        Ok(ImageMatrix {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    /// Entrywise unit step: 1 where the entry is >= 0, else 0. Zero maps to 1.
    pub fn step(&self) -> Self {
        let data = self
            .data
            .iter()
            .map(|&v| if v >= 0.0 { 1.0 } else { 0.0 })
            .collect();
        ImageMatrix {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    pub fn transpose(&self) -> Self {
        let mut out = ImageMatrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.data[c * self.rows + r] = self.data[r * self.cols + c];
            }
        }
        out
    }

    pub fn add(&self, rhs: &Self) -> Result<Self> {
        self.require_same_shape(rhs, "add")?;
        let data = self
            .data
            .iter()
            .zip(&rhs.data)
            .map(|(a, b)| a + b)
            .collect();
        Ok(ImageMatrix {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    pub fn sub(&self, rhs: &Self) -> Result<Self> {
        self.require_same_shape(rhs, "sub")?;
        let data = self
            .data
            .iter()
            .zip(&rhs.data)
            .map(|(a, b)| a - b)
            .collect();
        Ok(ImageMatrix {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    pub fn add_scalar(&self, k: f64) -> Self {
        let data = self.data.iter().map(|v| v + k).collect();
        ImageMatrix {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    pub fn scale(&self, k: f64) -> Self {
        let data = self.data.iter().map(|v| v * k).collect();
        ImageMatrix {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    /// Largest absolute entry difference; infinity when shapes differ.
    pub fn max_abs_diff(&self, rhs: &Self) -> f64 {
        if self.shape() != rhs.shape() {
            return f64::INFINITY;
        }
        self.data
            .iter()
            .zip(&rhs.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Bit-level equality of every entry (distinguishes -0.0 from 0.0).
    pub fn bit_eq(&self, rhs: &Self) -> bool {
        self.shape() == rhs.shape()
            && self
                .data
                .iter()
                .zip(&rhs.data)
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

impl Index<(usize, usize)> for ImageMatrix {
    type Output = f64;

    fn index(&self, (row, col): (usize, usize)) -> &f64 {
        &self.data[row * self.cols + col]
    }
}
