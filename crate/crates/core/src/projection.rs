//! Precomputed projection operators: circulant shift permutations and banded
//! pooling matrices.
//!
//! Each operator has two application routes. The fast route works by index
//! remapping (shifts) or banded accumulation (pooling); the dense route
//! materializes the operator matrix and multiplies. The two are bit-identical
//! by construction, and the dense route serves as the correctness oracle for
//! the fast one.

use crate::error::{Error, Result};
use crate::matrix::ImageMatrix;

/// Which route to push an image through an operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OperatorPath {
    /// Index remapping / banded accumulation.
    #[default]
    Fast,
    /// Explicit product with the materialized operator matrix.
    Dense,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    /// Applied on the right of the image; moves columns.
    Horizontal,
    /// Applied on the left of the image; moves rows.
    Vertical,
}

/// Circulant permutation shifting an image by `shift` positions along one
/// axis, wrapping at the border.
///
/// Conventions (negative `shift` is the inverse = transpose operator):
///
/// - horizontal: `(X * H_l)(r, c) = X(r, (c + l) mod N)`
/// - vertical:   `(V_l * X)(r, c) = X((r + l) mod M, c)`
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ShiftOperator {
    size: usize,
    shift: i64,
    axis: Axis,
}

#[inline]
fn wrap(index: usize, offset: i64, len: usize) -> usize {
    let n = len as i64;
    (((index as i64 + offset) % n + n) % n) as usize
}

impl ShiftOperator {
    pub fn new(size: usize, shift: i64, axis: Axis) -> Result<Self> {
        if size < 2 {
            return Err(Error::Config(format!(
                "shift operator needs an axis length of at least 2, got {size}"
            )));
        }
        if shift.unsigned_abs() as usize >= size {
            return Err(Error::Config(format!(
                "shift distance |{shift}| must be smaller than the axis length {size}"
            )));
        }
        Ok(ShiftOperator { size, shift, axis })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn shift(&self) -> i64 {
        self.shift
    }

    pub fn axis(&self) -> Axis {
        self.axis
    }

    /// The operator shifting by the opposite distance; its matrix is the
    /// transpose (= inverse) of this one's.
    pub fn inverse(&self) -> Self {
        ShiftOperator {
            size: self.size,
            shift: -self.shift,
            axis: self.axis,
        }
    }

    /// Materializes the permutation matrix realizing this shift.
    pub fn to_matrix(&self) -> ImageMatrix {
        let n = self.size;
        let mut m = ImageMatrix::zeros(n, n);
        match self.axis {
            // column c of H reads input column (c + l) mod n
            Axis::Horizontal => {
                for j in 0..n {
                    m.set(wrap(j, self.shift, n), j, 1.0);
                }
            }
            // row r of V reads input row (r + l) mod n
            Axis::Vertical => {
                for i in 0..n {
                    m.set(i, wrap(i, self.shift, n), 1.0);
                }
            }
        }
        m
    }

    /// Shifts the image through the fast index-remapping route.
    pub fn apply(&self, x: &ImageMatrix) -> Result<ImageMatrix> {
        self.check_dims(x)?;
        let (rows, cols) = x.shape();
        let out = match self.axis {
            Axis::Horizontal => ImageMatrix::from_fn(rows, cols, |r, c| {
                x.get(r, wrap(c, self.shift, cols))
            }),
            Axis::Vertical => ImageMatrix::from_fn(rows, cols, |r, c| {
                x.get(wrap(r, self.shift, rows), c)
            }),
        };
        Ok(out)
    }

    /// Shifts the image by multiplying with the materialized matrix.
    pub fn apply_dense(&self, x: &ImageMatrix) -> Result<ImageMatrix> {
        self.check_dims(x)?;
        match self.axis {
            Axis::Horizontal => x.matmul(&self.to_matrix()),
            Axis::Vertical => self.to_matrix().matmul(x),
        }
    }

    pub fn apply_via(&self, x: &ImageMatrix, path: OperatorPath) -> Result<ImageMatrix> {
        match path {
            OperatorPath::Fast => self.apply(x),
            OperatorPath::Dense => self.apply_dense(x),
        }
    }

    fn check_dims(&self, x: &ImageMatrix) -> Result<()> {
        let relevant = match self.axis {
            Axis::Horizontal => x.cols(),
            Axis::Vertical => x.rows(),
        };
        if relevant != self.size {
            return Err(Error::ShapeMismatch {
                op: "apply_shift",
                a_rows: x.rows(),
                a_cols: x.cols(),
                b_rows: self.size,
                b_cols: self.size,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// Applied on the left of the image; pools rows.
    Left,
    /// Applied on the right of the image; pools columns.
    Right,
}

/// Banded windowed pooling matrix with cell size `cell` and window overlap
/// `overlap` (stride = cell - overlap).
///
/// Window `k` covers input positions `k*stride .. k*stride + cell`. Entries
/// are `1/cell` when `normalized` (averaging) and `1` otherwise (summing).
/// The right-side operator is the transpose of the left-side one built on
/// the column count. Trailing inputs not covered by any window are dropped
/// with a warning.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PoolingOperator {
    input_length: usize,
    cell: usize,
    overlap: usize,
    normalized: bool,
    side: Side,
    windows: usize,
    dropped: usize,
}

impl PoolingOperator {
    pub fn new(
        input_length: usize,
        cell: usize,
        overlap: usize,
        normalized: bool,
        side: Side,
    ) -> Result<Self> {
        if cell == 0 {
            return Err(Error::Config("pooling cell size must be at least 1".into()));
        }
        if cell > input_length {
            return Err(Error::Config(format!(
                "pooling cell {cell} exceeds input length {input_length}"
            )));
        }
        if overlap >= cell {
            return Err(Error::Config(format!(
                "pooling overlap {overlap} must be smaller than the cell {cell}"
            )));
        }
        let stride = cell - overlap;
        let windows = (input_length - cell) / stride + 1;
        let covered = (windows - 1) * stride + cell;
        let dropped = input_length - covered;
        if dropped > 0 {
            log::warn!(
                "pooling(n={input_length}, c={cell}, v={overlap}) leaves {dropped} trailing \
                 input position(s) uncovered; they are dropped"
            );
        }
        Ok(PoolingOperator {
            input_length,
            cell,
            overlap,
            normalized,
            side,
            windows,
            dropped,
        })
    }

    pub fn input_length(&self) -> usize {
        self.input_length
    }

    pub fn cell(&self) -> usize {
        self.cell
    }

    pub fn overlap(&self) -> usize {
        self.overlap
    }

    pub fn stride(&self) -> usize {
        self.cell - self.overlap
    }

    pub fn windows(&self) -> usize {
        self.windows
    }

    /// Number of trailing input positions no window covers.
    pub fn dropped(&self) -> usize {
        self.dropped
    }

    pub fn weight(&self) -> f64 {
        if self.normalized {
            1.0 / self.cell as f64
        } else {
            1.0
        }
    }

    pub fn window_start(&self, window: usize) -> usize {
        window * self.stride()
    }

    /// Materializes the banded matrix: `windows x n` for the left side,
    /// `n x windows` for the right side.
    pub fn to_matrix(&self) -> ImageMatrix {
        let w = self.weight();
        match self.side {
            Side::Left => {
                let mut m = ImageMatrix::zeros(self.windows, self.input_length);
                for k in 0..self.windows {
                    for j in self.window_start(k)..self.window_start(k) + self.cell {
                        m.set(k, j, w);
                    }
                }
                m
            }
            Side::Right => {
                let mut m = ImageMatrix::zeros(self.input_length, self.windows);
                for k in 0..self.windows {
                    for i in self.window_start(k)..self.window_start(k) + self.cell {
                        m.set(i, k, w);
                    }
                }
                m
            }
        }
    }

    /// Pools the image through the banded fast route. Accumulation follows
    /// ascending input index, matching the dense product bit for bit.
    pub fn apply(&self, x: &ImageMatrix) -> Result<ImageMatrix> {
        let w = self.weight();
        match self.side {
            Side::Left => {
                self.check_dims(x.rows(), x)?;
                let mut out = ImageMatrix::zeros(self.windows, x.cols());
                for win in 0..self.windows {
                    let start = self.window_start(win);
                    for k in start..start + self.cell {
                        for j in 0..x.cols() {
                            let v = out.get(win, j) + w * x.get(k, j);
                            out.set(win, j, v);
                        }
                    }
                }
                Ok(out)
            }
            Side::Right => {
                self.check_dims(x.cols(), x)?;
                let mut out = ImageMatrix::zeros(x.rows(), self.windows);
                for i in 0..x.rows() {
                    for win in 0..self.windows {
                        let start = self.window_start(win);
                        let mut acc = 0.0;
                        for k in start..start + self.cell {
                            acc += x.get(i, k) * w;
                        }
                        out.set(i, win, acc);
                    }
                }
                Ok(out)
            }
        }
    }

    pub fn apply_dense(&self, x: &ImageMatrix) -> Result<ImageMatrix> {
        match self.side {
            Side::Left => {
                self.check_dims(x.rows(), x)?;
                self.to_matrix().matmul(x)
            }
            Side::Right => {
                self.check_dims(x.cols(), x)?;
                x.matmul(&self.to_matrix())
            }
        }
    }

    pub fn apply_via(&self, x: &ImageMatrix, path: OperatorPath) -> Result<ImageMatrix> {
        match path {
            OperatorPath::Fast => self.apply(x),
            OperatorPath::Dense => self.apply_dense(x),
        }
    }

    /// Applies the transposed operator: spreads window values back onto input
    /// positions, summing the contributions of every covering window.
    pub fn apply_transposed(&self, x: &ImageMatrix) -> Result<ImageMatrix> {
        let w = self.weight();
        match self.side {
            // L^T maps `windows x cols` back to `n x cols`
            Side::Left => {
                self.check_transposed_dims(x.rows(), x)?;
                let mut out = ImageMatrix::zeros(self.input_length, x.cols());
                for k in 0..self.input_length {
                    let (lo, hi) = self.covering_windows(k);
                    for win in lo..hi {
                        for j in 0..x.cols() {
                            let v = out.get(k, j) + w * x.get(win, j);
                            out.set(k, j, v);
                        }
                    }
                }
                Ok(out)
            }
            // R^T maps `rows x windows` back to `rows x n`
            Side::Right => {
                self.check_transposed_dims(x.cols(), x)?;
                let mut out = ImageMatrix::zeros(x.rows(), self.input_length);
                for i in 0..x.rows() {
                    for k in 0..self.input_length {
                        let (lo, hi) = self.covering_windows(k);
                        let mut acc = 0.0;
                        for win in lo..hi {
                            acc += x.get(i, win) * w;
                        }
                        out.set(i, k, acc);
                    }
                }
                Ok(out)
            }
        }
    }

    pub fn apply_transposed_dense(&self, x: &ImageMatrix) -> Result<ImageMatrix> {
        let t = self.to_matrix().transpose();
        match self.side {
            Side::Left => {
                self.check_transposed_dims(x.rows(), x)?;
                t.matmul(x)
            }
            Side::Right => {
                self.check_transposed_dims(x.cols(), x)?;
                x.matmul(&t)
            }
        }
    }

    pub fn apply_transposed_via(&self, x: &ImageMatrix, path: OperatorPath) -> Result<ImageMatrix> {
        match path {
            OperatorPath::Fast => self.apply_transposed(x),
            OperatorPath::Dense => self.apply_transposed_dense(x),
        }
    }

    /// Half-open range of windows covering input position `k`.
    fn covering_windows(&self, k: usize) -> (usize, usize) {
        let s = self.stride();
        let lo = if k + 1 > self.cell {
            (k + 1 - self.cell).div_ceil(s)
        } else {
            0
        };
        let hi = (k / s + 1).min(self.windows);
        (lo.min(hi), hi)
    }

    fn check_dims(&self, relevant: usize, x: &ImageMatrix) -> Result<()> {
        if relevant != self.input_length {
            return Err(Error::ShapeMismatch {
                op: "apply_pooling",
                a_rows: x.rows(),
                a_cols: x.cols(),
                b_rows: self.input_length,
                b_cols: self.windows,
            });
        }
        Ok(())
    }

    fn check_transposed_dims(&self, relevant: usize, x: &ImageMatrix) -> Result<()> {
        if relevant != self.windows {
            return Err(Error::ShapeMismatch {
                op: "apply_pooling_transposed",
                a_rows: x.rows(),
                a_cols: x.cols(),
                b_rows: self.windows,
                b_cols: self.input_length,
            });
        }
        Ok(())
    }
}

/// Pools both axes: left operator on rows, right operator on columns, with
/// the row pooling applied first.
pub fn pool_both_axes(
    x: &ImageMatrix,
    cell: usize,
    overlap: usize,
    normalized: bool,
    path: OperatorPath,
) -> Result<ImageMatrix> {
    let left = PoolingOperator::new(x.rows(), cell, overlap, normalized, Side::Left)?;
    let right = PoolingOperator::new(x.cols(), cell, overlap, normalized, Side::Right)?;
    right.apply_via(&left.apply_via(x, path)?, path)
}
