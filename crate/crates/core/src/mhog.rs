//! Pooled directional-gradient descriptor built from projection operators:
//! difference maps for eight directions, non-overlapping then overlapping
//! average pooling, and block normalization. The pre-normalization variant
//! with zero overlap is the difference-matrix-projection (DMP) descriptor.

use crate::error::{Error, Result};
use crate::matrix::ImageMatrix;
use crate::mlbp::shifted_image;
use crate::projection::{OperatorPath, PoolingOperator, Side};

/// Gradient offsets `(row, col)` for directions 1..=8: four one-pixel
/// differences followed by the same four directions at two-pixel distance.
pub const GRADIENT_OFFSETS: [(i64, i64); 8] = [
    (-1, 1),
    (-1, 0),
    (-1, -1),
    (0, -1),
    (-2, 2),
    (-2, 0),
    (-2, -2),
    (0, -2),
];

/// Parameters of the pooled-gradient descriptor.
///
/// `c2` is the non-overlapping pooling cell applied to the raw difference
/// maps, `c1` and `v` the cell and overlap of the second pooling stage, `b`
/// the block size of the normalization, and `epsilon` the guard added inside
/// the normalization radicand (zero is allowed; flat regions then fail).
#[derive(Debug, Clone, PartialEq)]
pub struct MhogConfig {
    pub c1: usize,
    pub c2: usize,
    pub v: usize,
    pub b: usize,
    pub epsilon: f64,
}

impl Default for MhogConfig {
    fn default() -> Self {
        MhogConfig {
            c1: 4,
            c2: 2,
            v: 2,
            b: 2,
            epsilon: 1e-12,
        }
    }
}

impl MhogConfig {
    pub fn validate(&self) -> Result<()> {
        if self.c1 == 0 || self.c2 == 0 || self.b == 0 {
            return Err(Error::Config("cell and block sizes must be at least 1".into()));
        }
        if self.v >= self.c1 {
            return Err(Error::Config(format!(
                "overlap v={} must be smaller than the pooling cell c1={}",
                self.v, self.c1
            )));
        }
        if !self.epsilon.is_finite() || self.epsilon < 0.0 {
            return Err(Error::Config(format!(
                "epsilon must be a finite non-negative value, got {}",
                self.epsilon
            )));
        }
        Ok(())
    }

    /// Overlap used by the normalization pooling, capped at `b - 1` so the
    /// normalization windows keep a positive stride.
    pub fn norm_overlap(&self) -> usize {
        self.v.min(self.b - 1)
    }

    /// Per-direction output side length for a square-pooled axis of length
    /// `n`: `floor((floor(n / c2) - c1) / (c1 - v)) + 1`.
    pub fn output_len(&self, n: usize) -> Result<usize> {
        self.validate()?;
        let pooled = n / self.c2;
        if pooled < self.c1 {
            return Err(Error::Config(format!(
                "pooled length {pooled} (from input {n}, cell {}) is smaller than c1={}",
                self.c2, self.c1
            )));
        }
        let side = (pooled - self.c1) / (self.c1 - self.v) + 1;
        if side < self.b {
            return Err(Error::Config(format!(
                "pooled output side {side} is smaller than block size b={}",
                self.b
            )));
        }
        Ok(side)
    }

    /// Per-direction output shape on a `rows x cols` input.
    pub fn output_shape(&self, rows: usize, cols: usize) -> Result<(usize, usize)> {
        Ok((self.output_len(rows)?, self.output_len(cols)?))
    }
}

/// Eight same-shape directional maps, one per gradient direction.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionalStack {
    maps: Vec<ImageMatrix>,
}

impl DirectionalStack {
    pub const DIRECTIONS: usize = 8;

    pub fn new(maps: Vec<ImageMatrix>) -> Result<Self> {
        if maps.len() != Self::DIRECTIONS {
            return Err(Error::Input(format!(
                "a directional stack holds exactly 8 maps, got {}",
                maps.len()
            )));
        }
        let shape = maps[0].shape();
        if maps.iter().any(|m| m.shape() != shape) {
            return Err(Error::Input("directional maps must share one shape".into()));
        }
        Ok(DirectionalStack { maps })
    }

    pub fn maps(&self) -> &[ImageMatrix] {
        &self.maps
    }

    pub fn map(&self, direction: usize) -> &ImageMatrix {
        &self.maps[direction]
    }

    pub fn shape(&self) -> (usize, usize) {
        self.maps[0].shape()
    }

    /// Flattens direction-major, row-major within each map.
    pub fn flatten(&self) -> Vec<f64> {
        let (rows, cols) = self.shape();
        let mut out = Vec::with_capacity(8 * rows * cols);
        for m in &self.maps {
            out.extend_from_slice(m.as_slice());
        }
        out
    }

    fn try_map_each(
        &self,
        mut f: impl FnMut(&ImageMatrix) -> Result<ImageMatrix>,
    ) -> Result<DirectionalStack> {
        let maps = self
            .maps
            .iter()
            .map(&mut f)
            .collect::<Result<Vec<_>>>()?;
        DirectionalStack::new(maps)
    }
}

/// Directional difference maps: the image shifted by each gradient offset,
/// minus the image itself. Needs at least a 5x5 input so the two-pixel
/// shifts stay meaningful.
pub fn gradient_stack(x: &ImageMatrix) -> Result<DirectionalStack> {
    gradient_stack_via(x, OperatorPath::Fast)
}

pub(crate) fn gradient_stack_via(x: &ImageMatrix, path: OperatorPath) -> Result<DirectionalStack> {
    if x.rows() < 5 || x.cols() < 5 {
        return Err(Error::Input(format!(
            "gradient stack needs at least a 5x5 image, got {}x{}",
            x.rows(),
            x.cols()
        )));
    }
    let maps = GRADIENT_OFFSETS
        .iter()
        .map(|&(dr, dc)| shifted_image(x, dr, dc, path)?.sub(x))
        .collect::<Result<Vec<_>>>()?;
    DirectionalStack::new(maps)
}

/// Reduces each map by non-overlapping `c2 x c2` averaging.
pub fn pooled_gradients(stack: &DirectionalStack, cfg: &MhogConfig) -> Result<DirectionalStack> {
    pooled_gradients_via(stack, cfg, OperatorPath::Fast)
}

pub(crate) fn pooled_gradients_via(
    stack: &DirectionalStack,
    cfg: &MhogConfig,
    path: OperatorPath,
) -> Result<DirectionalStack> {
    cfg.validate()?;
    let (rows, cols) = stack.shape();
    let left = PoolingOperator::new(rows, cfg.c2, 0, true, Side::Left)?;
    let right = PoolingOperator::new(cols, cfg.c2, 0, true, Side::Right)?;
    stack.try_map_each(|m| right.apply_via(&left.apply_via(m, path)?, path))
}

/// Pools each map with cell `c1` and overlap `v`, averaging entries.
pub fn overlap_pooled(stack: &DirectionalStack, cfg: &MhogConfig) -> Result<DirectionalStack> {
    overlap_pooled_via(stack, cfg, OperatorPath::Fast)
}

pub(crate) fn overlap_pooled_via(
    stack: &DirectionalStack,
    cfg: &MhogConfig,
    path: OperatorPath,
) -> Result<DirectionalStack> {
    cfg.validate()?;
    let (rows, cols) = stack.shape();
    let left = PoolingOperator::new(rows, cfg.c1, cfg.v, true, Side::Left)?;
    let right = PoolingOperator::new(cols, cfg.c1, cfg.v, true, Side::Right)?;
    stack.try_map_each(|m| right.apply_via(&left.apply_via(m, path)?, path))
}

/// Divides each entry by the square root of `epsilon` plus the summed
/// squared energy of every `b x b` block covering it. The spreading step
/// uses the transposed unnormalized pooling operators, so with zero overlap
/// this is exactly the per-block L2 normalization.
pub fn block_normalize(stack: &DirectionalStack, cfg: &MhogConfig) -> Result<DirectionalStack> {
    block_normalize_via(stack, cfg, OperatorPath::Fast)
}

pub(crate) fn block_normalize_via(
    stack: &DirectionalStack,
    cfg: &MhogConfig,
    path: OperatorPath,
) -> Result<DirectionalStack> {
    cfg.validate()?;
    let (rows, cols) = stack.shape();
    let vb = cfg.norm_overlap();
    let left = PoolingOperator::new(rows, cfg.b, vb, false, Side::Left)?;
    let right = PoolingOperator::new(cols, cfg.b, vb, false, Side::Right)?;
    stack.try_map_each(|g| {
        let squared = g.elementwise_pow(2.0)?;
        let block_energy = right.apply_via(&left.apply_via(&squared, path)?, path)?;
        let spread = right.apply_transposed_via(&left.apply_transposed_via(&block_energy, path)?, path)?;
        let inv_norm = spread.add_scalar(cfg.epsilon).elementwise_pow(-0.5)?;
        g.hadamard(&inv_norm)
    })
}

/// The full descriptor stack: gradients, two pooling stages, normalization.
pub fn mhog(x: &ImageMatrix, cfg: &MhogConfig) -> Result<DirectionalStack> {
    mhog_via(x, cfg, true, OperatorPath::Fast)
}

pub(crate) fn mhog_via(
    x: &ImageMatrix,
    cfg: &MhogConfig,
    normalize: bool,
    path: OperatorPath,
) -> Result<DirectionalStack> {
    let gradients = gradient_stack_via(x, path)?;
    let pooled = pooled_gradients_via(&gradients, cfg, path)?;
    let overlapped = overlap_pooled_via(&pooled, cfg, path)?;
    if normalize {
        block_normalize_via(&overlapped, cfg, path)
    } else {
        Ok(overlapped)
    }
}

/// The difference-matrix-projection stack: the same pipeline with zero
/// window overlap and no block normalization.
pub fn dmp(x: &ImageMatrix, cfg: &MhogConfig) -> Result<DirectionalStack> {
    let cfg = MhogConfig { v: 0, ..cfg.clone() };
    mhog_via(x, &cfg, false, OperatorPath::Fast)
}
