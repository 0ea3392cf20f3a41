//! Scanning-window reference implementations.
//!
//! Everything here is written with explicit per-window loops and shares no
//! application code with the operator-based paths. The benchmark harness
//! times these against the projection routes, the selftest compares them,
//! and the test suites use them as oracles.

use crate::error::{Error, Result};
use crate::matrix::ImageMatrix;
use crate::mhog::{DirectionalStack, MhogConfig, GRADIENT_OFFSETS};

#[inline]
fn wrap(i: i64, n: usize) -> usize {
    i.rem_euclid(n as i64) as usize
}

/// Directional difference maps computed per pixel with wraparound indexing.
pub fn gradient_maps_loop(x: &ImageMatrix) -> Result<DirectionalStack> {
    if x.rows() < 5 || x.cols() < 5 {
        return Err(Error::Input(format!(
            "gradient maps need at least a 5x5 image, got {}x{}",
            x.rows(),
            x.cols()
        )));
    }
    let (rows, cols) = x.shape();
    let maps = GRADIENT_OFFSETS
        .iter()
        .map(|&(dr, dc)| {
            ImageMatrix::from_fn(rows, cols, |r, c| {
                x.get(wrap(r as i64 + dr, rows), wrap(c as i64 + dc, cols)) - x.get(r, c)
            })
        })
        .collect();
    DirectionalStack::new(maps)
}

fn window_count(n: usize, cell: usize, stride: usize) -> Result<usize> {
    if cell == 0 || stride == 0 {
        return Err(Error::Config("cell and stride must be positive".into()));
    }
    if cell > n {
        return Err(Error::Config(format!(
            "window cell {cell} exceeds input length {n}"
        )));
    }
    Ok((n - cell) / stride + 1)
}

/// Non-overlapping `c x c` block means.
pub fn block_mean_loop(x: &ImageMatrix, cell: usize) -> Result<ImageMatrix> {
    window_mean_loop(x, cell, 0)
}

/// Sliding-window means with cell `c` and overlap `v`.
pub fn window_mean_loop(x: &ImageMatrix, cell: usize, overlap: usize) -> Result<ImageMatrix> {
    if overlap >= cell {
        return Err(Error::Config(format!(
            "overlap {overlap} must be smaller than the cell {cell}"
        )));
    }
    let stride = cell - overlap;
    let out_rows = window_count(x.rows(), cell, stride)?;
    let out_cols = window_count(x.cols(), cell, stride)?;
    let area = (cell * cell) as f64;
    let mut out = ImageMatrix::zeros(out_rows, out_cols);
    for wr in 0..out_rows {
        for wc in 0..out_cols {
            let mut sum = 0.0;
            for r in 0..cell {
                for c in 0..cell {
                    sum += x.get(wr * stride + r, wc * stride + c);
                }
            }
            out.set(wr, wc, sum / area);
        }
    }
    Ok(out)
}

/// Per-entry block normalization: divides each entry by the square root of
/// `epsilon` plus the summed squared energy of every `b x b` window (on the
/// stride grid) covering it.
pub fn block_normalize_loop(
    g: &ImageMatrix,
    block: usize,
    overlap: usize,
    epsilon: f64,
) -> Result<ImageMatrix> {
    if overlap >= block {
        return Err(Error::Config(format!(
            "overlap {overlap} must be smaller than the block {block}"
        )));
    }
    let stride = block - overlap;
    let win_rows = window_count(g.rows(), block, stride)?;
    let win_cols = window_count(g.cols(), block, stride)?;

    // per-window sums of squares
    let mut energy = vec![0.0; win_rows * win_cols];
    for wr in 0..win_rows {
        for wc in 0..win_cols {
            let mut sum = 0.0;
            for r in 0..block {
                for c in 0..block {
                    let v = g.get(wr * stride + r, wc * stride + c);
                    sum += v * v;
                }
            }
            energy[wr * win_cols + wc] = sum;
        }
    }

    let covering = |k: usize, windows: usize| -> (usize, usize) {
        let lo = if k + 1 > block {
            (k + 1 - block).div_ceil(stride)
        } else {
            0
        };
        let hi = (k / stride + 1).min(windows);
        (lo.min(hi), hi)
    };

    let mut out = ImageMatrix::zeros(g.rows(), g.cols());
    for r in 0..g.rows() {
        let (r_lo, r_hi) = covering(r, win_rows);
        for c in 0..g.cols() {
            let (c_lo, c_hi) = covering(c, win_cols);
            let mut denom = epsilon;
            for wr in r_lo..r_hi {
                for wc in c_lo..c_hi {
                    denom += energy[wr * win_cols + wc];
                }
            }
            out.set(r, c, g.get(r, c) / denom.sqrt());
        }
    }
    Ok(out)
}

/// End-to-end loop route of the pooled-gradient descriptor: per-pixel
/// differences, block means, sliding-window means, then (optionally) the
/// per-entry normalization. Mirrors the operator pipeline's contract,
/// including the normalization overlap cap.
pub fn mhog_loop(x: &ImageMatrix, cfg: &MhogConfig, normalize: bool) -> Result<DirectionalStack> {
    cfg.validate()?;
    let gradients = gradient_maps_loop(x)?;
    let mut maps = Vec::with_capacity(8);
    for g in gradients.maps() {
        let pooled = block_mean_loop(g, cfg.c2)?;
        let windowed = window_mean_loop(&pooled, cfg.c1, cfg.v)?;
        let finished = if normalize {
            block_normalize_loop(&windowed, cfg.b, cfg.norm_overlap(), cfg.epsilon)?
        } else {
            windowed
        };
        maps.push(finished);
    }
    DirectionalStack::new(maps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mhog::gradient_stack;
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_u8_image(rows: usize, cols: usize, seed: u64) -> ImageMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        ImageMatrix::from_fn(rows, cols, |_, _| rng.random_range(0..=255u32) as f64)
    }

    #[test]
    fn loop_gradients_agree_with_operator_route() {
        let x = random_u8_image(9, 9, 1);
        let loops = gradient_maps_loop(&x).unwrap();
        let ops = gradient_stack(&x).unwrap();
        for (a, b) in loops.maps().iter().zip(ops.maps()) {
            assert!(a.bit_eq(b));
        }
    }

    #[test]
    fn window_means_on_a_known_row() {
        let x = ImageMatrix::from_vec(2, 4, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0]).unwrap();
        let got = window_mean_loop(&x, 2, 0).unwrap();
        assert_eq!(got.shape(), (1, 2));
        assert_eq!(got.as_slice(), &[3.5, 5.5]);
    }

    #[test]
    fn uncovered_entries_keep_epsilon_denominator() {
        // 5 columns with block 2, stride 2: column 4 is covered by no window
        let g = ImageMatrix::constant(5, 5, 2.0);
        let eps = 1e-4;
        let got = block_normalize_loop(&g, 2, 0, eps).unwrap();
        let covered = 2.0 / (eps + 4.0 * 4.0).sqrt();
        let uncovered = 2.0 / eps.sqrt();
        assert!((got.get(0, 0) - covered).abs() < 1e-12);
        assert!((got.get(4, 4) - uncovered).abs() < 1e-9);
    }
}
