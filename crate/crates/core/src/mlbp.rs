//! Binary-pattern codes computed globally with shift operators (M-LBP),
//! plus the classical per-pixel scanning implementation used to validate
//! them.
//!
//! Both use the same direction order. Direction `i` (1-based) looks at the
//! neighbor offset `NEIGHBOR_OFFSETS[i - 1]` and contributes bit weight
//! `2^(i-1)` under the default convention. A neighbor difference of exactly
//! zero sets the bit.

use crate::error::{Error, Result};
use crate::matrix::ImageMatrix;
use crate::projection::{Axis, OperatorPath, ShiftOperator};

/// Neighbor offsets `(row, col)` for directions 1..=8.
pub const NEIGHBOR_OFFSETS: [(i64, i64); 8] = [
    (-1, 1),
    (-1, 0),
    (-1, -1),
    (0, -1),
    (1, -1),
    (1, 0),
    (1, 1),
    (0, 1),
];

/// Configuration of the 8-neighbor binary code: the bit weight assigned to
/// each direction. Weights must be the eight distinct powers of two
/// `2^0..2^7`; the default maps direction `i` to `2^(i-1)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MlbpConfig {
    weights: [u32; 8],
}

impl Default for MlbpConfig {
    fn default() -> Self {
        MlbpConfig {
            weights: [1, 2, 4, 8, 16, 32, 64, 128],
        }
    }
}

impl MlbpConfig {
    pub const NEIGHBOR_COUNT: usize = 8;

    pub fn new(weights: [u32; 8]) -> Result<Self> {
        let mut seen = [false; 8];
        for w in weights {
            if !w.is_power_of_two() || w > 128 {
                return Err(Error::Config(format!(
                    "bit weight {w} is not a power of two in 1..=128"
                )));
            }
            let exp = w.trailing_zeros() as usize;
            if seen[exp] {
                return Err(Error::Config(format!("duplicate bit weight {w}")));
            }
            seen[exp] = true;
        }
        Ok(MlbpConfig { weights })
    }

    pub fn weights(&self) -> &[u32; 8] {
        &self.weights
    }

    /// log2 of each direction's weight, the serialized form.
    pub fn weight_exponents(&self) -> [u8; 8] {
        let mut out = [0u8; 8];
        for (o, w) in out.iter_mut().zip(self.weights) {
            *o = w.trailing_zeros() as u8;
        }
        out
    }

    pub fn from_exponents(exponents: [u8; 8]) -> Result<Self> {
        let mut weights = [0u32; 8];
        for (w, e) in weights.iter_mut().zip(exponents) {
            if e > 7 {
                return Err(Error::Config(format!("bit weight exponent {e} out of range")));
            }
            *w = 1 << e;
        }
        MlbpConfig::new(weights)
    }
}

/// Shifts the image so that position `(r, c)` of the result holds
/// `x(r + dr, c + dc)` with circular wraparound, composing a vertical and a
/// horizontal shift operator.
pub(crate) fn shifted_image(
    x: &ImageMatrix,
    dr: i64,
    dc: i64,
    path: OperatorPath,
) -> Result<ImageMatrix> {
    let mut shifted = if dr != 0 {
        ShiftOperator::new(x.rows(), dr, Axis::Vertical)?.apply_via(x, path)?
    } else {
        x.clone()
    };
    if dc != 0 {
        shifted = ShiftOperator::new(x.cols(), dc, Axis::Horizontal)?.apply_via(&shifted, path)?;
    }
    Ok(shifted)
}

fn check_min_size(x: &ImageMatrix, min: usize, what: &str) -> Result<()> {
    if x.rows() < min || x.cols() < min {
        return Err(Error::Input(format!(
            "{what} needs at least a {min}x{min} image, got {}x{}",
            x.rows(),
            x.cols()
        )));
    }
    Ok(())
}

/// The globally computed binary-code image: the weighted sum of
/// step-thresholded shifted-image differences over all eight directions.
/// Every output entry is an integer in `[0, 255]`.
pub fn mlbp(x: &ImageMatrix, cfg: &MlbpConfig) -> Result<ImageMatrix> {
    mlbp_via(x, cfg, OperatorPath::Fast)
}

pub(crate) fn mlbp_via(x: &ImageMatrix, cfg: &MlbpConfig, path: OperatorPath) -> Result<ImageMatrix> {
    check_min_size(x, 3, "mlbp")?;
    let mut out = ImageMatrix::zeros(x.rows(), x.cols());
    for (i, &(dr, dc)) in NEIGHBOR_OFFSETS.iter().enumerate() {
        let bits = shifted_image(x, dr, dc, path)?.sub(x)?.step();
        let weight = cfg.weights[i] as f64;
        for (o, b) in out.as_mut_slice().iter_mut().zip(bits.as_slice()) {
            *o += weight * b;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LbpPadding {
    /// Neighbors wrap around the image border.
    Circular,
    /// Border pixels carry no code; they are marked invalid and set to the
    /// sentinel value -1.
    None,
}

/// Scanning LBP output. `valid` is an indicator mask: 1 where `codes` holds
/// a defined code, 0 on excluded border pixels.
#[derive(Debug, Clone)]
pub struct ScannedLbp {
    pub codes: ImageMatrix,
    pub valid: ImageMatrix,
}

/// Classical windowed LBP: one pass over the pixels, comparing each center
/// against its eight neighbors.
pub fn scanning_lbp(x: &ImageMatrix, padding: LbpPadding, cfg: &MlbpConfig) -> Result<ScannedLbp> {
    check_min_size(x, 3, "scanning_lbp")?;
    let (rows, cols) = x.shape();
    let mut codes = ImageMatrix::zeros(rows, cols);
    let mut valid = ImageMatrix::constant(rows, cols, 1.0);
    for r in 0..rows {
        for c in 0..cols {
            if padding == LbpPadding::None
                && (r == 0 || c == 0 || r == rows - 1 || c == cols - 1)
            {
                codes.set(r, c, -1.0);
                valid.set(r, c, 0.0);
                continue;
            }
            let center = x.get(r, c);
            let mut code = 0.0;
            for (i, &(dr, dc)) in NEIGHBOR_OFFSETS.iter().enumerate() {
                let rr = (r as i64 + dr).rem_euclid(rows as i64) as usize;
                let cc = (c as i64 + dc).rem_euclid(cols as i64) as usize;
                if x.get(rr, cc) - center >= 0.0 {
                    code += cfg.weights[i] as f64;
                }
            }
            codes.set(r, c, code);
        }
    }
    Ok(ScannedLbp { codes, valid })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_u8_image(rows: usize, cols: usize, seed: u64) -> ImageMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        ImageMatrix::from_fn(rows, cols, |_, _| rng.random_range(0..=255u32) as f64)
    }

    #[test]
    fn constant_image_codes_are_all_255() {
        let x = ImageMatrix::constant(6, 7, 42.0);
        let cfg = MlbpConfig::default();
        let out = mlbp(&x, &cfg).unwrap();
        assert!(out.bit_eq(&ImageMatrix::constant(6, 7, 255.0)));
        let scanned = scanning_lbp(&x, LbpPadding::Circular, &cfg).unwrap();
        assert!(scanned.codes.bit_eq(&out));
    }

    #[test]
    fn codes_are_integers_in_byte_range() {
        let x = random_u8_image(20, 20, 1);
        let out = mlbp(&x, &MlbpConfig::default()).unwrap();
        for &v in out.as_slice() {
            assert!(v >= 0.0 && v <= 255.0 && v.fract() == 0.0);
        }
    }

    #[test]
    fn single_direction_maps_decompose_the_code() {
        let x = random_u8_image(10, 10, 2);
        let cfg = MlbpConfig::default();
        let full = mlbp(&x, &cfg).unwrap();
        let mut sum = ImageMatrix::zeros(10, 10);
        for (i, &(dr, dc)) in NEIGHBOR_OFFSETS.iter().enumerate() {
            let single = shifted_image(&x, dr, dc, OperatorPath::Fast)
                .unwrap()
                .sub(&x)
                .unwrap()
                .step()
                .scale(cfg.weights()[i] as f64);
            for &v in single.as_slice() {
                assert!(v == 0.0 || v == cfg.weights()[i] as f64);
            }
            sum = sum.add(&single).unwrap();
        }
        assert!(sum.bit_eq(&full));
    }

    #[test]
    fn rejects_images_smaller_than_3x3() {
        let x = ImageMatrix::constant(2, 3, 1.0);
        assert!(mlbp(&x, &MlbpConfig::default()).is_err());
        assert!(scanning_lbp(&x, LbpPadding::Circular, &MlbpConfig::default()).is_err());
    }

    #[test]
    fn matches_scanning_oracle_everywhere_with_circular_padding() {
        let cfg = MlbpConfig::default();
        for seed in 0..20 {
            let x = random_u8_image(16, 13, seed);
            let fast = mlbp(&x, &cfg).unwrap();
            let scanned = scanning_lbp(&x, LbpPadding::Circular, &cfg).unwrap();
            assert!(fast.bit_eq(&scanned.codes), "seed {seed}");
        }
    }

    #[test]
    fn matches_scanning_oracle_on_interior_without_padding() {
        let cfg = MlbpConfig::default();
        for seed in 0..10 {
            let x = random_u8_image(12, 12, 100 + seed);
            let fast = mlbp(&x, &cfg).unwrap();
            let scanned = scanning_lbp(&x, LbpPadding::None, &cfg).unwrap();
            for r in 0..12 {
                for c in 0..12 {
                    let interior = r >= 1 && c >= 1 && r <= 10 && c <= 10;
                    assert_eq!(scanned.valid.get(r, c), if interior { 1.0 } else { 0.0 });
                    if interior {
                        assert_eq!(fast.get(r, c), scanned.codes.get(r, c));
                    } else {
                        assert_eq!(scanned.codes.get(r, c), -1.0);
                    }
                }
            }
        }
    }

    #[test]
    fn bright_center_pixel_has_code_zero() {
        let mut x = ImageMatrix::zeros(3, 3);
        x.set(1, 1, 200.0);
        let scanned = scanning_lbp(&x, LbpPadding::None, &MlbpConfig::default()).unwrap();
        assert_eq!(scanned.codes.get(1, 1), 0.0);
    }

    #[test]
    fn adding_a_constant_leaves_codes_unchanged() {
        let cfg = MlbpConfig::default();
        let x = random_u8_image(14, 14, 3);
        let base = mlbp(&x, &cfg).unwrap();
        for k in [1.0, 57.0, 200.0] {
            assert!(mlbp(&x.add_scalar(k), &cfg).unwrap().bit_eq(&base));
        }
    }

    #[test]
    fn direction_offsets_match_the_shift_composition() {
        let x = random_u8_image(9, 9, 4);
        for &(dr, dc) in &NEIGHBOR_OFFSETS {
            let s = shifted_image(&x, dr, dc, OperatorPath::Fast).unwrap();
            for r in 2..7 {
                for c in 2..7 {
                    let want = x.get((r as i64 + dr) as usize, (c as i64 + dc) as usize);
                    assert_eq!(s.get(r, c), want);
                }
            }
        }
    }

    #[test]
    fn fast_and_dense_paths_agree_bitwise() {
        let cfg = MlbpConfig::default();
        for seed in 0..5 {
            let x = random_u8_image(11, 17, 200 + seed);
            let fast = mlbp_via(&x, &cfg, OperatorPath::Fast).unwrap();
            let dense = mlbp_via(&x, &cfg, OperatorPath::Dense).unwrap();
            assert!(fast.bit_eq(&dense));
        }
    }

    #[test]
    fn weight_convention_round_trips_and_validates() {
        let cfg = MlbpConfig::new([128, 64, 32, 16, 8, 4, 2, 1]).unwrap();
        let back = MlbpConfig::from_exponents(cfg.weight_exponents()).unwrap();
        assert_eq!(cfg, back);
        assert!(MlbpConfig::new([1, 1, 4, 8, 16, 32, 64, 128]).is_err());
        assert!(MlbpConfig::new([3, 2, 4, 8, 16, 32, 64, 128]).is_err());
    }
}
