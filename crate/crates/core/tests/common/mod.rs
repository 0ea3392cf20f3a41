use mpdesc::matrix::ImageMatrix;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random 8-bit-valued image (integer intensities on the f64 grid).
pub fn seeded_u8_image(rows: usize, cols: usize, seed: u64) -> ImageMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ImageMatrix::from_fn(rows, cols, |_, _| rng.random_range(0..=255u32) as f64)
}

/// Random continuous-valued image.
#[allow(dead_code)]
pub fn seeded_real_image(rows: usize, cols: usize, seed: u64) -> ImageMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ImageMatrix::from_fn(rows, cols, |_, _| rng.random_range(-100.0..100.0))
}

pub fn bitwise_eq(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
}

/// Largest entry difference, measured absolutely for order-one values and
/// relatively for larger ones (uncovered normalization entries sit at the
/// epsilon floor and explode to ~1e8, where one ulp already exceeds 1e-9).
#[allow(dead_code)]
pub fn scaled_diff(a: &mpdesc::matrix::ImageMatrix, b: &mpdesc::matrix::ImageMatrix) -> f64 {
    if a.shape() != b.shape() {
        return f64::INFINITY;
    }
    a.as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(x, y)| (x - y).abs() / y.abs().max(1.0))
        .fold(0.0, f64::max)
}
