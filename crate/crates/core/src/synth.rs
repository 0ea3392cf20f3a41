//! Deterministic synthetic two-class texture generator, a desk-scale
//! stand-in for a real two-class image corpus.
//!
//! Class `+1` images are sinusoidal gratings, oriented horizontally or
//! vertically, with random phase and frequency. Class `-1` images alternate
//! between raised-cosine blob clusters and checkerboards. Both classes
//! receive the same additive Gaussian noise (sub-quantization level by
//! default), and pixels are rounded to the 8-bit grid so that writing and
//! re-reading PGM files is lossless.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::dataset::{Dataset, Sample};
use crate::error::{Error, Result};
use crate::matrix::ImageMatrix;

const NOISE_SIGMA: f64 = 0.1;

/// Generates `n_per_class` images per class at the given resolution.
/// The same seed always produces the identical dataset.
pub fn gen_synthetic(n_per_class: usize, resolution: (usize, usize), seed: u64) -> Result<Dataset> {
    gen_synthetic_with_noise(n_per_class, resolution, seed, NOISE_SIGMA)
}

pub(crate) fn gen_synthetic_with_noise(
    n_per_class: usize,
    resolution: (usize, usize),
    seed: u64,
    noise_sigma: f64,
) -> Result<Dataset> {
    if n_per_class == 0 {
        return Err(Error::Input("n_per_class must be at least 1".into()));
    }
    let (rows, cols) = resolution;
    if rows < 5 || cols < 5 {
        return Err(Error::Input(format!(
            "resolution {rows}x{cols} is too small for the descriptors (minimum 5x5)"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, 1.0).expect("unit normal");
    let mut samples = Vec::with_capacity(2 * n_per_class);
    for k in 0..n_per_class {
        let pos = grating(&mut rng, rows, cols, noise_sigma, &noise);
        samples.push(Sample {
            image: pos,
            label: 1,
            id: format!("malignant_{k:04}"),
        });
        let neg = if k % 2 == 0 {
            blobs(&mut rng, rows, cols, noise_sigma, &noise)
        } else {
            checkerboard(&mut rng, rows, cols, noise_sigma, &noise)
        };
        samples.push(Sample {
            image: neg,
            label: -1,
            id: format!("benign_{k:04}"),
        });
    }
    Dataset::new(samples, resolution)
}

fn quantize(v: f64) -> f64 {
    v.round().clamp(0.0, 255.0)
}

fn grating(
    rng: &mut ChaCha8Rng,
    rows: usize,
    cols: usize,
    sigma: f64,
    noise: &Normal<f64>,
) -> ImageMatrix {
    let theta: f64 = if rng.random_range(0..2) == 0 {
        0.0
    } else {
        std::f64::consts::FRAC_PI_2
    };
    let cycles: f64 = rng.random_range(4.0..5.0);
    let phase: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    let amplitude: f64 = rng.random_range(50.0..70.0);
    let scale = std::f64::consts::TAU * cycles / rows.max(cols) as f64;
    let (sin_t, cos_t) = theta.sin_cos();
    ImageMatrix::from_fn(rows, cols, |r, c| {
        let u = c as f64 * cos_t + r as f64 * sin_t;
        let v = 128.0 + amplitude * (scale * u + phase).sin() + sigma * noise.sample(rng);
        quantize(v)
    })
}

fn blobs(
    rng: &mut ChaCha8Rng,
    rows: usize,
    cols: usize,
    sigma: f64,
    noise: &Normal<f64>,
) -> ImageMatrix {
    let count = rng.random_range(3..=6);
    let scale = rows.min(cols) as f64;
    let mut centers = Vec::with_capacity(count);
    for _ in 0..count {
        let r0: f64 = rng.random_range(0.0..rows as f64);
        let c0: f64 = rng.random_range(0.0..cols as f64);
        let radius: f64 = rng.random_range(0.15 * scale..0.25 * scale);
        let sign = if rng.random_range(0..2) == 0 { 1.0 } else { -1.0 };
        let amplitude: f64 = sign * rng.random_range(50.0..80.0);
        centers.push((r0, c0, radius, amplitude));
    }
    // compactly supported raised-cosine bumps: exactly zero beyond the
    // radius, so the background stays flat after quantization
    ImageMatrix::from_fn(rows, cols, |r, c| {
        let mut v = 128.0;
        for &(r0, c0, radius, amplitude) in &centers {
            let d = ((r as f64 - r0).powi(2) + (c as f64 - c0).powi(2)).sqrt();
            if d < radius {
                let t = (std::f64::consts::FRAC_PI_2 * d / radius).cos();
                v += amplitude * t * t;
            }
        }
        quantize(v + sigma * noise.sample(rng))
    })
}

fn checkerboard(
    rng: &mut ChaCha8Rng,
    rows: usize,
    cols: usize,
    sigma: f64,
    noise: &Normal<f64>,
) -> ImageMatrix {
    let scale = rows.min(cols);
    let cells = [(scale / 4).max(2), (scale / 3).max(2)];
    let cell = cells[rng.random_range(0..cells.len())];
    let amplitude: f64 = rng.random_range(35.0..55.0);
    let dr = rng.random_range(0..cell);
    let dc = rng.random_range(0..cell);
    ImageMatrix::from_fn(rows, cols, |r, c| {
        let parity = ((r + dr) / cell + (c + dc) / cell) % 2;
        let base = if parity == 0 { 128.0 - amplitude } else { 128.0 + amplitude };
        quantize(base + sigma * noise.sample(rng))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_reproduces_the_dataset() {
        let a = gen_synthetic(4, (24, 24), 9).unwrap();
        let b = gen_synthetic(4, (24, 24), 9).unwrap();
        assert_eq!(a.len(), b.len());
        for (sa, sb) in a.samples.iter().zip(&b.samples) {
            assert_eq!(sa.id, sb.id);
            assert_eq!(sa.label, sb.label);
            assert!(sa.image.bit_eq(&sb.image));
        }
    }

    #[test]
    fn different_seeds_differ() {
        let a = gen_synthetic(2, (24, 24), 1).unwrap();
        let b = gen_synthetic(2, (24, 24), 2).unwrap();
        assert!(!a.samples[0].image.bit_eq(&b.samples[0].image));
    }

    #[test]
    fn pixel_values_live_on_the_8bit_grid() {
        let ds = gen_synthetic(3, (16, 16), 5).unwrap();
        for s in &ds.samples {
            for &v in s.image.as_slice() {
                assert!(v >= 0.0 && v <= 255.0 && v.fract() == 0.0);
            }
        }
    }

    #[test]
    fn classes_alternate_and_balance() {
        let ds = gen_synthetic(5, (16, 16), 6).unwrap();
        assert_eq!(ds.len(), 10);
        let pos = ds.samples.iter().filter(|s| s.label == 1).count();
        assert_eq!(pos, 5);
        assert_eq!(ds.samples[0].label, 1);
        assert_eq!(ds.samples[1].label, -1);
    }

    #[test]
    fn rejects_empty_or_tiny_requests() {
        assert!(gen_synthetic(0, (16, 16), 0).is_err());
        assert!(gen_synthetic(1, (4, 16), 0).is_err());
    }

    #[test]
    fn noiseless_class_means_differ() {
        let ds = gen_synthetic_with_noise(1, (32, 32), 7, 0.0).unwrap();
        let pos = &ds.samples[0].image;
        let neg = &ds.samples[1].image;
        assert!(pos.max_abs_diff(neg) > 0.0);
    }
}
