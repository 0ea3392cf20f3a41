//! Timed comparison of the three extraction routes over one dataset.
//!
//! Timing is only reported after a correctness gate: the matrix route must
//! match the dense route exactly and the scanning route within a small
//! tolerance. Paths whose outputs disagree are never timed.

use std::time::Instant;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::pipeline::{extract_all, ExtractOptions, ExtractionPath};

/// Scanning-route agreement tolerance. The code-map descriptors agree
/// exactly; the normalized gradient descriptors differ only by summation
/// order inside the oracles.
pub const GATE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct PathTiming {
    pub path: ExtractionPath,
    pub mean_seconds: f64,
    pub std_seconds: f64,
}

#[derive(Debug, Clone)]
pub struct BenchReport {
    pub descriptor: String,
    pub samples: usize,
    pub repeats: usize,
    pub feature_dim: usize,
    pub timings: Vec<PathTiming>,
    /// Largest |matrix - scanning| feature difference seen by the gate.
    pub gate_max_abs_diff: f64,
    /// Mean scanning-route time over mean matrix-route time.
    pub scanning_over_matrix: f64,
}

impl BenchReport {
    pub fn machine_lines(&self) -> Vec<String> {
        let mut lines = vec![format!(
            "record=bench descriptor={} samples={} repeats={} dim={} gate_max_abs_diff={:e} \
             scanning_over_matrix={:.3}",
            self.descriptor,
            self.samples,
            self.repeats,
            self.feature_dim,
            self.gate_max_abs_diff,
            self.scanning_over_matrix
        )];
        for t in &self.timings {
            lines.push(format!(
                "record=bench_path path={} mean_s={:.6} std_s={:.6}",
                t.path.as_str(),
                t.mean_seconds,
                t.std_seconds
            ));
        }
        lines
    }

    pub fn human_table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "descriptor {} | {} samples | {} repeats | feature dim {}\n",
            self.descriptor, self.samples, self.repeats, self.feature_dim
        ));
        out.push_str(&format!(
            "correctness gate passed (max |matrix - scanning| = {:.3e})\n",
            self.gate_max_abs_diff
        ));
        out.push_str("path       mean (s)     std (s)\n");
        for t in &self.timings {
            out.push_str(&format!(
                "{:<10} {:<12.6} {:<12.6}\n",
                t.path.as_str(),
                t.mean_seconds,
                t.std_seconds
            ));
        }
        out.push_str(&format!(
            "scanning / matrix mean time ratio: {:.3}\n",
            self.scanning_over_matrix
        ));
        out
    }
}

fn time_path(ds: &Dataset, opts: &ExtractOptions, repeats: usize) -> Result<(f64, f64)> {
    let mut times = Vec::with_capacity(repeats);
    for _ in 0..repeats {
        let start = Instant::now();
        let set = extract_all(ds, opts)?;
        times.push(start.elapsed().as_secs_f64());
        std::hint::black_box(set);
    }
    let mean = times.iter().sum::<f64>() / repeats as f64;
    let std = if repeats > 1 {
        (times.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (repeats - 1) as f64).sqrt()
    } else {
        0.0
    };
    Ok((mean, std))
}

/// Runs the gate, then times every route `repeats` times.
pub fn run(ds: &Dataset, base: &ExtractOptions, repeats: usize) -> Result<BenchReport> {
    if repeats == 0 {
        return Err(Error::Input("bench needs at least 1 repeat".into()));
    }
    let with_path = |path| ExtractOptions { path, ..base.clone() };

    let matrix = extract_all(ds, &with_path(ExtractionPath::Matrix))?;
    let dense = extract_all(ds, &with_path(ExtractionPath::Dense))?;
    let scanning = extract_all(ds, &with_path(ExtractionPath::Scanning))?;

    if matrix.values.len() != dense.values.len()
        || matrix.values.iter().zip(&dense.values).any(|(a, b)| a != b)
    {
        return Err(Error::Numeric(
            "correctness gate failed: matrix and dense extraction disagree".into(),
        ));
    }
    let gate_max_abs_diff = matrix
        .values
        .iter()
        .zip(&scanning.values)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);
    if matrix.values.len() != scanning.values.len() || gate_max_abs_diff > GATE_TOLERANCE {
        return Err(Error::Numeric(format!(
            "correctness gate failed: matrix and scanning extraction differ by {gate_max_abs_diff:e}"
        )));
    }

    let mut timings = Vec::with_capacity(3);
    for path in [
        ExtractionPath::Matrix,
        ExtractionPath::Dense,
        ExtractionPath::Scanning,
    ] {
        let (mean_seconds, std_seconds) = time_path(ds, &with_path(path), repeats)?;
        timings.push(PathTiming {
            path,
            mean_seconds,
            std_seconds,
        });
    }
    let scanning_over_matrix = timings[2].mean_seconds / timings[0].mean_seconds.max(1e-12);

    Ok(BenchReport {
        descriptor: base.descriptor.as_str().to_string(),
        samples: ds.len(),
        repeats,
        feature_dim: matrix.dim,
        timings,
        gate_max_abs_diff,
        scanning_over_matrix,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::Descriptor;
    use crate::synth;

    #[test]
    fn bench_times_all_paths_after_the_gate() {
        let ds = synth::gen_synthetic(2, (24, 24), 1).unwrap();
        let report = run(&ds, &ExtractOptions::new(Descriptor::MlbpHog), 2).unwrap();
        assert_eq!(report.timings.len(), 3);
        assert!(report.gate_max_abs_diff <= GATE_TOLERANCE);
        for t in &report.timings {
            assert!(t.mean_seconds >= 0.0 && t.std_seconds >= 0.0);
        }
        assert!(report
            .machine_lines()
            .iter()
            .any(|l| l.contains("record=bench_path path=scanning")));
    }

    #[test]
    fn code_map_descriptor_gates_exactly() {
        let ds = synth::gen_synthetic(2, (16, 16), 2).unwrap();
        let report = run(&ds, &ExtractOptions::new(Descriptor::Mlbp), 1).unwrap();
        assert_eq!(report.gate_max_abs_diff, 0.0);
        assert_eq!(report.feature_dim, 16 * 16);
    }

    #[test]
    fn zero_repeats_is_rejected() {
        let ds = synth::gen_synthetic(1, (16, 16), 3).unwrap();
        assert!(run(&ds, &ExtractOptions::new(Descriptor::Mlbp), 0).is_err());
    }
}
