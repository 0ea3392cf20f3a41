//! Acceptance suite: one test per release criterion, each printing a
//! `ACCEPTANCE PASS [n]` line on success. Run with
//! `cargo test -p mpdesc --test acceptance -- --nocapture` to see the lines.

mod common;

use std::process::Command;
use std::time::Instant;

use common::{bitwise_eq, seeded_u8_image};
use mpdesc::classifier::{cross_validate, Gamma};
use mpdesc::matrix::ImageMatrix;
use mpdesc::mhog::{
    block_normalize, gradient_stack, mhog, overlap_pooled, pooled_gradients, DirectionalStack,
    MhogConfig,
};
use mpdesc::mlbp::{mlbp, scanning_lbp, LbpPadding, MlbpConfig};
use mpdesc::pipeline::{extract_all, mlbp_hog, Descriptor, ExtractOptions};
use mpdesc::projection::{Axis, PoolingOperator, ShiftOperator, Side};
use mpdesc::reference;
use mpdesc::synth::gen_synthetic;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn mpdesc_bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mpdesc"))
}

/// The parameter grid used throughout: cells in {2,4,6}, overlap in
/// {0, cell/2}, blocks in {2,4,6}.
const CELLS: [usize; 3] = [2, 4, 6];

#[test]
fn criterion_01_code_map_oracle_equivalence() {
    let start = Instant::now();
    let cfg = MlbpConfig::default();
    for seed in 0..100u64 {
        let x = seeded_u8_image(56, 56, 1000 + seed);
        let fast = mlbp(&x, &cfg).unwrap();
        let circular = scanning_lbp(&x, LbpPadding::Circular, &cfg).unwrap();
        // exact integer equality at every pixel
        assert!(fast.bit_eq(&circular.codes), "seed {seed}: circular mismatch");
        let windowed = scanning_lbp(&x, LbpPadding::None, &cfg).unwrap();
        for r in 1..55 {
            for c in 1..55 {
                assert_eq!(
                    fast.get(r, c),
                    windowed.codes.get(r, c),
                    "seed {seed}: interior mismatch at ({r},{c})"
                );
            }
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 10.0, "criterion 1 took {elapsed:.1}s, budget is 10s");
    println!("ACCEPTANCE PASS [1] code-map oracle equivalence on 100 images in {elapsed:.2}s");
}

#[test]
fn criterion_02_operator_fast_path_bitwise_equals_dense() {
    // shifts at the distances the descriptors use
    for seed in 0..10u64 {
        let x = seeded_u8_image(56, 56, 2000 + seed);
        for l in [-2i64, -1, 0, 1, 2] {
            for axis in [Axis::Horizontal, Axis::Vertical] {
                let op = ShiftOperator::new(56, l, axis).unwrap();
                assert!(
                    op.apply(&x).unwrap().bit_eq(&op.apply_dense(&x).unwrap()),
                    "shift l={l} {axis:?} differs"
                );
            }
        }
    }
    // pooling for every cell/overlap/block combination of the grid, both
    // sides, both weight conventions, plus the transposed applications
    for n in [56usize, 27] {
        for seed in 0..5u64 {
            let x = seeded_u8_image(n, n, 3000 + seed);
            for cell in CELLS {
                for v in [0, cell / 2] {
                    for normalized in [true, false] {
                        for side in [Side::Left, Side::Right] {
                            let op = PoolingOperator::new(n, cell, v, normalized, side).unwrap();
                            assert!(
                                op.apply(&x).unwrap().bit_eq(&op.apply_dense(&x).unwrap()),
                                "pooling n={n} c={cell} v={v} {side:?} differs"
                            );
                            let t_in = match side {
                                Side::Left => seeded_u8_image(op.windows(), n, 4000 + seed),
                                Side::Right => seeded_u8_image(n, op.windows(), 4000 + seed),
                            };
                            assert!(
                                op.apply_transposed(&t_in)
                                    .unwrap()
                                    .bit_eq(&op.apply_transposed_dense(&t_in).unwrap()),
                                "transposed pooling n={n} c={cell} v={v} {side:?} differs"
                            );
                        }
                    }
                }
            }
        }
    }
    println!("ACCEPTANCE PASS [2] fast operator paths bitwise-equal dense products across the grid");
}

fn grid_configs() -> Vec<MhogConfig> {
    let mut out = Vec::new();
    for c2 in CELLS {
        for c1 in CELLS {
            for v in [0, c1 / 2] {
                for b in CELLS {
                    let cfg = MhogConfig { c1, c2, v, b, epsilon: 1e-12 };
                    if cfg.output_len(56).is_ok() {
                        out.push(cfg);
                    }
                }
            }
        }
    }
    out
}

#[test]
fn criterion_03_stage_loop_oracles_across_the_grid() {
    let configs = grid_configs();
    assert!(configs.len() >= 20, "only {} runnable grid configs", configs.len());
    for (k, cfg) in configs.iter().enumerate() {
        for seed in 0..20u64 {
            let x = seeded_u8_image(56, 56, 5000 + 100 * k as u64 + seed);
            let grads = gradient_stack(&x).unwrap();
            let pooled = pooled_gradients(&grads, cfg).unwrap();
            for (m, g) in pooled.maps().iter().zip(grads.maps()) {
                let want = reference::block_mean_loop(g, cfg.c2).unwrap();
                assert!(m.max_abs_diff(&want) < 1e-12, "{cfg:?}: pooled gradients");
            }
            let over = overlap_pooled(&pooled, cfg).unwrap();
            for (m, g) in over.maps().iter().zip(pooled.maps()) {
                let want = reference::window_mean_loop(g, cfg.c1, cfg.v).unwrap();
                assert!(m.max_abs_diff(&want) < 1e-12, "{cfg:?}: overlap pooling");
            }
            let z = block_normalize(&over, cfg).unwrap();
            for (m, g) in z.maps().iter().zip(over.maps()) {
                let want =
                    reference::block_normalize_loop(g, cfg.b, cfg.norm_overlap(), cfg.epsilon)
                        .unwrap();
                assert!(common::scaled_diff(m, &want) < 1e-9, "{cfg:?}: normalization");
            }
        }
    }
    println!(
        "ACCEPTANCE PASS [3] stage oracles match within tolerance on {} configs x 20 images",
        configs.len()
    );
}

#[test]
fn criterion_04_normalization_properties() {
    // scale invariance with a zero guard on strictly nonzero inputs
    let mut rng = ChaCha8Rng::seed_from_u64(6000);
    for (b, v, side) in [(2usize, 0usize, 12usize), (2, 1, 13), (4, 2, 12), (6, 3, 12)] {
        let g = ImageMatrix::from_fn(side, side, |_, _| {
            let v: f64 = rng.random_range(0.2..20.0);
            if rng.random_range(0..2) == 0 { v } else { -v }
        });
        let stack = DirectionalStack::new(vec![g; 8]).unwrap();
        let cfg = MhogConfig { b, v, epsilon: 0.0, ..MhogConfig::default() };
        let base = block_normalize(&stack, &cfg).unwrap();
        for alpha in [0.5, 3.0, 100.0] {
            let scaled =
                DirectionalStack::new(stack.maps().iter().map(|m| m.scale(alpha)).collect())
                    .unwrap();
            let z = block_normalize(&scaled, &cfg).unwrap();
            for (a, b_) in z.maps().iter().zip(base.maps()) {
                assert!(
                    a.max_abs_diff(b_) < 1e-9,
                    "b={b} v={v}: scale invariance broke at alpha={alpha}"
                );
            }
        }
    }
    // all-zero input normalizes to zero without error
    let zeros = DirectionalStack::new(vec![ImageMatrix::zeros(8, 8); 8]).unwrap();
    let z = block_normalize(&zeros, &MhogConfig::default()).unwrap();
    assert!(z.maps().iter().all(|m| m.as_slice().iter().all(|&v| v == 0.0)));
    // zero-overlap entries live in [-1, 1]
    let x = seeded_u8_image(24, 24, 6001);
    let cfg = MhogConfig { c1: 2, c2: 2, v: 0, b: 2, epsilon: 0.0 };
    let stack = mhog(&x, &cfg).unwrap();
    for m in stack.maps() {
        assert!(m.as_slice().iter().all(|&v| v.abs() <= 1.0 + 1e-12));
    }
    println!("ACCEPTANCE PASS [4] normalization scale invariance, zero handling and unit bound");
}

#[test]
fn criterion_05_composition_identity() {
    let mlbp_cfg = MlbpConfig::default();
    let mhog_cfg = MhogConfig::default();
    for seed in 0..20u64 {
        let x = seeded_u8_image(56, 56, 7000 + seed);
        let combined = mlbp_hog(&x, &mlbp_cfg, &mhog_cfg).unwrap();
        let manual = mhog(&mlbp(&x, &mlbp_cfg).unwrap(), &mhog_cfg).unwrap().flatten();
        assert!(
            bitwise_eq(&combined.values, &manual),
            "seed {seed}: composition differs from the manual two-step route"
        );
    }
    println!("ACCEPTANCE PASS [5] combined descriptor bitwise-equals the two-step composition");
}

#[test]
fn criterion_06_illumination_offset_invariance() {
    let mlbp_cfg = MlbpConfig::default();
    let mhog_cfg = MhogConfig::default();
    for seed in 0..5u64 {
        let x = seeded_u8_image(56, 56, 8000 + seed);
        let base_codes = mlbp(&x, &mlbp_cfg).unwrap();
        let base_features = mlbp_hog(&x, &mlbp_cfg, &mhog_cfg).unwrap();
        for k in [1.0, 57.0, 200.0] {
            let shifted = x.add_scalar(k);
            assert!(
                mlbp(&shifted, &mlbp_cfg).unwrap().bit_eq(&base_codes),
                "codes changed under offset {k}"
            );
            let features = mlbp_hog(&shifted, &mlbp_cfg, &mhog_cfg).unwrap();
            assert!(
                bitwise_eq(&features.values, &base_features.values),
                "features changed under offset {k}"
            );
        }
    }
    println!("ACCEPTANCE PASS [6] adding constant offsets leaves codes and features unchanged");
}

#[test]
fn criterion_07_shape_law_across_the_grid() {
    let x = seeded_u8_image(56, 56, 9000);
    let configs = grid_configs();
    for cfg in &configs {
        let side = ((56 / cfg.c2) - cfg.c1) / (cfg.c1 - cfg.v) + 1;
        assert_eq!(cfg.output_len(56).unwrap(), side, "{cfg:?}: formula drift");
        let stack = mhog(&x, cfg).unwrap();
        assert_eq!(stack.shape(), (side, side), "{cfg:?}: actual shape");
        assert_eq!(stack.flatten().len(), 8 * side * side, "{cfg:?}: feature length");
    }
    // the documented default: 56x56 -> 13x13 per direction, 1352 values
    let fv = mlbp_hog(&x, &MlbpConfig::default(), &MhogConfig::default()).unwrap();
    assert_eq!(fv.values.len(), 1352);
    println!(
        "ACCEPTANCE PASS [7] shape law holds on all {} runnable grid configs",
        configs.len()
    );
}

#[test]
fn criterion_08_classifier_reaches_90_percent_and_chance_on_permuted_labels() {
    let start = Instant::now();
    let ds = gen_synthetic(100, (56, 56), 3).unwrap();
    let set = extract_all(&ds, &ExtractOptions::new(Descriptor::MlbpHog)).unwrap();
    let outcome =
        cross_validate(&set.values, set.dim, &set.labels, 5, 1e-4, Gamma::Auto, 0).unwrap();
    assert!(
        outcome.accuracy >= 0.90,
        "cross-validated accuracy {:.3} below 0.90",
        outcome.accuracy
    );

    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut permuted = set.labels.clone();
    for i in (1..permuted.len()).rev() {
        let j = rng.random_range(0..=i);
        permuted.swap(i, j);
    }
    let chance =
        cross_validate(&set.values, set.dim, &permuted, 5, 1e-4, Gamma::Auto, 0).unwrap();
    assert!(
        (0.35..=0.65).contains(&chance.accuracy),
        "permuted-label accuracy {:.3} outside [0.35, 0.65]",
        chance.accuracy
    );

    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 120.0, "criterion 8 took {elapsed:.1}s, budget is 120s");
    println!(
        "ACCEPTANCE PASS [8] accuracy {:.3} (permuted {:.3}) in {elapsed:.1}s",
        outcome.accuracy, chance.accuracy
    );
}

#[test]
fn criterion_09_benchmark_harness_reports_all_paths_over_10_runs() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let status = mpdesc_bin()
        .args(["gen", "--n", "2", "--seed", "5", "--out"])
        .arg(&data)
        .status()
        .unwrap();
    assert!(status.success());

    let output = mpdesc_bin()
        .args(["bench", "--descriptor", "mlbp-hog", "--repeat", "10", "--input"])
        .arg(&data)
        .output()
        .unwrap();
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("correctness gate passed"), "{stdout}");
    assert!(stdout.contains("repeats=10"), "{stdout}");
    for path in ["matrix", "dense", "scanning"] {
        let line = stdout
            .lines()
            .find(|l| l.starts_with(&format!("record=bench_path path={path}")))
            .unwrap_or_else(|| panic!("missing timing record for {path}: {stdout}"));
        let mean: f64 = line
            .split_whitespace()
            .find_map(|kv| kv.strip_prefix("mean_s="))
            .unwrap()
            .parse()
            .unwrap();
        let std: f64 = line
            .split_whitespace()
            .find_map(|kv| kv.strip_prefix("std_s="))
            .unwrap()
            .parse()
            .unwrap();
        assert!(mean >= 0.0 && std >= 0.0);
    }
    assert!(stdout.contains("scanning_over_matrix="), "{stdout}");
    println!("ACCEPTANCE PASS [9] benchmark reports mean/std for all three paths behind the gate");
}

#[test]
fn criterion_10_dmp_equals_mhog_with_zero_overlap_and_no_normalization() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let status = mpdesc_bin()
        .args(["gen", "--n", "3", "--seed", "11", "--out"])
        .arg(&data)
        .status()
        .unwrap();
    assert!(status.success());

    let dmp_file = dir.path().join("dmp.mpfv");
    let mhog_file = dir.path().join("mhog.mpfv");
    let status = mpdesc_bin()
        .args(["extract", "--descriptor", "dmp", "--input"])
        .arg(&data)
        .arg("--out")
        .arg(&dmp_file)
        .status()
        .unwrap();
    assert!(status.success());
    let status = mpdesc_bin()
        .args(["extract", "--descriptor", "mhog", "--v", "0", "--no-normalize", "--input"])
        .arg(&data)
        .arg("--out")
        .arg(&mhog_file)
        .status()
        .unwrap();
    assert!(status.success());

    let a = std::fs::read(&dmp_file).unwrap();
    let b = std::fs::read(&mhog_file).unwrap();
    assert_eq!(a.len(), b.len());
    for (i, (x, y)) in a.iter().zip(&b).enumerate() {
        if i == mpdesc::feature_file::DESCRIPTOR_TAG_OFFSET {
            assert_eq!(*x, Descriptor::Dmp.tag());
            assert_eq!(*y, Descriptor::Mhog.tag());
        } else {
            assert_eq!(x, y, "files differ at byte {i}");
        }
    }
    let dmp_set = mpdesc::feature_file::read(&dmp_file).unwrap();
    let mhog_set = mpdesc::feature_file::read(&mhog_file).unwrap();
    assert!(bitwise_eq(&dmp_set.values, &mhog_set.values));
    println!("ACCEPTANCE PASS [10] dmp output bitwise-equals mhog with v=0 and normalization off");
}
