//! Descriptor composition and batch feature extraction.
//!
//! The combined descriptor applies the pooled-gradient pipeline to the
//! binary-code image and concatenates the eight resulting maps
//! direction-major, row-major within each map.

use rayon::prelude::*;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::matrix::ImageMatrix;
use crate::mhog::{self, MhogConfig};
use crate::mlbp::{self, LbpPadding, MlbpConfig};
use crate::projection::OperatorPath;
use crate::reference;

/// Descriptor kinds the extractor understands.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Descriptor {
    /// Raw binary-code map, flattened.
    Mlbp,
    /// Pooled-gradient stack.
    Mhog,
    /// Pooled-gradient stack with zero overlap and no normalization.
    Dmp,
    /// Pooled-gradient stack computed on the binary-code image.
    MlbpHog,
    /// Classical scanning LBP map; always computed by the scanning loop.
    LbpRef,
}

impl Descriptor {
    pub fn as_str(&self) -> &'static str {
        match self {
            Descriptor::Mlbp => "mlbp",
            Descriptor::Mhog => "mhog",
            Descriptor::Dmp => "dmp",
            Descriptor::MlbpHog => "mlbp_hog",
            Descriptor::LbpRef => "lbp_ref",
        }
    }

    pub fn tag(&self) -> u8 {
        match self {
            Descriptor::Mlbp => 0,
            Descriptor::Mhog => 1,
            Descriptor::Dmp => 2,
            Descriptor::MlbpHog => 3,
            Descriptor::LbpRef => 4,
        }
    }

    pub fn from_tag(tag: u8) -> Result<Self> {
        Ok(match tag {
            0 => Descriptor::Mlbp,
            1 => Descriptor::Mhog,
            2 => Descriptor::Dmp,
            3 => Descriptor::MlbpHog,
            4 => Descriptor::LbpRef,
            _ => return Err(Error::Input(format!("unknown descriptor tag {tag}"))),
        })
    }

    /// Whether the descriptor output is a directional stack (as opposed to a
    /// single code map).
    pub fn is_stack(&self) -> bool {
        matches!(self, Descriptor::Mhog | Descriptor::Dmp | Descriptor::MlbpHog)
    }
}

/// Which implementation route extraction uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ExtractionPath {
    /// Projection operators through their indexed fast route.
    #[default]
    Matrix,
    /// Projection operators through dense materialized products.
    Dense,
    /// Scanning-window reference loops.
    Scanning,
}

impl ExtractionPath {
    pub fn as_str(&self) -> &'static str {
        match self {
            ExtractionPath::Matrix => "matrix",
            ExtractionPath::Dense => "dense",
            ExtractionPath::Scanning => "scanning",
        }
    }
}

/// Frozen parameter snapshot stored next to extracted features.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigSnapshot {
    pub weight_exponents: [u8; 8],
    pub c1: u32,
    pub c2: u32,
    pub v: u32,
    pub b: u32,
    pub epsilon: f64,
    pub normalize: bool,
    pub rows: u32,
    pub cols: u32,
}

impl ConfigSnapshot {
    pub fn new(
        mlbp: &MlbpConfig,
        mhog: &MhogConfig,
        normalize: bool,
        resolution: (usize, usize),
    ) -> Self {
        ConfigSnapshot {
            weight_exponents: mlbp.weight_exponents(),
            c1: mhog.c1 as u32,
            c2: mhog.c2 as u32,
            v: mhog.v as u32,
            b: mhog.b as u32,
            epsilon: mhog.epsilon,
            normalize,
            rows: resolution.0 as u32,
            cols: resolution.1 as u32,
        }
    }

    pub fn mlbp_config(&self) -> Result<MlbpConfig> {
        MlbpConfig::from_exponents(self.weight_exponents)
    }

    pub fn mhog_config(&self) -> MhogConfig {
        MhogConfig {
            c1: self.c1 as usize,
            c2: self.c2 as usize,
            v: self.v as usize,
            b: self.b as usize,
            epsilon: self.epsilon,
        }
    }

    /// Compact single-line rendering for reports.
    pub fn summary(&self) -> String {
        format!(
            "c1={} c2={} v={} b={} epsilon={:e} normalize={} size={}x{}",
            self.c1, self.c2, self.v, self.b, self.epsilon, self.normalize, self.rows, self.cols
        )
    }
}

/// One extracted descriptor with its provenance.
#[derive(Debug, Clone)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub descriptor: Descriptor,
    pub config: ConfigSnapshot,
    pub source_id: String,
}

/// Extraction parameters shared by a whole run.
#[derive(Debug, Clone)]
pub struct ExtractOptions {
    pub descriptor: Descriptor,
    pub mlbp: MlbpConfig,
    pub mhog: MhogConfig,
    /// Applies to the gradient descriptors; `Dmp` ignores it.
    pub normalize: bool,
    pub path: ExtractionPath,
}

impl ExtractOptions {
    pub fn new(descriptor: Descriptor) -> Self {
        ExtractOptions {
            descriptor,
            mlbp: MlbpConfig::default(),
            mhog: MhogConfig::default(),
            normalize: true,
            path: ExtractionPath::Matrix,
        }
    }

    /// The gradient config and normalization flag actually applied: `Dmp`
    /// pins zero overlap and disables normalization.
    pub fn effective(&self) -> (MhogConfig, bool) {
        match self.descriptor {
            Descriptor::Dmp => (MhogConfig { v: 0, ..self.mhog.clone() }, false),
            _ => (self.mhog.clone(), self.normalize),
        }
    }

    fn operator_path(&self) -> OperatorPath {
        match self.path {
            ExtractionPath::Dense => OperatorPath::Dense,
            _ => OperatorPath::Fast,
        }
    }

    /// Feature length this configuration produces on one image.
    pub fn feature_len(&self, resolution: (usize, usize)) -> Result<usize> {
        match self.descriptor {
            Descriptor::Mlbp | Descriptor::LbpRef => Ok(resolution.0 * resolution.1),
            _ => {
                let (cfg, _) = self.effective();
                let (r, c) = cfg.output_shape(resolution.0, resolution.1)?;
                Ok(8 * r * c)
            }
        }
    }
}

fn lbp_map(x: &ImageMatrix, opts: &ExtractOptions) -> Result<ImageMatrix> {
    match opts.path {
        ExtractionPath::Scanning => {
            Ok(mlbp::scanning_lbp(x, LbpPadding::Circular, &opts.mlbp)?.codes)
        }
        _ => mlbp::mlbp_via(x, &opts.mlbp, opts.operator_path()),
    }
}

fn descriptor_values(x: &ImageMatrix, opts: &ExtractOptions) -> Result<Vec<f64>> {
    match opts.descriptor {
        Descriptor::Mlbp => Ok(lbp_map(x, opts)?.into_vec()),
        Descriptor::LbpRef => {
            // the reference descriptor is the scanning loop by definition
            Ok(mlbp::scanning_lbp(x, LbpPadding::Circular, &opts.mlbp)?
                .codes
                .into_vec())
        }
        Descriptor::Mhog | Descriptor::Dmp => {
            let (cfg, normalize) = opts.effective();
            let stack = match opts.path {
                ExtractionPath::Scanning => reference::mhog_loop(x, &cfg, normalize)?,
                _ => mhog::mhog_via(x, &cfg, normalize, opts.operator_path())?,
            };
            Ok(stack.flatten())
        }
        Descriptor::MlbpHog => {
            let (cfg, normalize) = opts.effective();
            let codes = lbp_map(x, opts)?;
            let stack = match opts.path {
                ExtractionPath::Scanning => reference::mhog_loop(&codes, &cfg, normalize)?,
                _ => mhog::mhog_via(&codes, &cfg, normalize, opts.operator_path())?,
            };
            Ok(stack.flatten())
        }
    }
}

/// Extracts one descriptor from one image.
pub fn extract_one(x: &ImageMatrix, source_id: &str, opts: &ExtractOptions) -> Result<FeatureVector> {
    let values = descriptor_values(x, opts)?;
    let (cfg, normalize) = opts.effective();
    Ok(FeatureVector {
        values,
        descriptor: opts.descriptor,
        config: ConfigSnapshot::new(&opts.mlbp, &cfg, normalize, x.shape()),
        source_id: source_id.to_string(),
    })
}

/// The combined descriptor: the pooled-gradient stack of the binary-code
/// image, flattened into one feature vector.
pub fn mlbp_hog(
    x: &ImageMatrix,
    mlbp_cfg: &MlbpConfig,
    mhog_cfg: &MhogConfig,
) -> Result<FeatureVector> {
    let opts = ExtractOptions {
        descriptor: Descriptor::MlbpHog,
        mlbp: mlbp_cfg.clone(),
        mhog: mhog_cfg.clone(),
        normalize: true,
        path: ExtractionPath::Matrix,
    };
    extract_one(x, "", &opts)
}

/// A stacked feature matrix with per-sample provenance, the in-memory form
/// of the `MPFV` container.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSet {
    pub descriptor: Descriptor,
    pub config: ConfigSnapshot,
    pub dim: usize,
    /// `len() * dim` values, row-major in dataset order.
    pub values: Vec<f64>,
    pub ids: Vec<String>,
    pub labels: Vec<i8>,
}

impl FeatureSet {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }
}

/// Runs a closure under the `MPFV_THREADS` parallelism cap (default: the
/// machine core count via the global pool).
fn with_thread_cap<T: Send>(job: impl FnOnce() -> T + Send) -> T {
    let cap = std::env::var("MPFV_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n >= 1);
    match cap {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(job),
            Err(_) => job(),
        },
        None => job(),
    }
}

/// Extracts every sample of the dataset, in dataset order. Extraction fans
/// out over samples; assembly is deterministic. Any per-image failure aborts
/// the run naming the offending sample.
pub fn extract_all(ds: &Dataset, opts: &ExtractOptions) -> Result<FeatureSet> {
    if ds.is_empty() {
        return Err(Error::Input("dataset is empty".into()));
    }
    let rows: Vec<FeatureVector> = with_thread_cap(|| {
        ds.samples
            .par_iter()
            .map(|s| {
                descriptor_values(&s.image, opts).map_err(|e| {
                    Error::Input(format!("sample {}: {e}", s.id))
                })
            })
            .collect::<Result<Vec<Vec<f64>>>>()
    })?
    .into_iter()
    .map(|values| FeatureVector {
        values,
        descriptor: opts.descriptor,
        config: {
            let (cfg, normalize) = opts.effective();
            ConfigSnapshot::new(&opts.mlbp, &cfg, normalize, ds.resolution)
        },
        source_id: String::new(),
    })
    .collect();

    let dim = rows[0].values.len();
    debug_assert!(rows.iter().all(|r| r.values.len() == dim));
    let mut values = Vec::with_capacity(rows.len() * dim);
    for r in &rows {
        values.extend_from_slice(&r.values);
    }
    let (cfg, normalize) = opts.effective();
    Ok(FeatureSet {
        descriptor: opts.descriptor,
        config: ConfigSnapshot::new(&opts.mlbp, &cfg, normalize, ds.resolution),
        dim,
        values,
        ids: ds.samples.iter().map(|s| s.id.clone()).collect(),
        labels: ds.labels(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Sample;
    use crate::synth;
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_u8_image(rows: usize, cols: usize, seed: u64) -> ImageMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        ImageMatrix::from_fn(rows, cols, |_, _| rng.random_range(0..=255u32) as f64)
    }

    #[test]
    fn constant_image_yields_all_zero_features() {
        let x = ImageMatrix::constant(16, 16, 50.0);
        let fv = mlbp_hog(&x, &MlbpConfig::default(), &MhogConfig::default()).unwrap();
        assert!(fv.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn combined_descriptor_equals_manual_two_step() {
        let mlbp_cfg = MlbpConfig::default();
        let mhog_cfg = MhogConfig::default();
        for seed in 0..5 {
            let x = random_u8_image(24, 24, seed);
            let fv = mlbp_hog(&x, &mlbp_cfg, &mhog_cfg).unwrap();
            let codes = mlbp::mlbp(&x, &mlbp_cfg).unwrap();
            let manual = mhog::mhog(&codes, &mhog_cfg).unwrap().flatten();
            assert_eq!(fv.values.len(), manual.len());
            assert!(fv
                .values
                .iter()
                .zip(&manual)
                .all(|(a, b)| a.to_bits() == b.to_bits()));
        }
    }

    #[test]
    fn default_config_feature_length_on_56() {
        let x = random_u8_image(56, 56, 1);
        let fv = mlbp_hog(&x, &MlbpConfig::default(), &MhogConfig::default()).unwrap();
        assert_eq!(fv.values.len(), 8 * 13 * 13);
        let opts = ExtractOptions::new(Descriptor::MlbpHog);
        assert_eq!(opts.feature_len((56, 56)).unwrap(), 1352);
    }

    #[test]
    fn raw_code_descriptor_has_image_sized_features() {
        let x = random_u8_image(12, 10, 2);
        let opts = ExtractOptions::new(Descriptor::Mlbp);
        let fv = extract_one(&x, "img", &opts).unwrap();
        assert_eq!(fv.values.len(), 120);
        assert_eq!(fv.source_id, "img");
    }

    #[test]
    fn reference_descriptor_matches_projection_codes() {
        let x = random_u8_image(14, 14, 3);
        let a = extract_one(&x, "", &ExtractOptions::new(Descriptor::Mlbp)).unwrap();
        let b = extract_one(&x, "", &ExtractOptions::new(Descriptor::LbpRef)).unwrap();
        assert_eq!(a.values, b.values);
    }

    #[test]
    fn extraction_paths_agree_on_the_code_map() {
        let x = random_u8_image(16, 16, 4);
        for path in [ExtractionPath::Matrix, ExtractionPath::Dense, ExtractionPath::Scanning] {
            let opts = ExtractOptions { path, ..ExtractOptions::new(Descriptor::Mlbp) };
            let fv = extract_one(&x, "", &opts).unwrap();
            let base = extract_one(&x, "", &ExtractOptions::new(Descriptor::Mlbp)).unwrap();
            assert_eq!(fv.values, base.values, "path {path:?}");
        }
    }

    #[test]
    fn dmp_pins_zero_overlap_and_no_normalization() {
        let x = random_u8_image(24, 24, 5);
        let dmp_opts = ExtractOptions::new(Descriptor::Dmp);
        let got = extract_one(&x, "", &dmp_opts).unwrap();
        assert_eq!(got.config.v, 0);
        assert!(!got.config.normalize);
        let manual = ExtractOptions {
            descriptor: Descriptor::Mhog,
            normalize: false,
            mhog: MhogConfig { v: 0, ..MhogConfig::default() },
            ..ExtractOptions::new(Descriptor::Mhog)
        };
        let want = extract_one(&x, "", &manual).unwrap();
        assert!(got
            .values
            .iter()
            .zip(&want.values)
            .all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn batch_extraction_is_deterministic_and_ordered() {
        let ds = synth::gen_synthetic(4, (24, 24), 11).unwrap();
        let opts = ExtractOptions::new(Descriptor::MlbpHog);
        let a = extract_all(&ds, &opts).unwrap();
        let b = extract_all(&ds, &opts).unwrap();
        assert_eq!(a.values.len(), a.len() * a.dim);
        assert_eq!(a.ids, b.ids);
        assert!(a
            .values
            .iter()
            .zip(&b.values)
            .all(|(x, y)| x.to_bits() == y.to_bits()));
        assert_eq!(a.ids, ds.samples.iter().map(|s| s.id.clone()).collect::<Vec<_>>());
    }

    #[test]
    fn single_constant_sample_extracts_one_zero_row() {
        let sample = Sample {
            image: ImageMatrix::constant(16, 16, 9.0),
            label: 1,
            id: "flat".into(),
        };
        let ds = Dataset::new(vec![sample], (16, 16)).unwrap();
        let set = extract_all(&ds, &ExtractOptions::new(Descriptor::MlbpHog)).unwrap();
        assert_eq!(set.len(), 1);
        assert!(set.row(0).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn per_sample_failures_name_the_sample() {
        let sample = |id: &str| Sample {
            image: ImageMatrix::constant(4, 4, 1.0),
            label: 1,
            id: id.into(),
        };
        // 4x4 supports the code map but not the gradient stack
        let ds = Dataset::new(vec![sample("tiny_a")], (4, 4)).unwrap();
        let err = extract_all(&ds, &ExtractOptions::new(Descriptor::MlbpHog)).unwrap_err();
        assert!(err.to_string().contains("tiny_a"), "{err}");
    }

    #[test]
    fn empty_dataset_is_rejected() {
        let ds = Dataset::new(vec![], (8, 8)).unwrap();
        assert!(extract_all(&ds, &ExtractOptions::new(Descriptor::Mlbp)).is_err());
    }

    #[test]
    fn descriptor_tags_round_trip() {
        for d in [
            Descriptor::Mlbp,
            Descriptor::Mhog,
            Descriptor::Dmp,
            Descriptor::MlbpHog,
            Descriptor::LbpRef,
        ] {
            assert_eq!(Descriptor::from_tag(d.tag()).unwrap(), d);
        }
        assert!(Descriptor::from_tag(9).is_err());
    }
}
