//! Command-line front end: synthetic data generation, feature extraction,
//! classifier evaluation, extraction-path benchmarking, and the invariant
//! selftest.
//!
//! Exit codes: 0 success, 2 usage error, 1 runtime or validation failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use mpdesc::bench;
use mpdesc::classifier::{cross_validate, lse_predict, lse_train, Confusion, Gamma};
use mpdesc::dataset::{write_pgm, Dataset};
use mpdesc::error::Error;
use mpdesc::feature_file;
use mpdesc::mhog::MhogConfig;
use mpdesc::mlbp::MlbpConfig;
use mpdesc::pipeline::{extract_all, Descriptor, ExtractOptions, ExtractionPath, FeatureSet};
use mpdesc::report::{version, RunReport};
use mpdesc::selftest;
use mpdesc::synth::gen_synthetic;

#[derive(Parser)]
#[command(
    name = "mpdesc",
    version,
    about = "Matrix-projection local descriptors: extraction, evaluation and benchmarking"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic two-class dataset (PGM images plus labels.csv)
    Gen(GenArgs),
    /// Extract descriptor features from a dataset into an MPFV file
    Extract(ExtractArgs),
    /// Train and evaluate the classifier on feature files
    Eval(EvalArgs),
    /// Time the matrix, dense and scanning extraction paths
    Bench(BenchArgs),
    /// Run the built-in invariant suite
    Selftest,
}

#[derive(Args)]
struct GenArgs {
    /// Output directory
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
    /// Images per class
    #[arg(long)]
    n: usize,
    /// Square image side length
    #[arg(long, default_value_t = 56)]
    size: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum DescriptorArg {
    Mlbp,
    Mhog,
    Dmp,
    MlbpHog,
    LbpRef,
}

impl From<DescriptorArg> for Descriptor {
    fn from(d: DescriptorArg) -> Descriptor {
        match d {
            DescriptorArg::Mlbp => Descriptor::Mlbp,
            DescriptorArg::Mhog => Descriptor::Mhog,
            DescriptorArg::Dmp => Descriptor::Dmp,
            DescriptorArg::MlbpHog => Descriptor::MlbpHog,
            DescriptorArg::LbpRef => Descriptor::LbpRef,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum PathArg {
    Matrix,
    Dense,
    Scanning,
}

impl From<PathArg> for ExtractionPath {
    fn from(p: PathArg) -> ExtractionPath {
        match p {
            PathArg::Matrix => ExtractionPath::Matrix,
            PathArg::Dense => ExtractionPath::Dense,
            PathArg::Scanning => ExtractionPath::Scanning,
        }
    }
}

#[derive(Args)]
struct DescriptorOpts {
    #[arg(long, value_enum)]
    descriptor: DescriptorArg,
    /// Dataset directory
    #[arg(long, value_name = "DIR")]
    input: PathBuf,
    /// Manifest path (default: <input>/labels.csv)
    #[arg(long, value_name = "CSV")]
    labels: Option<PathBuf>,
    /// Overlapping pooling cell
    #[arg(long, default_value_t = 4)]
    c1: usize,
    /// Non-overlapping pooling cell
    #[arg(long, default_value_t = 2)]
    c2: usize,
    /// Window overlap
    #[arg(long, default_value_t = 2)]
    v: usize,
    /// Normalization block size
    #[arg(long, default_value_t = 2)]
    b: usize,
    /// Normalization guard added inside the radicand
    #[arg(long, default_value_t = 1e-12)]
    epsilon: f64,
    /// Ingestion resolution (images are resized when needed)
    #[arg(long, default_value_t = 56)]
    size: usize,
    /// Skip block normalization for the gradient descriptors
    #[arg(long)]
    no_normalize: bool,
    /// Implementation route
    #[arg(long, value_enum, default_value_t = PathArg::Matrix)]
    path: PathArg,
}

impl DescriptorOpts {
    fn extract_options(&self) -> ExtractOptions {
        ExtractOptions {
            descriptor: self.descriptor.into(),
            mlbp: MlbpConfig::default(),
            mhog: MhogConfig {
                c1: self.c1,
                c2: self.c2,
                v: self.v,
                b: self.b,
                epsilon: self.epsilon,
            },
            normalize: !self.no_normalize,
            path: self.path.into(),
        }
    }

    fn load_dataset(&self) -> Result<Dataset, Error> {
        let manifest = self
            .labels
            .clone()
            .unwrap_or_else(|| self.input.join("labels.csv"));
        Dataset::load(&self.input, &manifest, self.size)
    }
}

#[derive(Args)]
struct ExtractArgs {
    #[command(flatten)]
    opts: DescriptorOpts,
    /// Output feature file
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    /// Training feature file (requires --test)
    #[arg(long, value_name = "FILE", requires = "test", conflicts_with_all = ["features", "folds"])]
    train: Option<PathBuf>,
    /// Test feature file
    #[arg(long, value_name = "FILE")]
    test: Option<PathBuf>,
    /// Single feature file for cross-validation (requires --folds)
    #[arg(long, value_name = "FILE", requires = "folds")]
    features: Option<PathBuf>,
    /// Number of cross-validation folds
    #[arg(long)]
    folds: Option<usize>,
    /// Ridge regularization
    #[arg(long, default_value_t = 1e-4)]
    lambda: f64,
    /// RBF bandwidth: a positive number or "auto" (median heuristic)
    #[arg(long, default_value = "auto")]
    gamma: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    opts: DescriptorOpts,
    /// Timed repetitions per path
    #[arg(long, default_value_t = 10)]
    repeat: usize,
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Gen(args) => cmd_gen(args),
        Command::Extract(args) => cmd_extract(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Bench(args) => cmd_bench(args),
        Command::Selftest => cmd_selftest(),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn usage_error(message: &str) -> ExitCode {
    eprintln!("usage error: {message}");
    ExitCode::from(2)
}

fn cmd_gen(args: GenArgs) -> Result<ExitCode, Error> {
    if args.n == 0 {
        return Ok(usage_error("--n must be at least 1"));
    }
    let ds = gen_synthetic(args.n, (args.size, args.size), args.seed)?;
    std::fs::create_dir_all(&args.out).map_err(|e| Error::Io {
        path: args.out.clone(),
        source: e,
    })?;
    let manifest = args.out.join("labels.csv");
    let mut lines = String::from("id,label\n");
    for s in &ds.samples {
        write_pgm(&args.out.join(format!("{}.pgm", s.id)), &s.image)?;
        let label = if s.label == 1 { "malignant" } else { "benign" };
        lines.push_str(&format!("{},{label}\n", s.id));
    }
    std::fs::write(&manifest, lines).map_err(|e| Error::Io {
        path: manifest.clone(),
        source: e,
    })?;
    println!(
        "wrote {} images ({}x{}) and {} under {}",
        ds.len(),
        args.size,
        args.size,
        manifest.display(),
        args.out.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_extract(args: ExtractArgs) -> Result<ExitCode, Error> {
    let opts = args.opts.extract_options();
    let ds = args.opts.load_dataset()?;
    let start = Instant::now();
    let set = extract_all(&ds, &opts)?;
    let elapsed = start.elapsed().as_secs_f64();
    feature_file::write(&args.out, &set)?;
    println!(
        "extracted descriptor={} samples={} dim={} path={} in {:.3}s -> {}",
        set.descriptor.as_str(),
        set.len(),
        set.dim,
        opts.path.as_str(),
        elapsed,
        args.out.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn parse_gamma(raw: &str) -> Result<Gamma, String> {
    if raw.eq_ignore_ascii_case("auto") {
        return Ok(Gamma::Auto);
    }
    match raw.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(Gamma::Value(v)),
        _ => Err(format!(
            "--gamma must be \"auto\" or a positive number, got {raw:?}"
        )),
    }
}

fn dataset_name(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn check_same_layout(train: &FeatureSet, test: &FeatureSet) -> Result<(), Error> {
    if train.dim != test.dim {
        return Err(Error::Input(format!(
            "feature dimension mismatch: train {} vs test {}",
            train.dim, test.dim
        )));
    }
    if train.descriptor != test.descriptor {
        log::warn!(
            "descriptor tags differ: train {} vs test {}",
            train.descriptor.as_str(),
            test.descriptor.as_str()
        );
    }
    Ok(())
}

fn cmd_eval(args: EvalArgs) -> Result<ExitCode, Error> {
    let gamma = match parse_gamma(&args.gamma) {
        Ok(g) => g,
        Err(m) => return Ok(usage_error(&m)),
    };
    let report = match (&args.train, &args.test, &args.features, args.folds) {
        (Some(train_path), Some(test_path), None, None) => {
            let train = feature_file::read(train_path)?;
            let test = feature_file::read(test_path)?;
            check_same_layout(&train, &test)?;
            let t0 = Instant::now();
            let model = lse_train(&train.values, train.dim, &train.labels, args.lambda, gamma)?;
            let train_seconds = t0.elapsed().as_secs_f64();
            let t1 = Instant::now();
            let prediction = lse_predict(&model, &test.values)?;
            let predict_seconds = t1.elapsed().as_secs_f64();
            let mut confusion = Confusion::default();
            for (&actual, &predicted) in test.labels.iter().zip(&prediction.labels) {
                confusion.record(actual, predicted);
            }
            RunReport {
                descriptor: train.descriptor.as_str().to_string(),
                dataset: format!("{}|{}", dataset_name(train_path), dataset_name(test_path)),
                config: train.config.summary(),
                feature_dim: train.dim,
                seed: args.seed,
                lambda: args.lambda,
                gamma: model.gamma(),
                folds: None,
                fold_accuracies: vec![],
                accuracy: confusion.accuracy(),
                confusion,
                extract_seconds: 0.0,
                train_seconds,
                predict_seconds,
            }
        }
        (None, None, Some(features_path), Some(folds)) => {
            if folds < 2 {
                return Ok(usage_error("--folds must be at least 2"));
            }
            let set = feature_file::read(features_path)?;
            let outcome = cross_validate(
                &set.values,
                set.dim,
                &set.labels,
                folds,
                args.lambda,
                gamma,
                args.seed,
            )?;
            // report the bandwidth the heuristic picks on the full set
            let model = lse_train(&set.values, set.dim, &set.labels, args.lambda, gamma)?;
            RunReport {
                descriptor: set.descriptor.as_str().to_string(),
                dataset: dataset_name(features_path),
                config: set.config.summary(),
                feature_dim: set.dim,
                seed: args.seed,
                lambda: args.lambda,
                gamma: model.gamma(),
                folds: Some(folds),
                fold_accuracies: outcome.fold_accuracies.clone(),
                accuracy: outcome.accuracy,
                confusion: outcome.confusion,
                extract_seconds: 0.0,
                train_seconds: outcome.train_seconds,
                predict_seconds: outcome.predict_seconds,
            }
        }
        _ => {
            return Ok(usage_error(
                "either --train FILE --test FILE or --features FILE --folds K is required",
            ))
        }
    };
    print!("{}", report.human_table());
    for line in report.fold_lines() {
        println!("{line}");
    }
    println!("{}", report.machine_line());
    Ok(ExitCode::SUCCESS)
}

fn cmd_bench(args: BenchArgs) -> Result<ExitCode, Error> {
    if args.repeat == 0 {
        return Ok(usage_error("--repeat must be at least 1"));
    }
    let opts = args.opts.extract_options();
    let ds = args.opts.load_dataset()?;
    let report = bench::run(&ds, &opts, args.repeat)?;
    print!("{}", report.human_table());
    for line in report.machine_lines() {
        println!("{line}");
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_selftest() -> Result<ExitCode, Error> {
    let start = Instant::now();
    let outcomes = selftest::run_all();
    let mut failed = 0usize;
    for o in &outcomes {
        if o.passed {
            println!("ok      {}", o.name);
        } else {
            failed += 1;
            println!("FAILED  {}: {}", o.name, o.detail);
        }
    }
    println!(
        "selftest {}: {} checks, {} failed, {:.2}s (version {})",
        if failed == 0 { "passed" } else { "FAILED" },
        outcomes.len(),
        failed,
        start.elapsed().as_secs_f64(),
        version()
    );
    if failed == 0 {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::FAILURE)
    }
}
