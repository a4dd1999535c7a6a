//! Command-line front end for the ODAR outlier detection pipeline.
//!
//! Every command writes its results to files named on the command line and
//! embeds the resolved configuration in each of them: CSV files start with a
//! `# config {...}` line, JSON files carry a `config` field and SVG files a
//! `<metadata>` element. Diagnostics go to stderr.

pub mod plot;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use odar::clustering::BackendSpec;
use odar::dataset::{self, Dataset, LabeledDataset, Scenario, SyntheticSpec};
use odar::detector::{self, DetectConfig, Strategy};
use odar::evaluation;
use odar::neighbors;
use odar::transform::{self, Normalization, TransformConfig, Window};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] odar::Error),
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    /// 2 for usage and parameter errors, 3 for bad data or I/O, 4 for internal
    /// failures.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(e) => match e.root() {
                odar::Error::Parameter(_) => 2,
                _ => 3,
            },
            CliError::Internal(_) => 4,
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Core(e.into())
    }
}

type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(
    name = "odar",
    version,
    about = "Outlier detection via high-order density"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the local and high-order density of every object.
    Transform(TransformArgs),
    /// Detect outliers and write per-object decisions plus a JSON summary.
    Detect(DetectArgs),
    /// Score a detection against ground-truth labels.
    Eval(EvalArgs),
    /// Score detections over a range of k on one or more labeled datasets.
    Sweep(SweepArgs),
    /// Generate a synthetic labeled dataset.
    Gen(GenArgs),
    /// Draw a 2-D scatter plot with detected outliers in orange.
    Plot(PlotArgs),
    /// Time each pipeline stage on one dataset.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BackendKind {
    Kmeans,
    Dpc,
    Delta,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StrategyArg {
    Component,
    Nocomp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NormalizationArg {
    Global,
    PerRank,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum WindowArg {
    TwoSided,
    OneSided,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScenarioArg {
    #[value(alias = "blobs")]
    GaussBlobsWithUniformNoise,
    #[value(alias = "unbalanced")]
    UnbalancedTwoCluster,
    #[value(alias = "worm")]
    WormLike,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SpaceArg {
    /// The input coordinates (2-D only).
    Data,
    /// The (rho, hrho) feature space.
    Odar,
}

#[derive(Debug, Clone, Args)]
pub struct PipelineArgs {
    /// Neighbors per object for the local density.
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    #[arg(long, value_enum, default_value_t = BackendKind::Kmeans)]
    pub backend: BackendKind,
    /// Cluster count for the kmeans and dpc backends.
    #[arg(long, default_value_t = 2)]
    pub clusters: usize,
    /// Linking radius for the delta backend.
    #[arg(long, default_value_t = 2.0)]
    pub radius: f64,
    /// Skip the shrinking pass.
    #[arg(long)]
    pub no_shrink: bool,
    /// Neighbors averaged by the shrinking pass [default: N/10].
    #[arg(long)]
    pub beta: Option<usize>,
    #[arg(long, value_enum, default_value_t = StrategyArg::Component)]
    pub strategy: StrategyArg,
    #[arg(long, value_enum, default_value_t = NormalizationArg::Global)]
    pub normalization: NormalizationArg,
    #[arg(long, value_enum, default_value_t = WindowArg::TwoSided)]
    pub window: WindowArg,
}

impl PipelineArgs {
    pub fn config(&self) -> Result<DetectConfig> {
        let backend = match self.backend {
            BackendKind::Kmeans => BackendSpec::Kmeans {
                k_clusters: self.clusters,
            },
            BackendKind::Dpc => BackendSpec::Dpc {
                k_clusters: self.clusters,
            },
            BackendKind::Delta => BackendSpec::DeltaLike {
                radius: self.radius,
            },
        };
        backend.validate()?;
        let transform = TransformConfig {
            shrink: !self.no_shrink,
            normalization: match self.normalization {
                NormalizationArg::Global => Normalization::Global,
                NormalizationArg::PerRank => Normalization::PerRank,
            },
            window: match self.window {
                WindowArg::TwoSided => Window::TwoSided,
                WindowArg::OneSided => Window::OneSided,
            },
            beta: self.beta,
            ..TransformConfig::new(self.k)
        };
        let strategy = match self.strategy {
            StrategyArg::Component => Strategy::Component,
            StrategyArg::Nocomp => Strategy::Nocomp,
        };
        Ok(DetectConfig {
            transform,
            backend,
            strategy,
        })
    }
}

#[derive(Debug, Clone, Args)]
pub struct TransformArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    /// Label column (name or 1-based index) to drop from the features.
    #[arg(long)]
    pub label_column: Option<String>,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
}

#[derive(Debug, Clone, Args)]
pub struct DetectArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Per-object CSV; a JSON summary is written next to it.
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long)]
    pub label_column: Option<String>,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    /// Labeled dataset.
    #[arg(long)]
    pub input: PathBuf,
    /// Detection CSV written by `detect`.
    #[arg(long)]
    pub detection: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, default_value = "label")]
    pub label_column: String,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    /// Labeled datasets; repeat the flag or list several paths.
    #[arg(long, num_args = 1.., required = true)]
    pub input: Vec<PathBuf>,
    /// CSV report; a JSON copy is written next to it.
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, default_value = "label")]
    pub label_column: String,
    /// Inclusive range `a..b` or a comma-separated list.
    #[arg(long, default_value = "2..20")]
    pub k_values: String,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
}

#[derive(Debug, Clone, Args)]
pub struct GenArgs {
    #[arg(long, value_enum, default_value_t = ScenarioArg::GaussBlobsWithUniformNoise)]
    pub scenario: ScenarioArg,
    /// Comma-separated cluster sizes.
    #[arg(long, default_value = "500,500")]
    pub sizes: String,
    #[arg(long, default_value_t = 60)]
    pub outliers: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Per-dimension intervals such as `0:100,0:100`.
    #[arg(long)]
    pub bbox: Option<String>,
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct PlotArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Detection CSV; without it the pipeline runs on the input.
    #[arg(long)]
    pub detection: Option<PathBuf>,
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long)]
    pub label_column: Option<String>,
    #[arg(long, value_enum, default_value_t = SpaceArg::Data)]
    pub space: SpaceArg,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long)]
    pub label_column: Option<String>,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
}

/// The resolved settings of one run, echoed into every result file.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub command: &'static str,
    pub inputs: Vec<PathBuf>,
    pub output: PathBuf,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pipeline: Option<DetectConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label_column: Option<String>,
    #[serde(skip_serializing_if = "Value::is_null")]
    pub options: Value,
}

impl RunConfig {
    fn to_json(&self) -> Result<Value> {
        serde_json::to_value(self).map_err(|e| CliError::Internal(e.to_string()))
    }

    fn comment(&self) -> Result<String> {
        Ok(format!("config {}", self.to_json()?))
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Transform(a) => run_transform(a),
        Command::Detect(a) => run_detect(a),
        Command::Eval(a) => run_eval(a),
        Command::Sweep(a) => run_sweep(a),
        Command::Gen(a) => run_gen(a),
        Command::Plot(a) => run_plot(a),
        Command::Bench(a) => run_bench(a),
    }
}

fn require_file(path: &Path) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::Usage(format!(
            "input file {} does not exist",
            path.display()
        )))
    }
}

fn load(path: &Path, label_column: Option<&str>) -> Result<LabeledDataset> {
    require_file(path)?;
    Ok(dataset::load_csv(path, label_column)?)
}

/// Path of the JSON file written alongside a CSV result.
pub fn sidecar(output: &Path) -> PathBuf {
    let json = output.with_extension("json");
    if json == output {
        output.with_extension("summary.json")
    } else {
        json
    }
}

fn write_csv_result(
    path: &Path,
    config: &RunConfig,
    body: impl FnOnce(&mut Vec<u8>) -> io::Result<()>,
) -> Result<()> {
    let mut buf = Vec::new();
    writeln!(buf, "# {}", config.comment()?)?;
    body(&mut buf)?;
    fs::write(path, buf)?;
    Ok(())
}

fn write_json(path: &Path, config: &RunConfig, mut value: Value) -> Result<()> {
    if let Value::Object(map) = &mut value {
        map.insert("config".into(), config.to_json()?);
    }
    let mut text =
        serde_json::to_string_pretty(&value).map_err(|e| CliError::Internal(e.to_string()))?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn run_transform(a: &TransformArgs) -> Result<()> {
    let config = a.pipeline.config()?;
    let data = load(&a.input, a.label_column.as_deref())?;
    let (space, profile) = transform::construct_odar_space(&data.data, &config.transform)?;
    let run = RunConfig {
        command: "transform",
        inputs: vec![a.input.clone()],
        output: a.output.clone(),
        pipeline: Some(config),
        label_column: a.label_column.clone(),
        options: Value::Null,
    };
    write_csv_result(&a.output, &run, |out| {
        transform::write_profile_csv(out, &profile)
    })?;
    let summary = json!({
        "n": data.data.n(),
        "d": data.data.d(),
        "sigma": profile.sigma,
        "mean_window_size": transform::mean_window_size(&profile.rho, profile.sigma),
        "shrunk": space.is_shrunk(),
    });
    write_json(&sidecar(&a.output), &run, summary)
}

fn run_detect(a: &DetectArgs) -> Result<()> {
    let config = a.pipeline.config()?;
    let data = load(&a.input, a.label_column.as_deref())?;
    let det = detector::detect(&data.data, &config)?;
    let run = RunConfig {
        command: "detect",
        inputs: vec![a.input.clone()],
        output: a.output.clone(),
        pipeline: Some(config),
        label_column: a.label_column.clone(),
        options: Value::Null,
    };
    write_csv_result(&a.output, &run, |out| det.result.write_csv(out))?;
    write_json(&sidecar(&a.output), &run, det.result.summary())
}

fn read_detection(path: &Path) -> Result<Vec<usize>> {
    require_file(path)?;
    Ok(detector::read_detection_csv(&fs::read_to_string(path)?)?)
}

fn run_eval(a: &EvalArgs) -> Result<()> {
    let data = load(&a.input, Some(&a.label_column))?;
    let predicted = read_detection(&a.detection)?;
    let (accuracy, counts) = evaluation::balanced_accuracy(&predicted, &data.labels)?;
    let run = RunConfig {
        command: "eval",
        inputs: vec![a.input.clone(), a.detection.clone()],
        output: a.output.clone(),
        pipeline: None,
        label_column: Some(a.label_column.clone()),
        options: Value::Null,
    };
    let report = json!({
        "balanced_accuracy": accuracy,
        "tp": counts.tp,
        "fn": counts.fn_,
        "tn": counts.tn,
        "fp": counts.fp,
    });
    write_json(&a.output, &run, report)
}

/// Parses `a..b` (inclusive) or `a,b,c`.
pub fn parse_k_values(text: &str) -> Result<Vec<usize>> {
    let bad = || CliError::Usage(format!("cannot read k values from {text:?}"));
    let ks: Vec<usize> = if let Some((lo, hi)) = text.split_once("..") {
        let lo: usize = lo.trim().parse().map_err(|_| bad())?;
        let hi: usize = hi.trim().parse().map_err(|_| bad())?;
        (lo..=hi).collect()
    } else {
        text.split(',')
            .map(|t| t.trim().parse().map_err(|_| bad()))
            .collect::<Result<_>>()?
    };
    if ks.is_empty() {
        return Err(bad());
    }
    Ok(ks)
}

fn run_sweep(a: &SweepArgs) -> Result<()> {
    let config = a.pipeline.config()?;
    let ks = parse_k_values(&a.k_values)?;
    let mut sets = Vec::new();
    for path in &a.input {
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        sets.push((name, load(path, Some(&a.label_column))?));
    }
    let report = evaluation::parameter_sweep(&sets, &ks, &config);
    let run = RunConfig {
        command: "sweep",
        inputs: a.input.clone(),
        output: a.output.clone(),
        pipeline: Some(config),
        label_column: Some(a.label_column.clone()),
        options: json!({ "k_values": ks }),
    };
    write_csv_result(&a.output, &run, |out| report.write_csv(out))?;
    let value = json!({
        "report": report,
        "average_range": report.average_range(),
    });
    write_json(&sidecar(&a.output), &run, value)
}

fn parse_sizes(text: &str) -> Result<Vec<usize>> {
    text.split(',')
        .map(|t| {
            t.trim()
                .parse()
                .map_err(|_| CliError::Usage(format!("cannot read cluster sizes from {text:?}")))
        })
        .collect()
}

fn parse_bbox(text: &str) -> Result<Vec<(f64, f64)>> {
    text.split(',')
        .map(|part| {
            let bad = || CliError::Usage(format!("bounding interval {part:?} is not lo:hi"));
            let (lo, hi) = part.split_once(':').ok_or_else(bad)?;
            Ok((
                lo.trim().parse().map_err(|_| bad())?,
                hi.trim().parse().map_err(|_| bad())?,
            ))
        })
        .collect()
}

fn run_gen(a: &GenArgs) -> Result<()> {
    let scenario = match a.scenario {
        ScenarioArg::GaussBlobsWithUniformNoise => Scenario::GaussBlobsWithUniformNoise,
        ScenarioArg::UnbalancedTwoCluster => Scenario::UnbalancedTwoCluster,
        ScenarioArg::WormLike => Scenario::WormLike,
    };
    let mut spec = SyntheticSpec::new(scenario, parse_sizes(&a.sizes)?, a.outliers, a.seed);
    if let Some(b) = &a.bbox {
        spec.bbox = parse_bbox(b)?;
    }
    let data = dataset::generate(&spec)?;
    let run = RunConfig {
        command: "gen",
        inputs: Vec::new(),
        output: a.output.clone(),
        pipeline: None,
        label_column: None,
        options: json!({
            "scenario": scenario,
            "sizes": spec.cluster_sizes,
            "outliers": spec.outliers,
            "bbox": spec.bbox,
            "seed": spec.seed,
        }),
    };
    dataset::save_csv(&a.output, &data, &[spec.header(), run.comment()?])?;
    let summary = json!({
        "header": spec.header(),
        "n": data.data.n(),
        "d": data.data.d(),
        "outliers": data.outlier_count(),
        "outlier_rate": data.outlier_rate,
    });
    write_json(&sidecar(&a.output), &run, summary)
}

fn run_plot(a: &PlotArgs) -> Result<()> {
    let config = a.pipeline.config()?;
    let data = load(&a.input, a.label_column.as_deref())?.data;
    let n = data.n();
    let flags = match &a.detection {
        Some(path) => {
            let mut flags = vec![false; n];
            for i in read_detection(path)? {
                *flags.get_mut(i).ok_or_else(|| {
                    CliError::Usage(format!("detection index {i} out of range for {n} objects"))
                })? = true;
            }
            flags
        }
        None => {
            let det = detector::detect(&data, &config)?;
            (0..n).map(|i| det.result.is_outlier(i)).collect()
        }
    };
    let shown: Dataset = match a.space {
        SpaceArg::Data => data,
        SpaceArg::Odar => transform::construct_odar_space(&data, &config.transform)?
            .0
            .to_dataset()?,
    };
    let mut inputs = vec![a.input.clone()];
    inputs.extend(a.detection.clone());
    let run = RunConfig {
        command: "plot",
        inputs,
        output: a.output.clone(),
        pipeline: Some(config),
        label_column: a.label_column.clone(),
        options: json!({ "space": if a.space == SpaceArg::Odar { "odar" } else { "data" } }),
    };
    let svg = plot::plot_flags(&shown, &flags, Some(&run.comment()?))?;
    fs::write(&a.output, svg)?;
    Ok(())
}

fn run_bench(a: &BenchArgs) -> Result<()> {
    let config = a.pipeline.config()?;
    let data = load(&a.input, a.label_column.as_deref())?.data;
    let n = data.n();
    let total = Instant::now();

    let clock = Instant::now();
    let index = neighbors::build_index(&data);
    let knn = neighbors::knn_distances(&index, config.transform.k)?;
    let t_knn = clock.elapsed().as_secs_f64();

    let clock = Instant::now();
    let rho = transform::local_density(&knn, config.transform.normalization)?;
    let t_rho = clock.elapsed().as_secs_f64();

    let clock = Instant::now();
    let (hrho, sigma) = transform::high_order_density(&rho, config.transform.window)?;
    let t_hrho = clock.elapsed().as_secs_f64();

    let clock = Instant::now();
    let mut space = transform::assemble(&rho, &hrho)?;
    let beta = config
        .transform
        .beta
        .unwrap_or_else(|| transform::default_beta(n));
    if config.transform.shrink {
        space = transform::shrink(&space, beta)?;
    }
    let t_shrink = clock.elapsed().as_secs_f64();

    let clock = Instant::now();
    let result = match config.strategy {
        Strategy::Component => detector::detect_component(&space, &rho, &config.backend)?,
        Strategy::Nocomp => detector::detect_nocomp(&space, &config.backend)?,
    };
    let t_detect = clock.elapsed().as_secs_f64();
    let t_total = total.elapsed().as_secs_f64();

    let run = RunConfig {
        command: "bench",
        inputs: vec![a.input.clone()],
        output: a.output.clone(),
        pipeline: Some(config),
        label_column: a.label_column.clone(),
        options: Value::Null,
    };
    let report = json!({
        "n": n,
        "d": data.d(),
        "k": config.transform.k,
        "s": transform::mean_window_size(&rho, sigma),
        "beta": if config.transform.shrink { Some(beta) } else { None },
        "outliers": result.outliers.len(),
        "seconds": {
            "knn": t_knn,
            "local_density": t_rho,
            "high_order_density": t_hrho,
            "shrink": t_shrink,
            "detect": t_detect,
            "total": t_total,
        },
    });
    write_json(&a.output, &run, report)
}
