use std::path::PathBuf;
use std::time::Duration;

use ale_core::Paradigm;
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "ale", version, about = "Abductive latent explanations for prototype-based classifiers")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Explain every instance of a dataset.
    Explain(ExplainArgs),
    /// Re-derive bounds for serialized explanations and check them.
    Verify(VerifyArgs),
    /// Explain a dataset and summarize explanation sizes.
    Stats(StatsArgs),
    /// Brute-force cross-checks of the engine.
    #[command(subcommand)]
    Oracle(OracleCommand),
    /// Write a synthetic bundle and dataset.
    Synth(SynthArgs),
}

fn parse_paradigm(s: &str) -> Result<Paradigm, String> {
    s.parse().map_err(|e: ale_core::AleError| e.to_string())
}

/// Options shared by everything that loads a bundle.
#[derive(Args, Debug, Clone, Default)]
pub struct ModelOpts {
    /// Replace the bundle's similarity epsilon.
    #[arg(long)]
    pub epsilon_override: Option<f64>,
    /// Distance slack added to every derived distance interval [default: the bundle's]
    #[arg(long)]
    pub slack: Option<f64>,
    /// Logit margin the predicted class must keep over every other class.
    #[arg(long, default_value_t = 0.0)]
    pub margin: f64,
}

#[derive(Args, Debug, Clone)]
pub struct SearchOpts {
    /// Pair selection for spatial paradigms.
    #[arg(long, default_value = "nearest")]
    pub strategy: String,
    /// Initial pairs for spatial paradigms.
    #[arg(long, default_value = "empty")]
    pub init: String,
    /// Stop the forward pass at this many elements.
    #[arg(long)]
    pub max_pairs: Option<usize>,
    /// Wall-clock limit per instance, e.g. `10s` or `500ms`.
    #[arg(long, value_parser = humantime::parse_duration)]
    pub timeout_per_instance: Option<Duration>,
    /// Worker threads.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

impl Default for SearchOpts {
    fn default() -> Self {
        SearchOpts {
            strategy: "nearest".into(),
            init: "empty".into(),
            max_pairs: None,
            timeout_per_instance: None,
            jobs: 1,
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct ExplainArgs {
    pub bundle: PathBuf,
    pub dataset: PathBuf,
    #[arg(long, default_value = "topk", value_parser = parse_paradigm)]
    pub paradigm: Paradigm,
    #[command(flatten)]
    pub model: ModelOpts,
    #[command(flatten)]
    pub search: SearchOpts,
    /// NDJSON output file, or an existing directory for one file per
    /// instance [default: stdout]
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Include the search trace in each document.
    #[arg(long)]
    pub trace: bool,
}

#[derive(Args, Debug, Clone)]
pub struct VerifyArgs {
    pub bundle: PathBuf,
    /// Explanation document(s): one object, an array, or NDJSON.
    pub explanation: PathBuf,
    /// Dataset holding the explained instances. Without it, embedded bounds
    /// are checked as they are.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    #[command(flatten)]
    pub model: ModelOpts,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Table,
    Json,
}

#[derive(Args, Debug, Clone)]
pub struct StatsArgs {
    pub bundle: PathBuf,
    pub dataset: PathBuf,
    /// Paradigms to run; repeatable [default: triangle, hypersphere, topk]
    #[arg(long, value_parser = parse_paradigm)]
    pub paradigm: Vec<Paradigm>,
    #[command(flatten)]
    pub model: ModelOpts,
    #[command(flatten)]
    pub search: SearchOpts,
    /// Explain only this many randomly chosen labeled instances per class.
    #[arg(long)]
    pub sample_per_class: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write the JSON report here.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Add wall-time statistics (makes the report non-reproducible).
    #[arg(long)]
    pub timing: bool,
    /// Dataset name in the table [default: dataset file stem]
    #[arg(long)]
    pub name: Option<String>,
    #[arg(long, value_enum, default_value_t = ReportFormat::Table)]
    pub format: ReportFormat,
}

impl StatsArgs {
    pub fn new(bundle: impl Into<PathBuf>, dataset: impl Into<PathBuf>) -> Self {
        StatsArgs {
            bundle: bundle.into(),
            dataset: dataset.into(),
            paradigm: Vec::new(),
            model: ModelOpts::default(),
            search: SearchOpts::default(),
            sample_per_class: None,
            seed: 0,
            out: None,
            timing: false,
            name: None,
            format: ReportFormat::Table,
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct DocOracleArgs {
    pub bundle: PathBuf,
    pub explanation: PathBuf,
    #[arg(long)]
    pub dataset: PathBuf,
    #[command(flatten)]
    pub model: ModelOpts,
}

#[derive(Subcommand, Debug)]
pub enum OracleCommand {
    /// Compare the favoring-corner gap with exhaustive corner enumeration.
    Corners(DocOracleArgs),
    /// Sample activation boxes of verified explanations.
    Sample {
        #[command(flatten)]
        docs: DocOracleArgs,
        #[arg(short, long, default_value_t = 10_000)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Check that no single element of a verified explanation is redundant.
    Minimality(DocOracleArgs),
    /// Sample the intersection of two sphere surfaces.
    Sphere {
        /// Comma-separated coordinates.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        c1: Vec<f64>,
        #[arg(long)]
        r1: f64,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        c2: Vec<f64>,
        #[arg(long)]
        r2: f64,
        #[arg(short, long, default_value_t = 1000)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum SynthKind {
    /// The five-prototype, two-class toy classifier.
    RunningExample,
    /// 5 classes, 10 prototypes per class, 4x4 grid, D = 32.
    Table,
    /// One prototype per class, classes far apart.
    Separated,
}

#[derive(Args, Debug, Clone)]
pub struct SynthArgs {
    #[arg(value_enum)]
    pub kind: SynthKind,
    /// Directory receiving bundle.json and dataset.ndjson.
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = 100)]
    pub instances: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}
