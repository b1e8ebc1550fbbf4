//! `fareval`: batch evaluation of extractive summaries with facet-aware
//! metrics, automatic mapping labelers and the experiments built on them.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use fareval::corpus::CorpusError;
use fareval::labelers::LabelError;
use fareval::metrics::MetricsError;
use fareval::similarity::{SimilarityError, TfIdfScope};
use fareval::stats::StatsError;
use fareval::FacetScope;

mod commands;
mod convert;
mod table;

use table::Format;

#[derive(Debug, Parser)]
#[command(name = "fareval", version, about = "Facet-aware evaluation of extractive summaries")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Global {
    /// Dataset with documents, references and facet mappings (JSONL).
    #[arg(long, global = true, value_name = "PATH")]
    pub fams: Option<PathBuf>,
    /// System output as NAME=PATH; repeatable.
    #[arg(long = "system", global = true, value_name = "NAME=PATH", value_parser = parse_named)]
    pub systems: Vec<(String, PathBuf)>,
    /// Restrict to sample categories, e.g. `L,H`.
    #[arg(long, global = true, value_name = "N,L,H")]
    pub categories: Option<String>,
    /// Facets counted in the FAR denominator.
    #[arg(long, global = true, default_value = "mappable", value_parser = parse_scope)]
    pub scope: FacetScope,
    /// Truncate extractions to k sentences (eval, breakdown); k for lead
    /// and oracle baselines.
    #[arg(long, global = true)]
    pub k: Option<usize>,
    #[arg(long, global = true, value_enum, default_value = "tsv")]
    pub format: Format,
    /// Output file; stdout when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Worker threads; defaults to the number of cores.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Snowball-stem tokens before matching.
    #[arg(long, global = true)]
    pub stemming: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Score systems with FAR, SAR, redundancy and ROUGE.
    Eval(EvalArgs),
    /// Build machine facet mappings with a sentence-regression labeler.
    Label(LabelArgs),
    /// Precision/recall/F1 of labelers' support sentences against gold.
    BenchLabelers(BenchArgs),
    /// Correlate FAR under machine mappings with FAR under gold mappings.
    Correlate(CorrelateArgs),
    /// Fit FAR from machine-mapping estimates by least squares.
    Autofar(AutofarArgs),
    /// One metric per system on each sample-category subset.
    Breakdown(BreakdownArgs),
    /// Dataset statistics.
    Stats,
    /// Convert annotation files with other field names into the dataset format.
    Convert(convert::ConvertArgs),
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Add a Lead-K row.
    #[arg(long, value_name = "K")]
    pub lead: Option<usize>,
    /// Add an oracle row (best FAR with at most --k sentences, default 3).
    #[arg(long)]
    pub oracle: bool,
    /// Divide each sample's FAR by its extraction size.
    #[arg(long)]
    pub length_normalized: bool,
    /// Also write per-sample scores (TSV, raw ratios).
    #[arg(long, value_name = "PATH")]
    pub per_sample: Option<PathBuf>,
    /// Human system rankings (JSONL: `id`, `ranks` {system: rank}).
    #[arg(long, value_name = "PATH")]
    pub human: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct LabelArgs {
    /// greedy-rouge1, lead, or a similarity measure (tfidf, rouge1-f1,
    /// rouge2-f1, rougel-recall, rougel-precision, rougel-f1, rouge-avg-f1).
    #[arg(long)]
    pub method: String,
    /// Support sentences per facet for similarity measures.
    #[arg(long, default_value_t = 1)]
    pub topn: usize,
    #[command(flatten)]
    pub tfidf: TfIdfArg,
}

#[derive(Debug, Clone, Copy, Args)]
pub struct TfIdfArg {
    /// Sentences the TF-IDF model is fitted on: doc or doc+ref.
    #[arg(long, default_value = "doc+ref", value_parser = parse_tfidf_scope)]
    pub tfidf_scope: TfIdfScope,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Comma-separated labelers (`measure@N`, `greedy-rouge1`, `lead-K`);
    /// defaults to the standard set at N = 1.
    #[arg(long)]
    pub labelers: Option<String>,
    /// Precomputed machine mappings as NAME=PATH; repeatable.
    #[arg(long = "machine", value_name = "NAME=PATH", value_parser = parse_named)]
    pub machines: Vec<(String, PathBuf)>,
    #[command(flatten)]
    pub tfidf: TfIdfArg,
}

#[derive(Debug, Args)]
pub struct CorrelateArgs {
    /// Comma-separated similarity measures crossed with --groups, or
    /// explicit `measure@N` labelers.
    #[arg(long, default_value = "rouge1-f1,rouge2-f1,rougel-f1,rouge-avg-f1")]
    pub labelers: String,
    /// Support groups per facet to try.
    #[arg(long, default_value = "1,2,3", value_delimiter = ',')]
    pub groups: Vec<usize>,
    /// Precomputed machine mappings as NAME=PATH; repeatable.
    #[arg(long = "machine", value_name = "NAME=PATH", value_parser = parse_named)]
    pub machines: Vec<(String, PathBuf)>,
    #[command(flatten)]
    pub tfidf: TfIdfArg,
}

#[derive(Debug, Args)]
pub struct AutofarArgs {
    /// Comma-separated labelers whose FAR estimates are the features.
    #[arg(long, default_value = "rouge1-f1@3,rouge2-f1@3,rougel-f1@3,rouge-avg-f1@3")]
    pub labelers: String,
    /// Unannotated dataset to extrapolate to.
    #[arg(long, value_name = "PATH")]
    pub predict: Option<PathBuf>,
    /// System output on the prediction dataset as NAME=PATH; repeatable.
    #[arg(long = "predict-system", value_name = "NAME=PATH", value_parser = parse_named, requires = "predict")]
    pub predict_systems: Vec<(String, PathBuf)>,
    #[command(flatten)]
    pub tfidf: TfIdfArg,
}

#[derive(Debug, Args)]
pub struct BreakdownArgs {
    /// rouge1-f1, rouge2-f1, rougel-f1, far or sar.
    #[arg(long, default_value = "rouge1-f1")]
    pub metric: String,
    /// Text-only system output as NAME=PATH; repeatable.
    #[arg(long = "abstractive", value_name = "NAME=PATH", value_parser = parse_named)]
    pub abstractive: Vec<(String, PathBuf)>,
    /// Add a Lead-K row.
    #[arg(long, value_name = "K")]
    pub lead: Option<usize>,
}

fn parse_named(s: &str) -> Result<(String, PathBuf), String> {
    match s.split_once('=') {
        Some((name, path)) if !name.is_empty() && !path.is_empty() => Ok((name.to_string(), PathBuf::from(path))),
        _ => Err(format!("expected NAME=PATH, got {s:?}")),
    }
}

fn parse_scope(s: &str) -> Result<FacetScope, String> {
    s.parse()
}

fn parse_tfidf_scope(s: &str) -> Result<TfIdfScope, String> {
    s.parse()
}

/// Exit status for a failed run: 1 when a metric is undefined on valid
/// inputs, 2 for anything wrong with the inputs themselves (including
/// argument problems the CLI reports on its own).
fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<fareval::Error>() {
            return if e.is_input_error() { 2 } else { 1 };
        }
        if cause.downcast_ref::<StatsError>().is_some() {
            return 1;
        }
        if let Some(e) = cause.downcast_ref::<MetricsError>() {
            return if matches!(e, MetricsError::NoSupport(_)) { 1 } else { 2 };
        }
        if cause.downcast_ref::<CorpusError>().is_some()
            || cause.downcast_ref::<LabelError>().is_some()
            || cause.downcast_ref::<SimilarityError>().is_some()
            || cause.downcast_ref::<std::io::Error>().is_some()
        {
            return 2;
        }
    }
    2
}

fn run(cli: Cli) -> Result<bool> {
    let global = cli.global;
    let output = commands::execute(&global, cli.command)?;
    match &global.out {
        Some(path) => fs::write(path, &output.text).with_context(|| format!("writing {}", path.display()))?,
        None => print!("{}", output.text),
    }
    for (path, text) in &output.extra_files {
        fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    }
    if output.metric_failure {
        eprintln!("warning: some metrics are undefined on this input (reported as NA)");
    }
    Ok(!output.metric_failure)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let pool = match cli.global.jobs {
        Some(0) => {
            eprintln!("error: --jobs must be at least 1");
            return ExitCode::from(2);
        }
        Some(n) => rayon::ThreadPoolBuilder::new().num_threads(n).build(),
        None => rayon::ThreadPoolBuilder::new().build(),
    };
    let pool = match pool {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match pool.install(|| run(cli)) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
