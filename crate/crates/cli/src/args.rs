use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "kea", version, about = "Knowledge-graph hallucination detection")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// TOML settings file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// summeval, qags_c, wikibio or custom.
    #[arg(long, global = true)]
    pub profile: Option<String>,
    #[arg(long, global = true, value_enum)]
    pub embedder: Option<EmbedderChoice>,
    /// JSON file of canned LLM responses; replaces the HTTP client.
    #[arg(long, global = true)]
    pub llm_fixtures: Option<PathBuf>,
    /// Offline Wikidata/Wikipedia fixture for open-domain runs.
    #[arg(long, global = true)]
    pub wikidata_fixture: Option<PathBuf>,
    /// Response cache directory (defaults to $KEA_CACHE_DIR).
    #[arg(long, global = true)]
    pub cache_dir: Option<PathBuf>,
    /// Overrides the profile's kernel threshold.
    #[arg(long, global = true)]
    pub threshold: Option<f64>,
    #[arg(long, global = true)]
    pub iterations: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmbedderChoice {
    Hash64,
    Http,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Score an output text against a context text or Wikidata.
    Detect(DetectArgs),
    /// Explain a saved verdict or trace.
    Explain(ExplainArgs),
    /// WL kernel between two graph documents.
    Kernel(KernelArgs),
    /// Extract a graph document from text.
    Extract(ExtractArgs),
    /// Run a dataset through detection.
    Bench(BenchArgs),
    /// Re-threshold a verdict log.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    #[arg(long)]
    pub output_file: PathBuf,
    #[arg(long, conflicts_with = "open")]
    pub context_file: Option<PathBuf>,
    /// Ground against Wikidata instead of a context.
    #[arg(long)]
    pub open: bool,
    /// Narrate contradictions when flagged.
    #[arg(long)]
    pub explain: bool,
    /// Exit with status 1 when the output is flagged.
    #[arg(long)]
    pub fail_on_hallucination: bool,
}

#[derive(Debug, Args)]
pub struct ExplainArgs {
    /// Verdict or trace JSON written by `detect`.
    pub trace: PathBuf,
}

#[derive(Debug, Args)]
pub struct KernelArgs {
    pub graph1: PathBuf,
    pub graph2: PathBuf,
    #[arg(long)]
    pub directed: bool,
    /// Include WL feature vectors in the output.
    #[arg(long)]
    pub features: bool,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    #[arg(long)]
    pub text_file: PathBuf,
    /// Extract a second graph from this text in the same call.
    #[arg(long)]
    pub pair_with: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    /// summeval, qags_c, wikibio or generic; defaults to the profile name.
    #[arg(long)]
    pub format: Option<String>,
    /// Directory for report.json, roc.csv, pr.csv and verdicts.jsonl.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 4)]
    pub workers: usize,
    /// Append-only verdict log used to resume interrupted runs.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Field override, e.g. `generated=summary`.
    #[arg(long = "field", value_name = "ROLE=NAME")]
    pub fields: Vec<String>,
    /// Raw annotation range, e.g. `1,5`.
    #[arg(long)]
    pub score_range: Option<String>,
    #[arg(long, conflicts_with = "sample")]
    pub limit: Option<usize>,
    /// Label-stratified random subsample (whole passages for wikibio).
    #[arg(long)]
    pub sample: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub verdicts: PathBuf,
    /// Comma-separated ascending thresholds in [0, 1].
    #[arg(long, conflicts_with = "step")]
    pub grid: Option<String>,
    /// Evenly spaced grid from 0 to 1.
    #[arg(long)]
    pub step: Option<f64>,
    /// Directory for roc.csv and pr.csv.
    #[arg(long)]
    pub out: Option<PathBuf>,
}
