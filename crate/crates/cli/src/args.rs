use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "divtopic", version, about = "Diversified topic models: train, select, evaluate and export")]
pub struct Cli {
    /// Worker threads for document-parallel stages. 1 runs sequentially and
    /// is bit-reproducible; 0 uses every core.
    #[arg(long, global = true, default_value_t = 1)]
    pub threads: usize,

    /// File of `key = value` lines (or a run manifest) supplying flag
    /// values; flags given on the command line win.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Where to write the run manifest (defaults to a file next to the
    /// primary output).
    #[arg(long, global = true, value_name = "FILE")]
    pub manifest: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Load a bag-of-words corpus, drop empty documents and split off
    /// held-out documents.
    Ingest(IngestArgs),
    /// Train a topic model.
    Train(TrainArgs),
    /// Pick a summary subset of a model's topics.
    Select(SelectArgs),
    /// PMI coherence or held-out perplexity of a topic set.
    Eval(EvalArgs),
    /// Write a table of topics with their top words.
    ExportTopics(ExportTopicsArgs),
    /// Write the topic similarity graph as edge and node tables.
    ExportNetwork(ExportNetworkArgs),
    /// Validate a training trace and print its rows.
    Report(ReportArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Ingest(_) => "ingest",
            Command::Train(_) => "train",
            Command::Select(_) => "select",
            Command::Eval(_) => "eval",
            Command::ExportTopics(_) => "export-topics",
            Command::ExportNetwork(_) => "export-network",
            Command::Report(_) => "report",
        }
    }
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Docs file: D, W, NNZ header lines then `docID wordID count` triples.
    #[arg(long)]
    pub docs: PathBuf,
    /// One term per line.
    #[arg(long)]
    pub vocab: PathBuf,
    /// Number of documents to hold out for perplexity.
    #[arg(long, default_value_t = 0)]
    pub holdout_docs: usize,
    /// Share of each held-out document's tokens used for fold-in.
    #[arg(long, default_value_t = 0.8)]
    pub word_fraction: f64,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory for corpus.docs, vocab.txt and holdout.txt.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    Plsa,
    Lda,
    Divplsa,
    Divlda,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long, value_enum)]
    pub model: ModelArg,
    #[arg(long)]
    pub docs: PathBuf,
    #[arg(long)]
    pub vocab: PathBuf,
    /// Output directory for model.txt and trace.csv.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,

    /// Topic count (plsa, lda).
    #[arg(long)]
    pub topics: Option<usize>,
    /// Starting topic count (divplsa, divlda).
    #[arg(long)]
    pub start_topics: Option<usize>,
    /// Reinforcement exponent of the topic walk.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Probability that the walk leaves the current topic.
    #[arg(long)]
    pub walk_alpha: Option<f64>,
    /// Iterations (divplsa) or sweeps (divlda) before the walk starts.
    #[arg(long)]
    pub warmup: Option<usize>,
    #[arg(long)]
    pub refresh_every: Option<usize>,
    /// Unchanged refreshes needed to stop.
    #[arg(long)]
    pub patience: Option<usize>,
    /// EM iteration cap (plsa, divplsa).
    #[arg(long)]
    pub iters: Option<usize>,
    /// Relative likelihood tolerance (plsa, divplsa).
    #[arg(long)]
    pub tol: Option<f64>,
    /// Gibbs sweeps (lda, divlda).
    #[arg(long)]
    pub sweeps: Option<usize>,
    /// Sweeps before alpha optimization (lda).
    #[arg(long)]
    pub burn_in: Option<usize>,
    /// Topic-word smoothing (lda, divlda).
    #[arg(long)]
    pub beta: Option<f64>,
    /// Initial symmetric document-topic concentration (lda, divlda).
    #[arg(long)]
    pub alpha0: Option<f64>,
    /// Keep the document-topic concentration fixed (lda, divlda).
    #[arg(long)]
    pub fixed_alpha: bool,
    /// Soft-size activity threshold (divplsa).
    #[arg(long)]
    pub activity_threshold: Option<f64>,
    /// Organic walk normalization: with-self or neighbors (divplsa, divlda).
    #[arg(long)]
    pub organic_norm: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Topk,
    Mmr,
    Divrank,
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, value_enum)]
    pub method: Method,
    #[arg(long)]
    pub k: usize,
    /// MMR relevance weight (default 0.5) or DivRank walk weight (default
    /// 0.9). Comma-separated values with --grid.
    #[arg(long)]
    pub lambda: Option<String>,
    /// DivRank organic leaving probability (default 0.25). Comma-separated
    /// values with --grid.
    #[arg(long)]
    pub alpha_dr: Option<String>,
    /// DivRank variant: cumulative or pointwise.
    #[arg(long)]
    pub variant: Option<String>,
    /// Run every combination of the listed --lambda/--alpha-dr values; --out
    /// is then a directory.
    #[arg(long)]
    pub grid: bool,
    /// Vocabulary for the top-word column (word ids are printed without it).
    #[arg(long)]
    pub vocab: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Metric {
    Pmi,
    Perplexity,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long, value_enum)]
    pub metric: Metric,
    #[arg(long)]
    pub model: PathBuf,
    /// Ranking CSV; all topics are used without it.
    #[arg(long)]
    pub selection: Option<PathBuf>,
    /// Reference docs file for PMI document frequencies.
    #[arg(long)]
    pub reference: Option<PathBuf>,
    /// Vocabulary of the reference corpus.
    #[arg(long)]
    pub reference_vocab: Option<PathBuf>,
    /// Held-out split file written by `ingest`.
    #[arg(long)]
    pub holdout: Option<PathBuf>,
    /// Top words per topic for PMI.
    #[arg(long, default_value_t = 10)]
    pub top_n: usize,
    /// zero:EPS replaces zero counts, add:EPS adds to every joint count.
    #[arg(long, default_value = "zero:1")]
    pub smoothing: String,
    #[arg(long, default_value_t = 50)]
    pub fold_in_iters: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ExportTopicsArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Ranking CSV; all topics by size without it.
    #[arg(long)]
    pub ranking: Option<PathBuf>,
    #[arg(long)]
    pub vocab: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    pub top_words: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ExportNetworkArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub vocab: Option<PathBuf>,
    /// Edges at or below this weight are left out.
    #[arg(long, default_value_t = 0.0)]
    pub min_weight: f64,
    /// Output directory for edges.csv and nodes.csv.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long)]
    pub trace: PathBuf,
    /// Write the validated rows here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}
