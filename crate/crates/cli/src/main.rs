//! Pipeline entry point: ingest -> featurize -> train/search -> evaluate ->
//! analyze, driven by a flat config file with flag overrides.
//!
//! Exit codes: 0 success, 2 usage/config, 3 data error, 4 numerical failure.

mod config;
mod manifest;
mod stages;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use emoflow_core::nn::InitScheme;
use emoflow_core::Error;

use config::RunConfig;
use stages::{BaselineMethod, ClusterArgs, TrainArgs};

#[derive(Parser)]
#[command(name = "emoflow", version, about = "Emotion-flow modeling for book success prediction")]
struct Cli {
    /// Flat key=value config file; command-line flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Directory of <id>.txt book files.
    #[arg(long, global = true)]
    corpus_dir: Option<PathBuf>,

    /// Metadata CSV with header id,genre,label.
    #[arg(long, global = true)]
    metadata: Option<PathBuf>,

    /// NRC lexicon file (word<TAB>category<TAB>flag).
    #[arg(long, global = true)]
    lexicon: Option<PathBuf>,

    /// Output directory for caches, checkpoints, reports, and manifests.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,

    /// Number of chunks per book.
    #[arg(long, global = true)]
    chunks: Option<usize>,

    /// Book content to featurize: first1k | all.
    #[arg(long, global = true)]
    content: Option<String>,

    /// Task mode: st | mt.
    #[arg(long, global = true)]
    task: Option<String>,

    /// Master seed for splits, initialization, dropout, and search.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Random-search trial count.
    #[arg(long, global = true)]
    trials: Option<usize>,

    /// Lexicon counting mode: occurrences | binary_per_sentence.
    #[arg(long, global = true)]
    presence: Option<String>,

    /// Epoch cap for training runs.
    #[arg(long, global = true)]
    max_epochs: Option<usize>,

    /// Early-stopping patience in epochs.
    #[arg(long, global = true)]
    patience: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate the corpus and write an ingest summary.
    Ingest,
    /// Extract chunk emotion features into the on-disk cache.
    Featurize,
    /// Train one explicit configuration and evaluate it on the test split.
    Train(TrainFlags),
    /// Random hyperparameter search with a resumable trial ledger.
    Search,
    /// Run a classical baseline (majority | svm).
    Baseline(BaselineFlags),
    /// Evaluate a saved checkpoint on the test split.
    Evaluate(CheckpointFlags),
    /// McNemar test between two saved evaluation reports.
    Compare(CompareFlags),
    /// Attention heatmap, feature ranking, and emotion statistics.
    Analyze(CheckpointFlags),
    /// K-means clustering of per-book joy trajectories.
    Cluster(ClusterFlags),
    /// Run the full comparison grid and emit the long-format table CSV.
    ReproduceTable1,
}

#[derive(Args)]
struct TrainFlags {
    #[arg(long, default_value_t = 1e-3)]
    learning_rate: f64,
    #[arg(long, default_value_t = 0.2)]
    dropout: f64,
    #[arg(long, default_value_t = 64)]
    hidden_units: usize,
    #[arg(long, default_value_t = 64)]
    attention_units: usize,
    #[arg(long, default_value_t = 4)]
    batch_size: usize,
    /// glorot_uniform | lecun_uniform
    #[arg(long, default_value = "glorot_uniform")]
    init: String,
}

#[derive(Args)]
struct BaselineFlags {
    /// majority | svm
    #[arg(long)]
    method: String,
}

#[derive(Args)]
struct CheckpointFlags {
    #[arg(long)]
    checkpoint: PathBuf,
}

#[derive(Args)]
struct CompareFlags {
    /// First evaluation report (JSON).
    #[arg(long)]
    a: PathBuf,
    /// Second evaluation report (JSON).
    #[arg(long)]
    b: PathBuf,
}

#[derive(Args)]
struct ClusterFlags {
    #[arg(long, default_value_t = 100)]
    k: usize,
    #[arg(long, default_value_t = 20)]
    min_books: usize,
    #[arg(long, default_value_t = 5)]
    window: usize,
}

fn resolve_config(cli: &Cli) -> Result<RunConfig, Error> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &cli.config {
        cfg.load_file(path)?;
    }
    if let Some(v) = &cli.corpus_dir {
        cfg.corpus_dir = Some(v.clone());
    }
    if let Some(v) = &cli.metadata {
        cfg.metadata = Some(v.clone());
    }
    if let Some(v) = &cli.lexicon {
        cfg.lexicon = Some(v.clone());
    }
    if let Some(v) = &cli.out_dir {
        cfg.out_dir = v.clone();
    }
    if let Some(v) = cli.chunks {
        cfg.chunks = v;
    }
    if let Some(v) = &cli.content {
        cfg.content = emoflow_core::features::ContentMode::from_name(v)
            .ok_or_else(|| Error::Config(format!("content must be first1k|all, got {v:?}")))?;
    }
    if let Some(v) = &cli.task {
        cfg.task = emoflow_core::nn::TaskKind::from_name(v)
            .ok_or_else(|| Error::Config(format!("task must be st|mt, got {v:?}")))?;
    }
    if let Some(v) = cli.seed {
        cfg.seed = v;
    }
    if let Some(v) = cli.trials {
        cfg.trials = v;
    }
    if let Some(v) = &cli.presence {
        cfg.presence = emoflow_core::lexicon::PresenceMode::from_name(v)
            .ok_or_else(|| Error::Config(format!("presence must be occurrences|binary_per_sentence, got {v:?}")))?;
    }
    if let Some(v) = cli.max_epochs {
        cfg.max_epochs = v;
    }
    if let Some(v) = cli.patience {
        cfg.patience = v;
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<(), Error> {
    let cfg = resolve_config(cli)?;
    match &cli.command {
        Command::Ingest => stages::cmd_ingest(&cfg),
        Command::Featurize => stages::cmd_featurize(&cfg),
        Command::Train(flags) => {
            let init = InitScheme::from_name(&flags.init).ok_or_else(|| {
                Error::Config(format!("init must be glorot_uniform|lecun_uniform, got {:?}", flags.init))
            })?;
            stages::cmd_train(
                &cfg,
                &TrainArgs {
                    learning_rate: flags.learning_rate,
                    dropout: flags.dropout,
                    hidden_units: flags.hidden_units,
                    attention_units: flags.attention_units,
                    batch_size: flags.batch_size,
                    init,
                },
            )
        }
        Command::Search => stages::cmd_search(&cfg),
        Command::Baseline(flags) => {
            let method = match flags.method.as_str() {
                "majority" => BaselineMethod::Majority,
                "svm" => BaselineMethod::Svm,
                other => return Err(Error::Config(format!("method must be majority|svm, got {other:?}"))),
            };
            stages::cmd_baseline(&cfg, method)
        }
        Command::Evaluate(flags) => stages::cmd_evaluate(&cfg, &flags.checkpoint),
        Command::Compare(flags) => stages::cmd_compare(&cfg, &flags.a, &flags.b),
        Command::Analyze(flags) => stages::cmd_analyze(&cfg, &flags.checkpoint),
        Command::Cluster(flags) => stages::cmd_cluster(
            &cfg,
            &ClusterArgs { k: flags.k, min_books: flags.min_books, window: flags.window },
        ),
        Command::ReproduceTable1 => stages::cmd_reproduce_table1(&cfg),
    }
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let code = match e {
                Error::Config(_) => 2,
                Error::Io { .. } | Error::Parse { .. } | Error::Data(_) => 3,
                Error::Numerical(_) => 4,
            };
            ExitCode::from(code)
        }
    }
}
