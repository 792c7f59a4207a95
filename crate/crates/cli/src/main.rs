//! `xlse`: generate corpora, align, train, evaluate and export embeddings.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 missing input file,
//! 3 invalid configuration or arguments.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use xlse_core::objectives::LossWeights;
use xlse_core::trainer::ProviderKind;

use crate::config::{Overrides, RunConfig};
use crate::error::CliError;

#[derive(Parser)]
#[command(name = "xlse", version, about = "Word-aligned cross-lingual sentence embeddings")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic parallel corpus and split it into train and dev files
    GenCorpus {
        #[command(flatten)]
        common: Common,
        /// Output directory [default: the config's out_dir]
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write filtered word alignments for a corpus file
    Align {
        #[command(flatten)]
        common: Common,
        /// Parallel corpus file
        #[arg(long)]
        corpus: PathBuf,
        /// Existing alignment file, read by the file provider
        #[arg(long)]
        alignments: Option<PathBuf>,
        /// Output alignment file [default: <out_dir>/alignments.tsv]
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train an encoder and keep the checkpoint with the best dev accuracy
    Train {
        #[command(flatten)]
        common: Common,
        /// Directory holding train.tsv and dev.tsv [default: generate from the config]
        #[arg(long)]
        corpus: Option<PathBuf>,
        /// Alignment file, read by the file provider
        #[arg(long)]
        alignments: Option<PathBuf>,
        /// Output directory [default: the config's out_dir]
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate a checkpoint on a corpus file
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: PathBuf,
        /// Parallel corpus file to evaluate on
        #[arg(long)]
        corpus: PathBuf,
        /// Report file [default: <out_dir>/report.txt]
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Project word input embeddings of a checkpoint to two dimensions
    ExportEmbeddings {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: PathBuf,
        /// Number of words, split across languages [default: the config's export_words]
        #[arg(long)]
        n_words: Option<usize>,
        /// Projection file [default: <out_dir>/projection.tsv]
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Switch {
    On,
    Off,
}

/// Run configuration and the fields the command line may override.
#[derive(Args)]
struct Common {
    /// Run configuration (TOML)
    #[arg(long)]
    config: Option<PathBuf>,
    /// Run seed; also seeds training and evaluation
    #[arg(long)]
    seed: Option<u64>,
    /// Word alignment provider
    #[arg(long, value_enum)]
    provider: Option<Provider>,
    /// Alignment confidence threshold [default: 0.9]
    #[arg(long)]
    threshold: Option<f64>,
    /// Loss weights of ranking, word prediction and word ranking [default: 0.8,0.1,0.1]
    #[arg(long, value_name = "A,B,G", value_parser = parse_weights)]
    weights: Option<LossWeights>,
    /// Language embeddings in the encoder input [default: off]
    #[arg(long, value_enum)]
    lang_embedding: Option<Switch>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Provider {
    Gold,
    Ibm1,
    File,
}

fn parse_weights(s: &str) -> Result<LossWeights, String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("`{p}`: {e}")))
        .collect::<Result<_, _>>()?;
    match parts[..] {
        [a, b, g] => LossWeights::new(a, b, g).map_err(|e| e.to_string()),
        _ => Err(format!("expected three comma-separated weights, got {}", parts.len())),
    }
}

impl Common {
    fn load(&self) -> Result<RunConfig, CliError> {
        let overrides = Overrides {
            seed: self.seed,
            provider: self.provider.map(|p| match p {
                Provider::Gold => ProviderKind::Gold,
                Provider::Ibm1 => ProviderKind::Ibm1,
                Provider::File => ProviderKind::File,
            }),
            threshold: self.threshold,
            weights: self.weights,
            lang_embedding: self.lang_embedding.map(|s| matches!(s, Switch::On)),
        };
        RunConfig::load(self.config.as_deref(), &overrides)
    }
}

fn with_alignments(mut config: RunConfig, path: Option<PathBuf>) -> RunConfig {
    if path.is_some() {
        config.alignments = path;
    }
    config
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::GenCorpus { common, out } => {
            let config = common.load()?;
            let out = out.unwrap_or_else(|| config.out_dir.clone());
            commands::gen_corpus(&config, &out)
        }
        Command::Align { common, corpus, alignments, out } => {
            let config = with_alignments(common.load()?, alignments);
            let out = out.unwrap_or_else(|| commands::default_output(&config, "alignments.tsv"));
            commands::align(&config, &corpus, &out)
        }
        Command::Train { common, corpus, alignments, out } => {
            let config = with_alignments(common.load()?, alignments);
            let out = out.unwrap_or_else(|| config.out_dir.clone());
            commands::train(&config, corpus.as_deref(), &out)
        }
        Command::Eval { common, checkpoint, corpus, out } => {
            let config = common.load()?;
            let out = out.unwrap_or_else(|| commands::default_output(&config, "report.txt"));
            commands::eval(&config, &checkpoint, &corpus, &out)
        }
        Command::ExportEmbeddings { common, checkpoint, n_words, out } => {
            let config = common.load()?;
            let n = n_words.unwrap_or(config.export_words);
            if n == 0 {
                return Err(CliError::Config("--n-words must be at least 1".into()));
            }
            let out = out.unwrap_or_else(|| commands::default_output(&config, "projection.tsv"));
            commands::export_embeddings(&checkpoint, n, &out)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
