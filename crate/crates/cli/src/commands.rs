use std::path::{Path, PathBuf};

use xlse_core::alignment::{load_alignments, raw_links, save_alignments, AlignmentProvider, AlignmentRecords, Ibm1Aligner};
use xlse_core::corpus::{generate_corpus, load_parallel, save_parallel, split_corpus, Link, ParallelPair};
use xlse_core::evaluation::{evaluate, export_projection, select_words, word_vector};
use xlse_core::trainer::{train_with_progress, Checkpoint, ProviderKind};

use crate::config::RunConfig;
use crate::error::{require_file, CliError};

pub const TRAIN_FILE: &str = "train.tsv";
pub const DEV_FILE: &str = "dev.tsv";
pub const CHECKPOINT_FILE: &str = "checkpoint.json";
pub const METRICS_FILE: &str = "metrics.tsv";

fn create_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Config(format!("cannot create {}: {e}", dir.display())))
}

fn create_parent(file: &Path) -> Result<(), CliError> {
    match file.parent() {
        Some(p) if !p.as_os_str().is_empty() => create_dir(p),
        _ => Ok(()),
    }
}

fn load_corpus(path: &Path) -> Result<Vec<ParallelPair>, CliError> {
    require_file(path)?;
    Ok(load_parallel(path)?)
}

/// Generated corpus split into (train, dev).
pub fn build_corpus(config: &RunConfig) -> Result<(Vec<ParallelPair>, Vec<ParallelPair>), CliError> {
    let all: Vec<ParallelPair> = generate_corpus(&config.corpus, config.seed)?.into_values().flatten().collect();
    Ok(split_corpus(&all, config.dev_fraction)?)
}

pub fn gen_corpus(config: &RunConfig, out: &Path) -> Result<(), CliError> {
    let (train, dev) = build_corpus(config)?;
    create_dir(out)?;
    save_parallel(&train, out.join(TRAIN_FILE))?;
    save_parallel(&dev, out.join(DEV_FILE))?;
    config.record(out)?;
    eprintln!("wrote {} train and {} dev pairs to {}", train.len(), dev.len(), out.display());
    Ok(())
}

fn alignment_records(config: &RunConfig) -> Result<Option<AlignmentRecords>, CliError> {
    if config.train.provider != ProviderKind::File {
        return Ok(None);
    }
    let path = config
        .alignments
        .as_ref()
        .ok_or_else(|| CliError::Config("the file provider needs `alignments` or --alignments".into()))?;
    require_file(path)?;
    Ok(Some(load_alignments(path)?))
}

/// Writes the links of every pair that survive the threshold, both directions.
pub fn align(config: &RunConfig, corpus: &Path, out: &Path) -> Result<(), CliError> {
    let pairs = load_corpus(corpus)?;
    let records = alignment_records(config)?;
    let aligner;
    let provider = match config.train.provider {
        ProviderKind::Gold => AlignmentProvider::Gold,
        ProviderKind::Ibm1 => {
            aligner = Ibm1Aligner::train(&pairs, config.train.ibm1_iterations)?;
            AlignmentProvider::Ibm1(&aligner)
        }
        ProviderKind::File => AlignmentProvider::File(records.as_ref().expect("checked above")),
    };
    let tau = config.train.threshold;
    let keep = |links: Vec<Link>| links.into_iter().filter(|l| l.score >= tau).collect::<Vec<_>>();
    let mut result = AlignmentRecords::new();
    for p in &pairs {
        let (fwd, bwd) = raw_links(p, provider)?;
        result.insert(p.id, p.lang_pair(), keep(fwd));
        result.insert(p.id, p.lang_pair().reversed(), keep(bwd));
    }
    create_parent(out)?;
    save_alignments(&result, out)?;
    eprintln!("aligned {} pairs into {}", pairs.len(), out.display());
    Ok(())
}

/// Trains on `corpus_dir` (train and dev files) or on a freshly generated
/// corpus, then writes the best checkpoint, the metrics log and the config.
pub fn train(config: &RunConfig, corpus_dir: Option<&Path>, out: &Path) -> Result<(), CliError> {
    let (train_set, dev) = match corpus_dir {
        Some(dir) => (load_corpus(&dir.join(TRAIN_FILE))?, load_corpus(&dir.join(DEV_FILE))?),
        None => build_corpus(config)?,
    };
    let records = alignment_records(config)?;
    create_dir(out)?;
    let outcome = train_with_progress(&config.train, &train_set, &dev, records.as_ref(), |row| {
        eprintln!(
            "step {}\ttr {:.4}\tawp {:.4}\twtr {:.4}\tdev {:.4}",
            row.step, row.tr, row.awp, row.wtr, row.dev_metric
        )
    })?;
    outcome.best.save(&out.join(CHECKPOINT_FILE))?;
    outcome.log.save(&out.join(METRICS_FILE))?;
    config.record(out)?;
    eprintln!("best dev accuracy {:.4} at step {}", outcome.best.dev_metric, outcome.best.step);
    Ok(())
}

fn load_checkpoint(path: &Path) -> Result<Checkpoint, CliError> {
    require_file(path)?;
    Ok(Checkpoint::load(path)?)
}

pub fn eval(config: &RunConfig, checkpoint: &Path, corpus: &Path, report: &Path) -> Result<(), CliError> {
    let ckpt = load_checkpoint(checkpoint)?;
    let pairs = load_corpus(corpus)?;
    let (encoder, tokenizer) = ckpt.encoder()?;
    let result = evaluate(&encoder, &tokenizer, &pairs, &config.eval)?;
    create_parent(report)?;
    result.save(report)?;
    if let Some(acc) = result.retrieval_macro() {
        eprintln!("retrieval accuracy {acc:.4}");
    }
    Ok(())
}

/// Projects the input embeddings of the most frequent training words of each
/// language to two dimensions.
pub fn export_embeddings(checkpoint: &Path, n_words: usize, out: &Path) -> Result<(), CliError> {
    let ckpt = load_checkpoint(checkpoint)?;
    let (encoder, tokenizer) = ckpt.encoder()?;
    let words: Vec<_> = select_words(&ckpt.lexicon, n_words)
        .into_iter()
        .filter_map(|w| word_vector(&encoder, &tokenizer, &w.word).map(|v| (w.word, w.lang, v)))
        .collect();
    create_parent(out)?;
    export_projection(&words, out)?;
    eprintln!("projected {} words into {}", words.len(), out.display());
    Ok(())
}

/// `dir/name`, where `dir` is the configured output directory.
pub fn default_output(config: &RunConfig, name: &str) -> PathBuf {
    config.out_dir.join(name)
}
