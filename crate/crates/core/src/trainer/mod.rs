//! Training loop: alignment of the corpus, single-language-pair batches,
//! AdamW on the weighted loss, and periodic dev evaluation that keeps the
//! best checkpoint.

mod batching;
mod checkpoint;
mod optim;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::alignment::{
    word_align_filtered, AlignmentError, AlignmentProvider, AlignmentRecords, DictPair, Ibm1Aligner, DEFAULT_THRESHOLD,
};
use crate::corpus::{LangPair, ParallelPair};
use crate::encoder::{Encoder, EncoderConfig, EncoderError, ModelFile, TokenizedSentence, Tokenizer};
use crate::evaluation::{count_words, retrieval_accuracy, EvalError};
use crate::objectives::{evaluate_batch, BatchItem, BatchLosses, LossWeights, ObjectiveError, ObjectiveOptions};

pub use batching::{make_batches, Batch, BatchSampler};
pub use checkpoint::{Checkpoint, MetricsLog, MetricsRow};
pub use optim::{AdamW, AdamWConfig};

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid training config: {field}: {reason}")]
    Config { field: &'static str, reason: String },
    #[error("non-finite loss at step {step}: tr={tr} awp={awp} wtr={wtr}")]
    NonFinite { step: usize, tr: f64, awp: f64, wtr: f64 },
    #[error(transparent)]
    Alignment(#[from] AlignmentError),
    #[error(transparent)]
    Encoder(#[from] EncoderError),
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("checkpoint format: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProviderKind {
    Gold,
    Ibm1,
    File,
}

/// Encoder size and tokenizer settings; the vocabulary size and language
/// count are filled in from the corpus.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelShape {
    pub model_dim: usize,
    pub layers: usize,
    pub heads: usize,
    pub ffn_dim: usize,
    pub max_seq_len: usize,
    /// Words longer than this many characters become two tokens.
    pub split_chars: usize,
}

impl Default for ModelShape {
    fn default() -> Self {
        Self { model_dim: 64, layers: 2, heads: 4, ffn_dim: 128, max_seq_len: 32, split_chars: 8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub steps: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub eval_every: usize,
    pub weights: LossWeights,
    pub seed: u64,
    pub provider: ProviderKind,
    pub ibm1_iterations: usize,
    pub threshold: f64,
    pub use_language_embedding: bool,
    pub model: ModelShape,
    pub objectives: ObjectiveOptions,
    pub optimizer: AdamWConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            steps: 1000,
            batch_size: 64,
            lr: 5e-5,
            eval_every: 200,
            weights: LossWeights::default(),
            seed: 0,
            provider: ProviderKind::Gold,
            ibm1_iterations: 20,
            threshold: DEFAULT_THRESHOLD,
            use_language_embedding: false,
            model: ModelShape::default(),
            objectives: ObjectiveOptions::default(),
            optimizer: AdamWConfig::default(),
        }
    }
}

impl TrainConfig {
    /// `steps = 0` is allowed and returns the initial model.
    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |field, reason: String| Err(TrainError::Config { field, reason });
        if self.eval_every == 0 {
            return bad("eval_every", "must be at least 1".into());
        }
        if self.steps > 0 && self.steps < self.eval_every {
            return bad("steps", format!("{} is below eval_every {}", self.steps, self.eval_every));
        }
        if self.batch_size < 2 {
            return bad("batch_size", format!("{} < 2", self.batch_size));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad("lr", format!("{} is not a positive number", self.lr));
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return bad("threshold", format!("{} outside [0, 1]", self.threshold));
        }
        if self.provider == ProviderKind::Ibm1 && self.ibm1_iterations == 0 {
            return bad("ibm1_iterations", "must be at least 1".into());
        }
        if self.model.split_chars == 0 {
            return bad("model.split_chars", "must be at least 1".into());
        }
        self.weights.validate().map_err(|e| TrainError::Config { field: "weights", reason: e.to_string() })?;
        Ok(())
    }

    pub fn encoder_config(&self, vocab_size: usize, language_count: usize) -> EncoderConfig {
        EncoderConfig {
            model_dim: self.model.model_dim,
            layers: self.model.layers,
            heads: self.model.heads,
            ffn_dim: self.model.ffn_dim,
            max_seq_len: self.model.max_seq_len,
            vocab_size,
            use_language_embedding: self.use_language_embedding,
            language_count,
            ..EncoderConfig::default()
        }
    }
}

/// Filtered dictionaries for every pair from the configured provider.
pub fn align_corpus(
    config: &TrainConfig,
    pairs: &[ParallelPair],
    records: Option<&AlignmentRecords>,
) -> Result<Vec<DictPair>, TrainError> {
    let aligner;
    let provider = match config.provider {
        ProviderKind::Gold => AlignmentProvider::Gold,
        ProviderKind::Ibm1 => {
            aligner = Ibm1Aligner::train(pairs, config.ibm1_iterations)?;
            AlignmentProvider::Ibm1(&aligner)
        }
        ProviderKind::File => AlignmentProvider::File(
            records.ok_or(TrainError::Config { field: "provider", reason: "file provider needs an alignment file".into() })?,
        ),
    };
    Ok(pairs.iter().map(|p| word_align_filtered(p, provider, config.threshold)).collect::<Result<_, _>>()?)
}

/// Tokenized dev pairs grouped by language pair.
pub struct DevSet {
    groups: BTreeMap<LangPair, (Vec<TokenizedSentence>, Vec<TokenizedSentence>)>,
}

impl DevSet {
    pub fn new(tokenizer: &Tokenizer, pairs: &[ParallelPair]) -> Result<Self, TrainError> {
        let mut groups: BTreeMap<LangPair, (Vec<_>, Vec<_>)> = BTreeMap::new();
        for p in pairs {
            let g = groups.entry(p.lang_pair()).or_default();
            g.0.push(tokenizer.tokenize(&p.src)?);
            g.1.push(tokenizer.tokenize(&p.tgt)?);
        }
        groups.retain(|_, g| g.0.len() >= 2);
        if groups.is_empty() {
            return Err(TrainError::Config { field: "dev", reason: "need a language pair with at least 2 dev pairs".into() });
        }
        Ok(Self { groups })
    }

    /// Two-direction retrieval accuracy per language pair.
    pub fn accuracy_by_pair(&self, encoder: &Encoder) -> Result<BTreeMap<LangPair, f64>, TrainError> {
        let mut out = BTreeMap::new();
        for (lp, (src, tgt)) in &self.groups {
            let a = encoder.embed_all(src)?;
            let b = encoder.embed_all(tgt)?;
            out.insert(*lp, retrieval_accuracy(&a, &b)?.mean);
        }
        Ok(out)
    }

    /// Mean over language pairs of [`accuracy_by_pair`](Self::accuracy_by_pair).
    pub fn similarity_search(&self, encoder: &Encoder) -> Result<(f64, BTreeMap<LangPair, f64>), TrainError> {
        let by_pair = self.accuracy_by_pair(encoder)?;
        let mean = by_pair.values().sum::<f64>() / by_pair.len() as f64;
        Ok((mean, by_pair))
    }
}

/// Dev similarity-search accuracy: nearest-neighbour translation retrieval
/// averaged over both directions, then over language pairs.
pub fn dev_similarity_search(encoder: &Encoder, tokenizer: &Tokenizer, dev: &[ParallelPair]) -> Result<f64, TrainError> {
    Ok(DevSet::new(tokenizer, dev)?.similarity_search(encoder)?.0)
}

pub struct TrainOutcome {
    pub best: Checkpoint,
    pub log: MetricsLog,
}

pub fn train(
    config: &TrainConfig,
    train_pairs: &[ParallelPair],
    dev: &[ParallelPair],
    records: Option<&AlignmentRecords>,
) -> Result<TrainOutcome, TrainError> {
    train_with_progress(config, train_pairs, dev, records, |_| {})
}

/// [`train`] with a callback invoked after every logged evaluation.
pub fn train_with_progress(
    config: &TrainConfig,
    train_pairs: &[ParallelPair],
    dev: &[ParallelPair],
    records: Option<&AlignmentRecords>,
    mut progress: impl FnMut(&MetricsRow),
) -> Result<TrainOutcome, TrainError> {
    config.validate()?;
    let dicts = align_corpus(config, train_pairs, records)?;

    let words = train_pairs.iter().chain(dev).flat_map(|p| p.src.words.iter().chain(&p.tgt.words));
    let tokenizer = Tokenizer::build(words.map(String::as_str), config.model.split_chars, config.model.max_seq_len);
    let tokens: Vec<(TokenizedSentence, TokenizedSentence)> = train_pairs
        .iter()
        .map(|p| Ok((tokenizer.tokenize(&p.src)?, tokenizer.tokenize(&p.tgt)?)))
        .collect::<Result<_, EncoderError>>()?;
    let language_count =
        train_pairs.iter().chain(dev).flat_map(|p| [p.src.lang.index(), p.tgt.lang.index()]).max().map_or(1, |m| m + 1);

    let mut by_pair: BTreeMap<LangPair, Vec<usize>> = BTreeMap::new();
    for (i, p) in train_pairs.iter().enumerate() {
        by_pair.entry(p.lang_pair()).or_default().push(i);
    }
    let sizes = by_pair.iter().map(|(k, v)| (*k, v.len())).collect();
    let sampler = BatchSampler::new(&sizes, config.batch_size, config.seed)?;
    let dev_set = DevSet::new(&tokenizer, dev)?;

    let mut encoder = Encoder::new(config.encoder_config(tokenizer.vocab_size(), language_count), config.seed)?;
    let mut optimizer = AdamW::new(&encoder.params, config.optimizer);
    let lexicon = count_words(train_pairs);

    let batch_losses = |encoder: &Encoder, t: usize, grads: Option<&mut _>, skip: bool| -> Result<BatchLosses, TrainError> {
        let batch = sampler.batch(t);
        let members = &by_pair[&batch.lang_pair];
        let items: Vec<BatchItem<'_>> = batch
            .indices
            .iter()
            .map(|&i| {
                let k = members[i];
                BatchItem { src: &tokens[k].0, tgt: &tokens[k].1, dicts: &dicts[k] }
            })
            .collect();
        let opts = ObjectiveOptions { skip_unweighted: skip, ..config.objectives };
        let losses = evaluate_batch(encoder, &items, config.weights, opts, grads).map_err(|e| match e {
            ObjectiveError::NonFinite { .. } => TrainError::NonFinite { step: t, tr: f64::NAN, awp: f64::NAN, wtr: f64::NAN },
            other => other.into(),
        })?;
        Ok(losses)
    };
    let check = |step: usize, l: &BatchLosses| {
        if [l.tr, l.awp, l.wtr, l.total].iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(TrainError::NonFinite { step, tr: l.tr, awp: l.awp, wtr: l.wtr })
        }
    };

    let mut log = MetricsLog::default();
    let initial = batch_losses(&encoder, 0, None, false).map_err(|e| with_step(e, 0))?;
    check(0, &initial)?;
    let (dev_metric, dev_by_pair) = dev_set.similarity_search(&encoder)?;
    let row = MetricsRow { step: 0, tr: initial.tr, awp: initial.awp, wtr: initial.wtr, total: initial.total, dev_metric };
    progress(&row);
    log.rows.push(row);
    let mut best = (0, dev_metric, dev_by_pair, encoder.params.clone());

    for step in 1..=config.steps {
        let logged = step % config.eval_every == 0 || step == config.steps;
        let mut grads = encoder.params.zeros_like();
        let losses = batch_losses(&encoder, step - 1, Some(&mut grads), !logged).map_err(|e| with_step(e, step))?;
        check(step, &losses)?;
        optimizer.update(&mut encoder.params, &grads, config.lr);
        if !encoder.params.is_finite() {
            return Err(TrainError::NonFinite { step, tr: losses.tr, awp: losses.awp, wtr: losses.wtr });
        }
        if logged {
            let (dev_metric, dev_by_pair) = dev_set.similarity_search(&encoder)?;
            let row = MetricsRow { step, tr: losses.tr, awp: losses.awp, wtr: losses.wtr, total: losses.total, dev_metric };
            progress(&row);
            log.rows.push(row);
            if dev_metric > best.1 {
                best = (step, dev_metric, dev_by_pair, encoder.params.clone());
            }
        }
    }

    let (step, dev_metric, dev_by_pair, params) = best;
    let best_encoder = Encoder::from_params(encoder.config.clone(), params)?;
    let best = Checkpoint {
        step,
        dev_metric,
        dev_by_pair: dev_by_pair.into_iter().collect(),
        model: ModelFile::new(&best_encoder, &tokenizer),
        lexicon,
        train_config: config.clone(),
    };
    Ok(TrainOutcome { best, log })
}

fn with_step(e: TrainError, step: usize) -> TrainError {
    match e {
        TrainError::NonFinite { tr, awp, wtr, .. } => TrainError::NonFinite { step, tr, awp, wtr },
        other => other,
    }
}
