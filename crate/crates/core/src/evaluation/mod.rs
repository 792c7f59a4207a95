//! Retrieval accuracy, bitext mining, similarity correlation and statistics
//! of the input word embeddings, plus a driver that evaluates a model on a
//! dev corpus and writes a key-value report.

mod embedding;
mod metrics;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{mix64, LangPair, ParallelPair, Sentence};
use crate::encoder::{Encoder, EncoderError, Tokenizer};

pub use embedding::{
    aligned_word_cosine, count_words, export_projection, pca_2d, select_words, stats, word_vector, CosineStats, WordCount,
    SAMPLED_WORDS,
};
pub use metrics::{
    average_ranks, best_threshold, cosine_matrix, mine_bitext, mining_candidates, pearson, prf_at_threshold,
    retrieval_accuracy, sts_spearman, MiningCandidate, MiningMode, MiningResult, Prf, RetrievalScores, Threshold,
};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("count mismatch: {left} vs {right}")]
    CountMismatch { left: usize, right: usize },
    #[error("need at least {need} {what}, got {got}")]
    TooFew { what: &'static str, need: usize, got: usize },
    #[error("gold set is empty")]
    EmptyGold,
    #[error("correlation undefined for constant input")]
    ConstantInput,
    #[error("no aligned word pairs to compare")]
    NoLinks,
    #[error("invalid {name}: {reason}")]
    BadParameter { name: &'static str, reason: String },
    #[error(transparent)]
    Encoder(#[from] EncoderError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalOptions {
    pub mining: bool,
    pub mining_k: usize,
    pub mining_mode: MiningMode,
    pub sts: bool,
    pub aligned_cosine: bool,
    pub aligned_pairs: usize,
    pub seed: u64,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            mining: true,
            mining_k: 4,
            mining_mode: MiningMode::Margin,
            sts: true,
            aligned_cosine: true,
            aligned_pairs: SAMPLED_WORDS,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub retrieval: BTreeMap<LangPair, RetrievalScores>,
    /// Per language pair: threshold tuned on one half, scores on the other.
    pub mining: BTreeMap<LangPair, MiningResult>,
    /// Counts pooled over language pairs.
    pub mining_pooled: Option<Prf>,
    pub sts: BTreeMap<LangPair, f64>,
    pub aligned_cosine: BTreeMap<LangPair, CosineStats>,
}

impl EvalReport {
    /// Unweighted mean over language pairs of the two-direction mean.
    pub fn retrieval_macro(&self) -> Option<f64> {
        (!self.retrieval.is_empty())
            .then(|| self.retrieval.values().map(|r| r.mean).sum::<f64>() / self.retrieval.len() as f64)
    }

    /// `key<TAB>value` lines in a fixed order.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (lp, r) in &self.retrieval {
            let _ = writeln!(s, "retrieval.{lp}.src_to_tgt\t{}", r.src_to_tgt);
            let _ = writeln!(s, "retrieval.{lp}.tgt_to_src\t{}", r.tgt_to_src);
            let _ = writeln!(s, "retrieval.{lp}.mean\t{}", r.mean);
        }
        if let Some(m) = self.retrieval_macro() {
            let _ = writeln!(s, "retrieval.macro_mean\t{m}");
        }
        for (lp, m) in &self.mining {
            let _ = writeln!(s, "mining.{lp}.threshold\t{}", m.threshold);
            let _ = writeln!(s, "mining.{lp}.precision\t{}", m.prf.precision);
            let _ = writeln!(s, "mining.{lp}.recall\t{}", m.prf.recall);
            let _ = writeln!(s, "mining.{lp}.f1\t{}", m.prf.f1);
        }
        if let Some(p) = &self.mining_pooled {
            let _ = writeln!(s, "mining.precision\t{}", p.precision);
            let _ = writeln!(s, "mining.recall\t{}", p.recall);
            let _ = writeln!(s, "mining.f1\t{}", p.f1);
        }
        for (lp, rho) in &self.sts {
            let _ = writeln!(s, "sts.{lp}.spearman\t{rho}");
        }
        for (lp, c) in &self.aligned_cosine {
            let _ = writeln!(s, "aligned_cosine.{lp}.mean\t{}", c.mean);
            let _ = writeln!(s, "aligned_cosine.{lp}.std\t{}", c.std);
            let _ = writeln!(s, "aligned_cosine.{lp}.count\t{}", c.count);
        }
        s
    }

    pub fn save(&self, path: &Path) -> Result<(), EvalError> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }
}

/// Sentence vectors of the given sentences.
pub fn embed_sentences<'a>(
    encoder: &Encoder,
    tokenizer: &Tokenizer,
    sentences: impl IntoIterator<Item = &'a Sentence>,
) -> Result<Vec<Vec<f64>>, EvalError> {
    sentences
        .into_iter()
        .map(|s| Ok(encoder.encode_sentence(&tokenizer.tokenize(s)?)?.h_cls))
        .collect()
}

/// Pairs grouped by language pair, in input order within each group.
pub fn group_by_lang_pair(pairs: &[ParallelPair]) -> BTreeMap<LangPair, Vec<ParallelPair>> {
    let mut out: BTreeMap<LangPair, Vec<ParallelPair>> = BTreeMap::new();
    for p in pairs {
        out.entry(p.lang_pair()).or_default().push(p.clone());
    }
    out
}

/// A mining task built from parallel pairs: of every four consecutive
/// pairs, two contribute both sides (gold), one only its source and one only
/// its target.
pub struct MiningTask {
    pub src: Vec<Vec<f64>>,
    pub tgt: Vec<Vec<f64>>,
    pub gold: BTreeSet<(usize, usize)>,
}

pub fn mining_task(src: &[Vec<f64>], tgt: &[Vec<f64>]) -> MiningTask {
    let mut task = MiningTask { src: Vec::new(), tgt: Vec::new(), gold: BTreeSet::new() };
    for i in 0..src.len() {
        match i % 4 {
            0 | 1 => {
                task.gold.insert((task.src.len(), task.tgt.len()));
                task.src.push(src[i].clone());
                task.tgt.push(tgt[i].clone());
            }
            2 => task.src.push(src[i].clone()),
            _ => task.tgt.push(tgt[i].clone()),
        }
    }
    task
}

/// Similarity pairs with known graded relatedness: pair `i` has a fraction
/// `(i mod 6) / 5` of its target words replaced by other words of the same
/// language; the gold score is the fraction of target words left intact.
pub fn synthetic_sts(pairs: &[ParallelPair], seed: u64) -> Vec<(Sentence, Sentence, f64)> {
    let vocab: Vec<String> = pairs
        .iter()
        .flat_map(|p| p.tgt.words.iter().cloned())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    pairs
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let mut rng = ChaCha8Rng::seed_from_u64(mix64(seed ^ mix64(p.id)));
            let level = (i % 6) as f64 / 5.0;
            let len = p.tgt.len();
            let replace = (level * len as f64).round() as usize;
            let mut positions: Vec<usize> = (0..len).collect();
            for k in 0..replace {
                let j = rng.random_range(k..len);
                positions.swap(k, j);
            }
            let mut words = p.tgt.words.clone();
            let mut changed = 0;
            for &pos in &positions[..replace] {
                let alternatives: Vec<&String> = vocab.iter().filter(|w| **w != words[pos]).collect();
                if let Some(w) = alternatives.choose(&mut rng) {
                    words[pos] = (*w).clone();
                    changed += 1;
                }
            }
            let tgt = Sentence { lang: p.tgt.lang, words };
            (p.src.clone(), tgt, 1.0 - changed as f64 / len as f64)
        })
        .collect()
}

/// Evaluates a model on dev pairs, per language pair.
pub fn evaluate(encoder: &Encoder, tokenizer: &Tokenizer, pairs: &[ParallelPair], opts: &EvalOptions) -> Result<EvalReport, EvalError> {
    let mut report = EvalReport {
        retrieval: BTreeMap::new(),
        mining: BTreeMap::new(),
        mining_pooled: None,
        sts: BTreeMap::new(),
        aligned_cosine: BTreeMap::new(),
    };
    let (mut tp, mut predicted, mut gold) = (0, 0, 0);
    for (lp, group) in group_by_lang_pair(pairs) {
        let src = embed_sentences(encoder, tokenizer, group.iter().map(|p| &p.src))?;
        let tgt = embed_sentences(encoder, tokenizer, group.iter().map(|p| &p.tgt))?;
        if group.len() >= 2 {
            report.retrieval.insert(lp, retrieval_accuracy(&src, &tgt)?);
        }
        if opts.mining && group.len() >= 8 {
            let half = group.len() / 2;
            let tune = mining_task(&src[..half], &tgt[..half]);
            let test = mining_task(&src[half..], &tgt[half..]);
            let tuned = mine_bitext(&tune.src, &tune.tgt, &tune.gold, opts.mining_k, opts.mining_mode, Threshold::Optimal)?;
            let result = mine_bitext(
                &test.src,
                &test.tgt,
                &test.gold,
                opts.mining_k,
                opts.mining_mode,
                Threshold::Fixed(tuned.threshold),
            )?;
            tp += result.prf.true_positives;
            predicted += result.prf.predicted;
            gold += result.prf.gold;
            report.mining.insert(lp, result);
        }
        if opts.sts && group.len() >= 3 {
            let items = synthetic_sts(&group, opts.seed);
            let a = embed_sentences(encoder, tokenizer, items.iter().map(|(s, _, _)| s))?;
            let b = embed_sentences(encoder, tokenizer, items.iter().map(|(_, t, _)| t))?;
            let sims: Vec<f64> = a.iter().zip(&b).map(|(x, y)| cosine_matrix(&[x.clone()], &[y.clone()])[0][0]).collect();
            let golds: Vec<f64> = items.iter().map(|(_, _, g)| *g).collect();
            match sts_spearman(&sims, &golds) {
                Ok(rho) => {
                    report.sts.insert(lp, rho);
                }
                Err(EvalError::ConstantInput) => {}
                Err(e) => return Err(e),
            }
        }
        if opts.aligned_cosine {
            match aligned_word_cosine(encoder, tokenizer, &group, opts.aligned_pairs) {
                Ok(c) => {
                    report.aligned_cosine.insert(lp, c);
                }
                Err(EvalError::NoLinks) => {}
                Err(e) => return Err(e),
            }
        }
    }
    if gold > 0 {
        report.mining_pooled = Some(Prf::from_counts(tp, predicted, gold));
    }
    Ok(report)
}
