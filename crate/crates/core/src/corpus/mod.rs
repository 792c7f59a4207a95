//! Parallel corpora: sentence and pair types, a synthetic cipher-language
//! generator with gold word alignments, train/dev splitting and the
//! line-delimited corpus file format.

mod generate;
mod io;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use generate::{generate_corpus, CorpusConfig, LanguageSpec};
pub use io::{load_parallel, read_parallel, save_parallel, write_parallel};
pub(crate) use io::{format_link, parse_link};

/// Small integer language identifier. Language 0 is the pivot language that
/// appears on the source side of every generated pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LangId(pub u16);

impl LangId {
    pub const PIVOT: LangId = LangId(0);

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for LangId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl FromStr for LangId {
    type Err = std::num::ParseIntError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.trim().parse().map(LangId)
    }
}

/// Ordered (source, target) language pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LangPair {
    pub src: LangId,
    pub tgt: LangId,
}

impl LangPair {
    pub fn new(src: LangId, tgt: LangId) -> Self {
        Self { src, tgt }
    }

    pub fn reversed(self) -> Self {
        Self { src: self.tgt, tgt: self.src }
    }
}

impl fmt::Display for LangPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.src, self.tgt)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub lang: LangId,
    pub words: Vec<String>,
}

impl Sentence {
    pub fn new(lang: LangId, words: Vec<String>) -> Result<Self, CorpusError> {
        if words.is_empty() {
            return Err(CorpusError::Invalid("sentence has no words".into()));
        }
        if let Some(w) = words
            .iter()
            .find(|w| w.is_empty() || w.chars().any(char::is_whitespace))
        {
            return Err(CorpusError::Invalid(format!("bad word {w:?}")));
        }
        Ok(Self { lang, words })
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

/// A scored word-index link between two sentences.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Link {
    pub src: usize,
    pub tgt: usize,
    pub score: f64,
}

impl Link {
    pub fn new(src: usize, tgt: usize, score: f64) -> Self {
        Self { src, tgt, score }
    }

    pub fn swapped(self) -> Self {
        Self { src: self.tgt, tgt: self.src, score: self.score }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParallelPair {
    pub id: u64,
    pub src: Sentence,
    pub tgt: Sentence,
    pub gold_links: Option<Vec<Link>>,
}

impl ParallelPair {
    pub fn lang_pair(&self) -> LangPair {
        LangPair::new(self.src.lang, self.tgt.lang)
    }

    /// Checks link bounds, score range and uniqueness of (src, tgt) index pairs.
    pub fn validate(&self) -> Result<(), CorpusError> {
        let Some(links) = &self.gold_links else {
            return Ok(());
        };
        let mut seen = std::collections::BTreeSet::new();
        for l in links {
            if l.src >= self.src.len() || l.tgt >= self.tgt.len() {
                return Err(CorpusError::Invalid(format!(
                    "pair {}: link {}-{} out of bounds ({}x{})",
                    self.id,
                    l.src,
                    l.tgt,
                    self.src.len(),
                    self.tgt.len()
                )));
            }
            if !(0.0..=1.0).contains(&l.score) {
                return Err(CorpusError::Invalid(format!(
                    "pair {}: link score {} outside [0,1]",
                    self.id, l.score
                )));
            }
            if !seen.insert((l.src, l.tgt)) {
                return Err(CorpusError::Invalid(format!(
                    "pair {}: duplicate link {}-{}",
                    self.id, l.src, l.tgt
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("invalid corpus config: {field}: {reason}")]
    Config { field: &'static str, reason: String },
    #[error("invalid data: {0}")]
    Invalid(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// splitmix64 finaliser; a fixed, platform-independent hash for pair ids.
pub(crate) fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Splits pairs into (train, dev). Membership is decided by a fixed hash of
/// each pair id; both halves keep the input order.
pub fn split_corpus(
    pairs: &[ParallelPair],
    dev_fraction: f64,
) -> Result<(Vec<ParallelPair>, Vec<ParallelPair>), CorpusError> {
    if !(dev_fraction > 0.0 && dev_fraction < 1.0) {
        return Err(CorpusError::Config {
            field: "dev_fraction",
            reason: format!("{dev_fraction} not in (0, 1)"),
        });
    }
    let n_dev = (pairs.len() as f64 * dev_fraction).round() as usize;
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    order.sort_by_key(|&i| (mix64(pairs[i].id), pairs[i].id, i));
    let mut is_dev = vec![false; pairs.len()];
    for &i in &order[..n_dev] {
        is_dev[i] = true;
    }
    let mut train = Vec::with_capacity(pairs.len() - n_dev);
    let mut dev = Vec::with_capacity(n_dev);
    for (p, dev_member) in pairs.iter().zip(is_dev) {
        if dev_member {
            dev.push(p.clone());
        } else {
            train.push(p.clone());
        }
    }
    Ok((train, dev))
}
