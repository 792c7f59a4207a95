//! Directional word-alignment dictionaries and the providers that fill them:
//! gold links, an IBM Model 1 aligner, or precomputed alignment files.

mod ibm1;
mod io;

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::corpus::{LangPair, Link, ParallelPair};

pub use ibm1::{align_ibm1, train_ibm1, Ibm1Aligner, Ibm1Training, TranslationTable};
pub use io::{load_alignments, read_alignments, save_alignments, write_alignments, AlignmentRecords};

/// Links scoring below this are dropped before training.
pub const DEFAULT_THRESHOLD: f64 = 0.9;

#[derive(Debug, Error)]
pub enum AlignmentError {
    #[error("pair {0} has no gold links")]
    MissingGold(u64),
    #[error("pair {0} has no alignment record")]
    MissingRecord(u64),
    #[error("link {src}-{tgt} out of bounds for pair {pair_id} ({src_len}x{tgt_len})")]
    OutOfBounds { pair_id: u64, src: usize, tgt: usize, src_len: usize, tgt_len: usize },
    #[error("cannot train an aligner on an empty corpus")]
    EmptyCorpus,
    #[error("EM needs at least one iteration")]
    NoIterations,
    #[error("translation table row for {0:?} does not sum to 1")]
    Unnormalized(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Which half of a bidirectional dictionary pair this is.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Side {
    /// Source sentence to target sentence (X→Y).
    Forward,
    /// Target sentence to source sentence (Y→X).
    Backward,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Forward => "X→Y",
            Side::Backward => "Y→X",
        })
    }
}

/// Map from a word index in one sentence to one aligned word index in the
/// other, with the link's confidence score.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignmentDict {
    pub langs: LangPair,
    pub side: Side,
    links: BTreeMap<usize, (usize, f64)>,
}

impl AlignmentDict {
    pub fn empty(langs: LangPair, side: Side) -> Self {
        Self { langs, side, links: BTreeMap::new() }
    }

    /// Builds a dictionary from raw links (expressed in this direction's
    /// index space). Per source index the highest score wins, ties going to
    /// the lowest target index.
    pub fn from_links(
        langs: LangPair,
        side: Side,
        links: &[Link],
        bounds: (usize, usize),
        pair_id: u64,
    ) -> Result<Self, AlignmentError> {
        let mut map: BTreeMap<usize, (usize, f64)> = BTreeMap::new();
        for l in links {
            if l.src >= bounds.0 || l.tgt >= bounds.1 {
                return Err(AlignmentError::OutOfBounds {
                    pair_id,
                    src: l.src,
                    tgt: l.tgt,
                    src_len: bounds.0,
                    tgt_len: bounds.1,
                });
            }
            map.entry(l.src)
                .and_modify(|best| {
                    if l.score > best.1 || (l.score == best.1 && l.tgt < best.0) {
                        *best = (l.tgt, l.score);
                    }
                })
                .or_insert((l.tgt, l.score));
        }
        Ok(Self { langs, side, links: map })
    }

    pub fn lookup(&self, src_idx: usize) -> Option<(usize, f64)> {
        self.links.get(&src_idx).copied()
    }

    pub fn len(&self) -> usize {
        self.links.len()
    }

    pub fn is_empty(&self) -> bool {
        self.links.is_empty()
    }

    /// `(src_idx, tgt_idx, score)` in ascending source order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.links.iter().map(|(&s, &(t, score))| (s, t, score))
    }

    pub fn to_links(&self) -> Vec<Link> {
        self.iter().map(|(s, t, score)| Link::new(s, t, score)).collect()
    }

    /// Keeps exactly the links scoring at least `tau`.
    pub fn filter_by_threshold(&self, tau: f64) -> Self {
        Self {
            langs: self.langs,
            side: self.side,
            links: self
                .links
                .iter()
                .filter(|(_, &(_, score))| score >= tau)
                .map(|(&k, &v)| (k, v))
                .collect(),
        }
    }
}

/// `WA^{X→Y}` and `WA^{Y→X}` for one pair.
#[derive(Debug, Clone, PartialEq)]
pub struct DictPair {
    pub forward: AlignmentDict,
    pub backward: AlignmentDict,
}

impl DictPair {
    pub fn empty(langs: LangPair) -> Self {
        Self {
            forward: AlignmentDict::empty(langs, Side::Forward),
            backward: AlignmentDict::empty(langs.reversed(), Side::Backward),
        }
    }

    pub fn filter_by_threshold(&self, tau: f64) -> Self {
        Self {
            forward: self.forward.filter_by_threshold(tau),
            backward: self.backward.filter_by_threshold(tau),
        }
    }

    pub fn get(&self, side: Side) -> &AlignmentDict {
        match side {
            Side::Forward => &self.forward,
            Side::Backward => &self.backward,
        }
    }
}

/// Where word links come from.
#[derive(Debug, Clone, Copy)]
pub enum AlignmentProvider<'a> {
    Gold,
    Ibm1(&'a Ibm1Aligner),
    File(&'a AlignmentRecords),
}

/// Raw scored links for both directions, before dictionary construction.
pub fn raw_links(
    pair: &ParallelPair,
    provider: AlignmentProvider<'_>,
) -> Result<(Vec<Link>, Vec<Link>), AlignmentError> {
    match provider {
        AlignmentProvider::Gold => {
            let gold = pair.gold_links.as_ref().ok_or(AlignmentError::MissingGold(pair.id))?;
            Ok((gold.clone(), gold.iter().map(|l| l.swapped()).collect()))
        }
        AlignmentProvider::Ibm1(aligner) => Ok(aligner.align(pair)),
        AlignmentProvider::File(records) => {
            let langs = pair.lang_pair();
            let fwd = records.get(pair.id, langs);
            let bwd = records.get(pair.id, langs.reversed());
            match (fwd, bwd) {
                (Some(f), Some(b)) => Ok((f.to_vec(), b.to_vec())),
                (Some(f), None) => Ok((f.to_vec(), f.iter().map(|l| l.swapped()).collect())),
                (None, Some(b)) => Ok((b.iter().map(|l| l.swapped()).collect(), b.to_vec())),
                (None, None) => Err(AlignmentError::MissingRecord(pair.id)),
            }
        }
    }
}

/// Builds `(WA^{X→Y}, WA^{Y→X})` for a pair.
pub fn word_align(pair: &ParallelPair, provider: AlignmentProvider<'_>) -> Result<DictPair, AlignmentError> {
    let (fwd, bwd) = raw_links(pair, provider)?;
    dicts_from_links(pair, &fwd, &bwd)
}

/// Filters raw links at `tau` first, then builds the dictionaries.
pub fn word_align_filtered(
    pair: &ParallelPair,
    provider: AlignmentProvider<'_>,
    tau: f64,
) -> Result<DictPair, AlignmentError> {
    let (fwd, bwd) = raw_links(pair, provider)?;
    let keep = |links: Vec<Link>| links.into_iter().filter(|l| l.score >= tau).collect::<Vec<_>>();
    dicts_from_links(pair, &keep(fwd), &keep(bwd))
}

fn dicts_from_links(pair: &ParallelPair, fwd: &[Link], bwd: &[Link]) -> Result<DictPair, AlignmentError> {
    let langs = pair.lang_pair();
    let (n_src, n_tgt) = (pair.src.len(), pair.tgt.len());
    Ok(DictPair {
        forward: AlignmentDict::from_links(langs, Side::Forward, fwd, (n_src, n_tgt), pair.id)?,
        backward: AlignmentDict::from_links(langs.reversed(), Side::Backward, bwd, (n_tgt, n_src), pair.id)?,
    })
}
