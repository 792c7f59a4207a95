use std::collections::BTreeMap;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::TrainError;
use crate::corpus::{mix64, LangPair};

/// One batch: a language pair and indices into that pair's training list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Batch {
    pub lang_pair: LangPair,
    pub indices: Vec<usize>,
}

/// Deterministic batch stream. Batch `t` comes from the `t mod L`-th
/// language pair (in sorted order) and is drawn by a generator seeded from
/// `(seed, t)`, so any batch can be produced without replaying the stream.
/// Indices are distinct within a batch unless the language pair has fewer
/// pairs than the batch size, in which case they are drawn with replacement.
#[derive(Debug, Clone)]
pub struct BatchSampler {
    groups: Vec<(LangPair, usize)>,
    batch_size: usize,
    seed: u64,
}

impl BatchSampler {
    pub fn new(group_sizes: &BTreeMap<LangPair, usize>, batch_size: usize, seed: u64) -> Result<Self, TrainError> {
        if group_sizes.is_empty() {
            return Err(TrainError::Config { field: "corpus", reason: "no training pairs".into() });
        }
        if let Some((lp, _)) = group_sizes.iter().find(|(_, &n)| n == 0) {
            return Err(TrainError::Config { field: "corpus", reason: format!("language pair {lp} has no training pairs") });
        }
        if batch_size < 2 {
            return Err(TrainError::Config { field: "batch_size", reason: format!("{batch_size} < 2") });
        }
        Ok(Self { groups: group_sizes.iter().map(|(&k, &v)| (k, v)).collect(), batch_size, seed })
    }

    pub fn batch(&self, t: usize) -> Batch {
        let (lang_pair, n) = self.groups[t % self.groups.len()];
        let mut rng = ChaCha8Rng::seed_from_u64(mix64(self.seed ^ mix64(t as u64 + 1)));
        let indices = if n >= self.batch_size {
            sample(&mut rng, n, self.batch_size).into_vec()
        } else {
            (0..self.batch_size).map(|_| rng.random_range(0..n)).collect()
        };
        Batch { lang_pair, indices }
    }

    pub fn iter(&self) -> impl Iterator<Item = Batch> + '_ {
        (0..).map(|t| self.batch(t))
    }
}

/// The first `count` batches of the stream.
pub fn make_batches(group_sizes: &BTreeMap<LangPair, usize>, batch_size: usize, seed: u64, count: usize) -> Result<Vec<Batch>, TrainError> {
    let sampler = BatchSampler::new(group_sizes, batch_size, seed)?;
    Ok(sampler.iter().take(count).collect())
}
