use std::collections::{BTreeMap, BTreeSet};

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{mix64, CorpusError, LangId, LangPair, Link, ParallelPair, Sentence};

const CONSONANTS: &[char] = &[
    'b', 'd', 'f', 'g', 'k', 'l', 'm', 'n', 'p', 'r', 's', 't', 'v', 'z',
];
const VOWELS: &[char] = &['a', 'e', 'i', 'o', 'u'];

/// One non-pivot language and the size of its parallel corpus with the pivot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LanguageSpec {
    pub lang: LangId,
    pub vocab_size: usize,
    pub pair_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CorpusConfig {
    /// Vocabulary size of the pivot language (language 0).
    pub pivot_vocab_size: usize,
    /// Non-pivot languages; each is paired with the pivot.
    pub languages: Vec<LanguageSpec>,
    /// Seeds the surface forms of every language's cipher.
    pub cipher_seed: u64,
    /// Probability of swapping two adjacent target units.
    pub reorder_prob: f64,
    /// Probability that a source word becomes a two-word target phrase.
    pub fertility_prob: f64,
    /// Inclusive (min, max) source sentence length in words.
    pub sentence_length: (usize, usize),
    /// Exponent of the Zipf distribution over latent words.
    pub zipf_exponent: f64,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        Self {
            pivot_vocab_size: 200,
            languages: vec![
                LanguageSpec { lang: LangId(1), vocab_size: 200, pair_count: 4000 },
                LanguageSpec { lang: LangId(2), vocab_size: 200, pair_count: 200 },
            ],
            cipher_seed: 7,
            reorder_prob: 0.1,
            fertility_prob: 0.1,
            sentence_length: (4, 10),
            zipf_exponent: 1.0,
        }
    }
}

impl CorpusConfig {
    pub fn validate(&self) -> Result<(), CorpusError> {
        let bad = |field, reason: String| Err(CorpusError::Config { field, reason });
        if self.pivot_vocab_size < 10 {
            return bad("pivot_vocab_size", format!("{} < 10", self.pivot_vocab_size));
        }
        if self.languages.is_empty() {
            return bad("languages", "no non-pivot languages".into());
        }
        let mut seen = BTreeSet::new();
        for spec in &self.languages {
            if spec.lang == LangId::PIVOT {
                return bad("languages.lang", "language 0 is reserved for the pivot".into());
            }
            if !seen.insert(spec.lang) {
                return bad("languages.lang", format!("duplicate language {}", spec.lang));
            }
            if spec.vocab_size < 10 {
                return bad("languages.vocab_size", format!("{} < 10", spec.vocab_size));
            }
            if spec.pair_count < 1 {
                return bad("languages.pair_count", "must be >= 1".into());
            }
        }
        for (field, p) in [("reorder_prob", self.reorder_prob), ("fertility_prob", self.fertility_prob)] {
            if !(0.0..=1.0).contains(&p) {
                return bad(field, format!("{p} not in [0, 1]"));
            }
        }
        let (lo, hi) = self.sentence_length;
        if lo < 1 || lo > hi {
            return bad("sentence_length", format!("({lo}, {hi}) is not a valid range"));
        }
        if !(self.zipf_exponent.is_finite() && self.zipf_exponent >= 0.0) {
            return bad("zipf_exponent", format!("{}", self.zipf_exponent));
        }
        Ok(())
    }

    /// Largest word count any generated sentence can have.
    pub fn max_words(&self) -> usize {
        2 * self.sentence_length.1
    }
}

/// Surface forms of one language: a single word and a two-word phrase per
/// latent word.
struct Lexicon {
    words: Vec<String>,
    phrases: Vec<[String; 2]>,
}

fn random_form(rng: &mut ChaCha8Rng) -> String {
    let syllables = rng.random_range(2..=4);
    let mut s = String::with_capacity(syllables * 2);
    for _ in 0..syllables {
        s.push(CONSONANTS[rng.random_range(0..CONSONANTS.len())]);
        s.push(VOWELS[rng.random_range(0..VOWELS.len())]);
    }
    s
}

fn build_lexicon(lang: LangId, vocab_size: usize, cipher_seed: u64) -> Lexicon {
    let mut rng = ChaCha8Rng::seed_from_u64(mix64(cipher_seed ^ mix64(lang.0 as u64 + 1)));
    let mut used = BTreeSet::new();
    let mut fresh = |rng: &mut ChaCha8Rng| loop {
        let w = format!("l{}_{}", lang.0, random_form(rng));
        if used.insert(w.clone()) {
            return w;
        }
    };
    let words: Vec<String> = (0..vocab_size).map(|_| fresh(&mut rng)).collect();
    let phrases = (0..vocab_size)
        .map(|i| [words[i].clone(), fresh(&mut rng)])
        .collect();
    Lexicon { words, phrases }
}

/// Generates one parallel corpus per non-pivot language, each paired with the
/// pivot. Output is a pure function of `(config, seed)`; pair ids are unique
/// across the whole map.
pub fn generate_corpus(
    config: &CorpusConfig,
    seed: u64,
) -> Result<BTreeMap<LangPair, Vec<ParallelPair>>, CorpusError> {
    config.validate()?;
    let pivot = build_lexicon(LangId::PIVOT, config.pivot_vocab_size, config.cipher_seed);
    let mut out = BTreeMap::new();
    let mut next_id = 0u64;
    for spec in &config.languages {
        let lexicon = build_lexicon(spec.lang, spec.vocab_size, config.cipher_seed);
        let shared = spec.vocab_size.min(config.pivot_vocab_size);
        let weights: Vec<f64> = (0..shared)
            .map(|r| 1.0 / ((r + 1) as f64).powf(config.zipf_exponent))
            .collect();
        let zipf = WeightedIndex::new(&weights).expect("non-empty positive weights");
        let mut rng = ChaCha8Rng::seed_from_u64(mix64(seed) ^ mix64(spec.lang.0 as u64 + 0x5eed));
        let mut pairs = Vec::with_capacity(spec.pair_count);
        for _ in 0..spec.pair_count {
            pairs.push(generate_pair(next_id, spec.lang, &pivot, &lexicon, &zipf, config, &mut rng)?);
            next_id += 1;
        }
        out.insert(LangPair::new(LangId::PIVOT, spec.lang), pairs);
    }
    Ok(out)
}

fn generate_pair(
    id: u64,
    lang: LangId,
    pivot: &Lexicon,
    lexicon: &Lexicon,
    zipf: &WeightedIndex<f64>,
    config: &CorpusConfig,
    rng: &mut ChaCha8Rng,
) -> Result<ParallelPair, CorpusError> {
    let (lo, hi) = config.sentence_length;
    let len = rng.random_range(lo..=hi);
    let latent: Vec<usize> = (0..len).map(|_| zipf.sample(rng)).collect();
    let src_words: Vec<String> = latent.iter().map(|&w| pivot.words[w].clone()).collect();

    // Target units: (source index, rendered words).
    let mut units: Vec<(usize, Vec<String>)> = latent
        .iter()
        .enumerate()
        .map(|(i, &w)| {
            let phrase = rng.random::<f64>() < config.fertility_prob;
            let words = if phrase {
                lexicon.phrases[w].to_vec()
            } else {
                vec![lexicon.words[w].clone()]
            };
            (i, words)
        })
        .collect();
    let mut t = 0;
    while t + 1 < units.len() {
        if rng.random::<f64>() < config.reorder_prob {
            units.swap(t, t + 1);
            t += 2;
        } else {
            t += 1;
        }
    }

    let mut tgt_words = Vec::new();
    let mut links = Vec::new();
    for (src_idx, words) in units {
        for w in words {
            links.push(Link::new(src_idx, tgt_words.len(), 1.0));
            tgt_words.push(w);
        }
    }
    links.sort_by_key(|l| (l.src, l.tgt));
    Ok(ParallelPair {
        id,
        src: Sentence::new(LangId::PIVOT, src_words)?,
        tgt: Sentence::new(lang, tgt_words)?,
        gold_links: Some(links),
    })
}
