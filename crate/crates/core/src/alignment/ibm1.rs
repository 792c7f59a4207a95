//! IBM Model 1 lexical translation probabilities trained with EM.

use std::collections::HashMap;

use crate::corpus::{Link, ParallelPair};

use super::AlignmentError;

/// Lexical translation table `t(tgt | src)`. Rows cover the target words
/// that co-occurred with each source word and sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct TranslationTable {
    src_vocab: Vec<String>,
    tgt_vocab: Vec<String>,
    src_index: HashMap<String, u32>,
    tgt_index: HashMap<String, u32>,
    /// Per source word: (target id, probability), sorted by target id.
    rows: Vec<Vec<(u32, f64)>>,
}

#[derive(Default)]
struct Interner {
    words: Vec<String>,
    index: HashMap<String, u32>,
}

impl Interner {
    fn intern(&mut self, w: &str) -> u32 {
        if let Some(&id) = self.index.get(w) {
            return id;
        }
        let id = self.words.len() as u32;
        self.words.push(w.to_owned());
        self.index.insert(w.to_owned(), id);
        id
    }
}

impl TranslationTable {
    /// Builds a table from explicit `(src, tgt, probability)` entries. Every
    /// row must sum to one within 1e-9.
    pub fn from_entries<'a>(entries: impl IntoIterator<Item = (&'a str, &'a str, f64)>) -> Result<Self, AlignmentError> {
        let mut src = Interner::default();
        let mut tgt = Interner::default();
        let mut rows: Vec<Vec<(u32, f64)>> = Vec::new();
        for (s, t, p) in entries {
            let si = src.intern(s) as usize;
            let ti = tgt.intern(t);
            if rows.len() <= si {
                rows.resize_with(si + 1, Vec::new);
            }
            rows[si].push((ti, p));
        }
        for row in &mut rows {
            row.sort_by_key(|e| e.0);
        }
        let table = Self { src_vocab: src.words, tgt_vocab: tgt.words, src_index: src.index, tgt_index: tgt.index, rows };
        for (i, sum) in table.row_sums().iter().enumerate() {
            if (sum - 1.0).abs() > 1e-9 {
                return Err(AlignmentError::Unnormalized(table.src_vocab[i].clone()));
            }
        }
        Ok(table)
    }

    /// `t(tgt | src)`; zero for unseen combinations.
    pub fn prob(&self, src: &str, tgt: &str) -> f64 {
        match (self.src_index.get(src), self.tgt_index.get(tgt)) {
            (Some(&s), Some(&t)) => self.prob_ids(s, t),
            _ => 0.0,
        }
    }

    fn prob_ids(&self, s: u32, t: u32) -> f64 {
        let row = &self.rows[s as usize];
        row.binary_search_by_key(&t, |e| e.0).map(|i| row[i].1).unwrap_or(0.0)
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.iter().map(|e| e.1).sum()).collect()
    }

    pub fn src_vocab_len(&self) -> usize {
        self.src_vocab.len()
    }

    /// Most probable target word for `src`, if `src` is known.
    pub fn best_translation(&self, src: &str) -> Option<(&str, f64)> {
        let s = *self.src_index.get(src)?;
        self.rows[s as usize]
            .iter()
            .fold(None, |best: Option<(u32, f64)>, &(t, p)| match best {
                Some((_, bp)) if bp >= p => best,
                _ => Some((t, p)),
            })
            .map(|(t, p)| (self.tgt_vocab[t as usize].as_str(), p))
    }
}

/// A trained table plus the corpus log-likelihood under the initial
/// parameters and after every EM iteration (length `iterations + 1`).
#[derive(Debug, Clone)]
pub struct Ibm1Training {
    pub table: TranslationTable,
    pub log_likelihood: Vec<f64>,
}

/// Trains `t(tgt | src)` on `pair.src → pair.tgt`.
pub fn train_ibm1(pairs: &[ParallelPair], iterations: usize) -> Result<Ibm1Training, AlignmentError> {
    let sentences: Vec<(&[String], &[String])> = pairs.iter().map(|p| (&p.src.words[..], &p.tgt.words[..])).collect();
    train_on(&sentences, iterations)
}

fn train_on(sentences: &[(&[String], &[String])], iterations: usize) -> Result<Ibm1Training, AlignmentError> {
    if sentences.is_empty() {
        return Err(AlignmentError::EmptyCorpus);
    }
    if iterations == 0 {
        return Err(AlignmentError::NoIterations);
    }
    let mut src = Interner::default();
    let mut tgt = Interner::default();
    let corpus: Vec<(Vec<u32>, Vec<u32>)> = sentences
        .iter()
        .map(|(s, t)| (s.iter().map(|w| src.intern(w)).collect(), t.iter().map(|w| tgt.intern(w)).collect()))
        .collect();

    let mut rows: Vec<Vec<(u32, f64)>> = vec![Vec::new(); src.words.len()];
    for (s, t) in &corpus {
        for &e in s {
            rows[e as usize].extend(t.iter().map(|&f| (f, 0.0)));
        }
    }
    for row in &mut rows {
        row.sort_by_key(|e| e.0);
        row.dedup_by_key(|e| e.0);
        let uniform = 1.0 / row.len() as f64;
        row.iter_mut().for_each(|e| e.1 = uniform);
    }
    let mut table = TranslationTable { src_vocab: src.words, tgt_vocab: tgt.words, src_index: src.index, tgt_index: tgt.index, rows };

    let mut log_likelihood = Vec::with_capacity(iterations + 1);
    for _ in 0..iterations {
        let mut counts: Vec<Vec<(u32, f64)>> =
            table.rows.iter().map(|r| r.iter().map(|&(f, _)| (f, 0.0)).collect()).collect();
        let mut ll = 0.0;
        for (s, t) in &corpus {
            for &f in t {
                let z: f64 = s.iter().map(|&e| table.prob_ids(e, f)).sum();
                ll += (z / s.len() as f64).ln();
                for &e in s {
                    let row = &mut counts[e as usize];
                    let i = row.binary_search_by_key(&f, |c| c.0).expect("co-occurrence present");
                    row[i].1 += table.prob_ids(e, f) / z;
                }
            }
        }
        log_likelihood.push(ll);
        for row in &mut counts {
            let total: f64 = row.iter().map(|c| c.1).sum();
            row.iter_mut().for_each(|c| c.1 /= total);
        }
        table.rows = counts;
    }
    log_likelihood.push(corpus_log_likelihood(&table, &corpus));
    Ok(Ibm1Training { table, log_likelihood })
}

fn corpus_log_likelihood(table: &TranslationTable, corpus: &[(Vec<u32>, Vec<u32>)]) -> f64 {
    corpus
        .iter()
        .flat_map(|(s, t)| {
            t.iter().map(move |&f| (s.iter().map(|&e| table.prob_ids(e, f)).sum::<f64>() / s.len() as f64).ln())
        })
        .sum()
}

/// For each source word: the target word with the highest `t(y | x_j)`,
/// scored by that probability normalised over the distinct target words of
/// the sentence. Among repeated occurrences of the winning word the one
/// closest in relative position is linked. Source words with no known
/// candidate get no link.
pub fn align_ibm1(table: &TranslationTable, pair: &ParallelPair) -> Vec<Link> {
    align_words(table, &pair.src.words, &pair.tgt.words)
}

fn align_words(table: &TranslationTable, src: &[String], tgt: &[String]) -> Vec<Link> {
    let tgt_ids: Vec<Option<u32>> = tgt.iter().map(|w| table.tgt_index.get(w).copied()).collect();
    let mut types: Vec<u32> = tgt_ids.iter().flatten().copied().collect();
    types.sort_unstable();
    types.dedup();
    let rel = |i: usize, n: usize| (i as f64 + 0.5) / n as f64;
    let mut links = Vec::new();
    for (j, w) in src.iter().enumerate() {
        let Some(&e) = table.src_index.get(w) else { continue };
        let total: f64 = types.iter().map(|&f| table.prob_ids(e, f)).sum();
        if total <= 0.0 {
            continue;
        }
        let best = types
            .iter()
            .map(|&f| (f, table.prob_ids(e, f)))
            .fold((0, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });
        let anchor = rel(j, src.len());
        let k = tgt_ids
            .iter()
            .enumerate()
            .filter(|(_, f)| **f == Some(best.0))
            .map(|(k, _)| k)
            .min_by(|&a, &b| {
                let da = (rel(a, tgt.len()) - anchor).abs();
                let db = (rel(b, tgt.len()) - anchor).abs();
                da.total_cmp(&db).then(a.cmp(&b))
            })
            .expect("best type occurs in the sentence");
        links.push(Link::new(j, k, (best.1 / total).clamp(0.0, 1.0)));
    }
    links
}

/// IBM Model 1 tables for both directions of a language pair.
#[derive(Debug, Clone)]
pub struct Ibm1Aligner {
    /// `t(tgt | src)`
    pub forward: TranslationTable,
    /// `t(src | tgt)`
    pub backward: TranslationTable,
}

impl Ibm1Aligner {
    pub fn train(pairs: &[ParallelPair], iterations: usize) -> Result<Self, AlignmentError> {
        let fwd: Vec<(&[String], &[String])> = pairs.iter().map(|p| (&p.src.words[..], &p.tgt.words[..])).collect();
        let bwd: Vec<(&[String], &[String])> = fwd.iter().map(|&(s, t)| (t, s)).collect();
        Ok(Self { forward: train_on(&fwd, iterations)?.table, backward: train_on(&bwd, iterations)?.table })
    }

    /// Scored links `(X→Y, Y→X)`, each in its own direction's index space.
    pub fn align(&self, pair: &ParallelPair) -> (Vec<Link>, Vec<Link>) {
        (
            align_words(&self.forward, &pair.src.words, &pair.tgt.words),
            align_words(&self.backward, &pair.tgt.words, &pair.src.words),
        )
    }
}
