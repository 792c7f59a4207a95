use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::corpus::{LangId, ParallelPair};
use crate::encoder::tensor::{dot, norm};
use crate::encoder::{Encoder, Tokenizer, UNK_ID};

/// Default number of word pairs and exported words.
pub const SAMPLED_WORDS: usize = 500;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct WordCount {
    pub word: String,
    pub lang: LangId,
    pub count: u64,
}

/// Occurrence counts of every word, sorted by language then word.
pub fn count_words<'a>(pairs: impl IntoIterator<Item = &'a ParallelPair>) -> Vec<WordCount> {
    let mut counts: BTreeMap<(LangId, &str), u64> = BTreeMap::new();
    for p in pairs {
        for s in [&p.src, &p.tgt] {
            for w in &s.words {
                *counts.entry((s.lang, w.as_str())).or_default() += 1;
            }
        }
    }
    counts.into_iter().map(|((lang, word), count)| WordCount { word: word.to_owned(), lang, count }).collect()
}

/// Up to `n` words, taking the next most frequent word of each language in
/// turn. Within a language, higher counts come first, then lexical order.
pub fn select_words(counts: &[WordCount], n: usize) -> Vec<WordCount> {
    let mut by_lang: BTreeMap<LangId, Vec<&WordCount>> = BTreeMap::new();
    for c in counts {
        by_lang.entry(c.lang).or_default().push(c);
    }
    for list in by_lang.values_mut() {
        list.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.word.cmp(&b.word)));
    }
    let mut out = Vec::with_capacity(n);
    let mut depth = 0;
    while out.len() < n {
        let mut any = false;
        for list in by_lang.values() {
            if let Some(c) = list.get(depth) {
                any = true;
                if out.len() < n {
                    out.push((*c).clone());
                }
            }
        }
        if !any {
            break;
        }
        depth += 1;
    }
    out
}

/// Input embedding row of the word's first token, or `None` for words the
/// tokenizer does not know.
pub fn word_vector(encoder: &Encoder, tokenizer: &Tokenizer, word: &str) -> Option<Vec<f64>> {
    let id = *tokenizer.word_ids(word).first()?;
    (id != UNK_ID).then(|| encoder.params.token_embedding.row(id as usize).to_vec())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CosineStats {
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
    pub count: usize,
}

/// Cosine between the input embeddings of aligned words, over the
/// `max_pairs` most frequent aligned word-type pairs in the gold links.
pub fn aligned_word_cosine(
    encoder: &Encoder,
    tokenizer: &Tokenizer,
    pairs: &[ParallelPair],
    max_pairs: usize,
) -> Result<CosineStats, EvalError> {
    let mut freq: HashMap<(&str, &str), u64> = HashMap::new();
    for p in pairs {
        for l in p.gold_links.iter().flatten() {
            if let (Some(s), Some(t)) = (p.src.words.get(l.src), p.tgt.words.get(l.tgt)) {
                *freq.entry((s.as_str(), t.as_str())).or_default() += 1;
            }
        }
    }
    if freq.is_empty() {
        return Err(EvalError::NoLinks);
    }
    let mut ranked: Vec<((&str, &str), u64)> = freq.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));

    let mut cosines = Vec::new();
    for ((s, t), _) in ranked {
        if cosines.len() == max_pairs {
            break;
        }
        let (Some(u), Some(v)) = (word_vector(encoder, tokenizer, s), word_vector(encoder, tokenizer, t)) else {
            continue;
        };
        let (nu, nv) = (norm(&u), norm(&v));
        if nu == 0.0 || nv == 0.0 {
            continue;
        }
        cosines.push(dot(&u, &v) / (nu * nv));
    }
    if cosines.is_empty() {
        return Err(EvalError::NoLinks);
    }
    Ok(stats(&cosines))
}

pub fn stats(x: &[f64]) -> CosineStats {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    CosineStats { mean, std: var.sqrt(), count: x.len() }
}

/// Coordinates on the first two principal components. Each component's
/// sign is fixed so that its first nonzero loading is positive.
pub fn pca_2d(vectors: &[Vec<f64>]) -> Result<Vec<[f64; 2]>, EvalError> {
    if vectors.len() < 3 {
        return Err(EvalError::TooFew { what: "projected words", need: 3, got: vectors.len() });
    }
    let d = vectors[0].len();
    if vectors.iter().any(|v| v.len() != d) {
        return Err(EvalError::BadParameter { name: "vectors", reason: "ragged dimensions".into() });
    }
    let n = vectors.len();
    let mean: Vec<f64> = (0..d).map(|j| vectors.iter().map(|v| v[j]).sum::<f64>() / n as f64).collect();
    let centered = DMatrix::from_fn(n, d, |i, j| vectors[i][j] - mean[j]);
    let cov = centered.transpose() * &centered / n as f64;
    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));

    let mut axes: Vec<Vec<f64>> = Vec::with_capacity(2);
    for &c in order.iter().take(2) {
        let mut axis: Vec<f64> = eig.eigenvectors.column(c).iter().copied().collect();
        if let Some(first) = axis.iter().find(|x| x.abs() > 1e-12) {
            if *first < 0.0 {
                axis.iter_mut().for_each(|x| *x = -*x);
            }
        }
        axes.push(axis);
    }
    while axes.len() < 2 {
        axes.push(vec![0.0; d]);
    }
    Ok((0..n)
        .map(|i| {
            let row: Vec<f64> = centered.row(i).iter().copied().collect();
            [dot(&row, &axes[0]), dot(&row, &axes[1])]
        })
        .collect())
}

/// Writes `word<TAB>lang<TAB>x<TAB>y` rows for the projected words.
pub fn export_projection(words: &[(String, LangId, Vec<f64>)], path: &Path) -> Result<Vec<[f64; 2]>, EvalError> {
    let vectors: Vec<Vec<f64>> = words.iter().map(|(_, _, v)| v.clone()).collect();
    let coords = pca_2d(&vectors)?;
    let mut out = BufWriter::new(File::create(path)?);
    for ((word, lang, _), [x, y]) in words.iter().zip(&coords) {
        writeln!(out, "{word}\t{lang}\t{x}\t{y}")?;
    }
    out.flush()?;
    Ok(coords)
}
