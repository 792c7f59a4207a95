//! Random small batches and loop-by-loop reference implementations of the
//! training losses, shared by the integration tests.
#![allow(dead_code)]

pub mod metrics;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use xlse_core::alignment::{word_align_filtered, AlignmentProvider, DictPair};
use xlse_core::corpus::{LangId, Link, ParallelPair, Sentence};
use xlse_core::encoder::{EncodedSentence, Encoder, EncoderConfig, TokenizedSentence, Tokenizer, MASK_ID};

pub struct SmallBatch {
    pub encoder: Encoder,
    pub pairs: Vec<ParallelPair>,
    pub tokens: Vec<(TokenizedSentence, TokenizedSentence)>,
    pub dicts: Vec<DictPair>,
}

/// Words of up to three characters are one token; longer ones are two.
fn word_pool(lang: u16) -> Vec<String> {
    let mut w: Vec<String> = (0..6).map(|i| format!("{}{i}", (b'a' + lang as u8) as char)).collect();
    w.extend((0..3).map(|i| format!("{}long{i}", (b'a' + lang as u8) as char)));
    w
}

/// A batch of `n` pairs with 1..=`max_len` words per side, random scored
/// links (some below 0.9) and a freshly initialised encoder with jittered
/// weights. Dictionaries are filtered at `tau`.
pub fn random_batch(seed: u64, n: usize, max_len: usize, dim: usize, layers: usize, lang_embedding: bool, tau: f64) -> SmallBatch {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (pool_x, pool_y) = (word_pool(0), word_pool(1));
    let mut pairs = Vec::with_capacity(n);
    for id in 0..n {
        let lx = rng.random_range(1..=max_len);
        let ly = rng.random_range(1..=max_len);
        let xs: Vec<String> = (0..lx).map(|_| pool_x[rng.random_range(0..pool_x.len())].clone()).collect();
        let ys: Vec<String> = (0..ly).map(|_| pool_y[rng.random_range(0..pool_y.len())].clone()).collect();
        let mut links = Vec::new();
        for i in 0..lx {
            for j in 0..ly {
                if rng.random::<f64>() < 0.35 {
                    let score = if rng.random::<f64>() < 0.75 { rng.random_range(0.9..=1.0) } else { rng.random_range(0.0..0.9) };
                    links.push(Link::new(i, j, score));
                }
            }
        }
        pairs.push(ParallelPair {
            id: id as u64,
            src: Sentence::new(LangId(0), xs).unwrap(),
            tgt: Sentence::new(LangId(1), ys).unwrap(),
            gold_links: Some(links),
        });
    }
    let words: Vec<String> = pool_x.iter().chain(&pool_y).cloned().collect();
    let tokenizer = Tokenizer::build(words.iter().map(String::as_str), 3, 32);
    let config = EncoderConfig {
        model_dim: dim,
        layers,
        heads: 2,
        ffn_dim: 2 * dim,
        max_seq_len: 32,
        vocab_size: tokenizer.vocab_size(),
        use_language_embedding: lang_embedding,
        language_count: 2,
        ..Default::default()
    };
    let mut encoder = Encoder::new(config, seed ^ 0xABCD).unwrap();
    for t in encoder.params.tensors_mut() {
        for x in t.data_mut() {
            *x += 0.2 * (rng.random::<f64>() - 0.5);
        }
    }
    let tokens = pairs.iter().map(|p| (tokenizer.tokenize(&p.src).unwrap(), tokenizer.tokenize(&p.tgt).unwrap())).collect();
    let dicts = pairs.iter().map(|p| word_align_filtered(p, AlignmentProvider::Gold, tau).unwrap()).collect();
    SmallBatch { encoder, pairs, tokens, dicts }
}

pub fn cosine(u: &[f64], v: &[f64]) -> f64 {
    let mut uv = 0.0;
    let mut uu = 0.0;
    let mut vv = 0.0;
    for i in 0..u.len() {
        uv += u[i] * v[i];
        uu += u[i] * u[i];
        vv += v[i] * v[i];
    }
    uv / (uu.sqrt() * vv.sqrt())
}

/// `-ln(e^pos / Σ e^all)` computed with plain exponentials.
fn neg_log_softmax(scores: &[f64], positive: usize) -> f64 {
    let mut z = 0.0;
    for s in scores {
        z += s.exp();
    }
    -(scores[positive].exp() / z).ln()
}

pub fn oracle_tr(src: &[Vec<f64>], tgt: &[Vec<f64>]) -> f64 {
    let n = src.len();
    let mut total = 0.0;
    for i in 0..n {
        let scores: Vec<f64> = (0..n).map(|j| cosine(&src[i], &tgt[j])).collect();
        total += neg_log_softmax(&scores, i);
    }
    total / n as f64
}

fn span_similarity(a: &EncodedSentence, wa: usize, b: &EncodedSentence, wb: usize) -> f64 {
    let (sa, ea) = a.word_spans[wa];
    let (sb, eb) = b.word_spans[wb];
    let m = (ea - sa).min(eb - sb);
    let mut sum = 0.0;
    for t in 0..m {
        sum += cosine(a.h_tokens.row(sa + t), b.h_tokens.row(sb + t));
    }
    sum / m as f64
}

pub fn oracle_wtr(encoded: &[(EncodedSentence, EncodedSentence)], dicts: &[DictPair]) -> f64 {
    let mut total = 0.0;
    for ((x, y), d) in encoded.iter().zip(dicts) {
        for (ctx, tgt, dict) in [(x, y, &d.forward), (y, x, &d.backward)] {
            for (j, k, _) in dict.iter() {
                if j >= ctx.word_count() || k >= tgt.word_count() {
                    continue;
                }
                let scores: Vec<f64> = (0..tgt.word_count()).map(|n| span_similarity(ctx, j, tgt, n)).collect();
                total += neg_log_softmax(&scores, k);
            }
        }
    }
    total / (2 * encoded.len()) as f64
}

/// One masked pass per aligned word, scored over the full logit matrix.
pub fn oracle_awp_exact(encoder: &Encoder, tokens: &[(TokenizedSentence, TokenizedSentence)], dicts: &[DictPair]) -> f64 {
    let mut total = 0.0;
    for ((x, y), d) in tokens.iter().zip(dicts) {
        for (ctx, tgt, dict) in [(x, y, &d.forward), (y, x, &d.backward)] {
            for (j, k, _) in dict.iter() {
                if j >= ctx.word_count() || k >= tgt.word_count() {
                    continue;
                }
                let (s, e) = ctx.word_spans[j];
                let mut ids = ctx.ids.clone();
                for t in s..e {
                    ids[t] = MASK_ID;
                }
                let lang = encoder.config.use_language_embedding.then_some(ctx.lang);
                let logits = encoder.mlm_logits(&ids, lang).unwrap();
                let target = tgt.word_ids(k);
                let m = (e - s).min(target.len());
                let mut word = 0.0;
                for t in 0..m {
                    word += neg_log_softmax(logits.row(s + t), target[t] as usize);
                }
                total += word / m as f64;
            }
        }
    }
    total / (2 * tokens.len()) as f64
}

pub fn encode_pairs(batch: &SmallBatch) -> Vec<(EncodedSentence, EncodedSentence)> {
    batch
        .tokens
        .iter()
        .map(|(x, y)| (batch.encoder.encode_sentence(x).unwrap(), batch.encoder.encode_sentence(y).unwrap()))
        .collect()
}
