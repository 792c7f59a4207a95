use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::corpus::{LangId, Sentence};

use super::EncoderError;

pub const PAD_ID: u32 = 0;
pub const UNK_ID: u32 = 1;
pub const CLS_ID: u32 = 2;
pub const MASK_ID: u32 = 3;
const SPECIALS: [&str; 4] = ["[PAD]", "[UNK]", "[CLS]", "[MASK]"];

/// Word-level vocabulary with a deterministic two-piece split for long words.
///
/// A word longer than `split_chars` characters becomes two pieces: its first
/// `ceil(n / 2)` characters and `##` followed by the rest.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(from = "TokenizerRepr", into = "TokenizerRepr")]
pub struct Tokenizer {
    vocab: Vec<String>,
    index: HashMap<String, u32>,
    split_chars: usize,
    max_seq_len: usize,
}

#[derive(Serialize, Deserialize)]
struct TokenizerRepr {
    vocab: Vec<String>,
    split_chars: usize,
    max_seq_len: usize,
}

impl From<TokenizerRepr> for Tokenizer {
    fn from(r: TokenizerRepr) -> Self {
        let index = r.vocab.iter().enumerate().map(|(i, t)| (t.clone(), i as u32)).collect();
        Self { vocab: r.vocab, index, split_chars: r.split_chars, max_seq_len: r.max_seq_len }
    }
}

impl From<Tokenizer> for TokenizerRepr {
    fn from(t: Tokenizer) -> Self {
        Self { vocab: t.vocab, split_chars: t.split_chars, max_seq_len: t.max_seq_len }
    }
}

impl PartialEq for Tokenizer {
    fn eq(&self, other: &Self) -> bool {
        self.vocab == other.vocab && self.split_chars == other.split_chars && self.max_seq_len == other.max_seq_len
    }
}

/// Token ids (with leading cls) and the token span `[start, end)` of each
/// word that survived truncation.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenizedSentence {
    pub lang: LangId,
    pub ids: Vec<u32>,
    pub word_spans: Vec<(usize, usize)>,
}

impl TokenizedSentence {
    pub fn word_count(&self) -> usize {
        self.word_spans.len()
    }

    pub fn word_ids(&self, word: usize) -> &[u32] {
        let (s, e) = self.word_spans[word];
        &self.ids[s..e]
    }
}

pub fn split_word(word: &str, split_chars: usize) -> Vec<String> {
    let n = word.chars().count();
    if n <= split_chars {
        return vec![word.to_owned()];
    }
    let cut = word.char_indices().nth(n.div_ceil(2)).map_or(word.len(), |(i, _)| i);
    vec![word[..cut].to_owned(), format!("##{}", &word[cut..])]
}

impl Tokenizer {
    /// Vocabulary from every piece of every word, in sorted order after the
    /// four specials.
    pub fn build<'a>(words: impl IntoIterator<Item = &'a str>, split_chars: usize, max_seq_len: usize) -> Self {
        let pieces: BTreeSet<String> = words.into_iter().flat_map(|w| split_word(w, split_chars)).collect();
        let vocab: Vec<String> = SPECIALS.iter().map(|s| s.to_string()).chain(pieces).collect();
        TokenizerRepr { vocab, split_chars, max_seq_len }.into()
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab.len()
    }

    pub fn max_seq_len(&self) -> usize {
        self.max_seq_len
    }

    pub fn split_chars(&self) -> usize {
        self.split_chars
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        self.vocab.get(id as usize).map(String::as_str)
    }

    pub fn id_of(&self, piece: &str) -> u32 {
        self.index.get(piece).copied().unwrap_or(UNK_ID)
    }

    pub fn word_ids(&self, word: &str) -> Vec<u32> {
        split_word(word, self.split_chars).iter().map(|p| self.id_of(p)).collect()
    }

    /// Prepends cls and keeps whole words while the sequence fits in
    /// `max_seq_len` tokens.
    pub fn tokenize(&self, sentence: &Sentence) -> Result<TokenizedSentence, EncoderError> {
        let mut ids = vec![CLS_ID];
        let mut word_spans = Vec::with_capacity(sentence.len());
        for w in &sentence.words {
            let pieces = self.word_ids(w);
            if ids.len() + pieces.len() > self.max_seq_len {
                break;
            }
            let start = ids.len();
            ids.extend(pieces);
            word_spans.push((start, ids.len()));
        }
        if word_spans.is_empty() {
            return Err(EncoderError::EmptyAfterTruncation);
        }
        Ok(TokenizedSentence { lang: sentence.lang, ids, word_spans })
    }
}
