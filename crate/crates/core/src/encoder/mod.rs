//! Tokenizer and a small trainable transformer encoder.
//!
//! Sentences are encoded one at a time (no padding), so a batch is just a
//! sequence of independent forward passes and batch order can never leak
//! into a sentence's states.

mod checkpoint;
mod model;
pub mod tensor;
mod tokenizer;

use thiserror::Error;

use crate::corpus::LangId;

pub use checkpoint::{load_model, save_model, ModelFile};
pub use model::{Encoder, EncoderConfig, EncoderParams, ForwardPass, LayerNorm, LayerParams, Linear};
pub use tensor::Matrix;
pub use tokenizer::{split_word, TokenizedSentence, Tokenizer, CLS_ID, MASK_ID, PAD_ID, UNK_ID};

#[derive(Debug, Error)]
pub enum EncoderError {
    #[error("sentence is empty after truncation")]
    EmptyAfterTruncation,
    #[error("sequence length {len} outside 1..={max}")]
    SequenceLength { len: usize, max: usize },
    #[error("token id {0} outside the vocabulary")]
    UnknownToken(u32),
    #[error("unknown language id {0}")]
    UnknownLanguage(LangId),
    #[error("language id required when the language embedding is enabled")]
    MissingLanguage,
    #[error("word index {index} out of range for {count} words")]
    WordIndex { index: usize, count: usize },
    #[error("invalid encoder config: {field}: {reason}")]
    Config { field: &'static str, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("checkpoint format: {0}")]
    Json(#[from] serde_json::Error),
}

/// Last-layer states of one sentence.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedSentence {
    /// State at the cls position, used directly as the sentence vector.
    pub h_cls: Vec<f64>,
    pub h_tokens: Matrix,
    pub word_spans: Vec<(usize, usize)>,
}

impl EncodedSentence {
    pub fn word_count(&self) -> usize {
        self.word_spans.len()
    }

    /// Hidden states of the word's token span, one row per token.
    pub fn word_states(&self, word: usize) -> Result<Matrix, EncoderError> {
        let &(s, e) = self
            .word_spans
            .get(word)
            .ok_or(EncoderError::WordIndex { index: word, count: self.word_spans.len() })?;
        Ok(self.h_tokens.slice_rows(s, e))
    }
}

impl Encoder {
    /// Encodes a tokenized sentence, passing its language only when the model
    /// has a language table.
    pub fn encode_sentence(&self, sentence: &TokenizedSentence) -> Result<EncodedSentence, EncoderError> {
        let lang = self.config.use_language_embedding.then_some(sentence.lang);
        let h_tokens = self.encode(&sentence.ids, lang)?;
        Ok(EncodedSentence { h_cls: h_tokens.row(0).to_vec(), h_tokens, word_spans: sentence.word_spans.clone() })
    }

    pub fn encode_batch(&self, sentences: &[TokenizedSentence]) -> Result<Vec<EncodedSentence>, EncoderError> {
        sentences.iter().map(|s| self.encode_sentence(s)).collect()
    }

    /// Sentence vectors for a list of tokenized sentences.
    pub fn embed_all(&self, sentences: &[TokenizedSentence]) -> Result<Vec<Vec<f64>>, EncoderError> {
        sentences.iter().map(|s| Ok(self.encode_sentence(s)?.h_cls)).collect()
    }
}
