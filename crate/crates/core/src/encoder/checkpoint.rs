use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Encoder, EncoderConfig, EncoderError, EncoderParams, Matrix, Tokenizer};

/// Self-describing model file: config, vocabulary and named weights.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelFile {
    pub config: EncoderConfig,
    pub tokenizer: Tokenizer,
    pub weights: Vec<NamedTensor>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NamedTensor {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl ModelFile {
    pub fn new(encoder: &Encoder, tokenizer: &Tokenizer) -> Self {
        let weights = encoder
            .params
            .named_tensors()
            .into_iter()
            .map(|(name, t)| NamedTensor { name, rows: t.rows(), cols: t.cols(), data: t.data().to_vec() })
            .collect();
        Self { config: encoder.config.clone(), tokenizer: tokenizer.clone(), weights }
    }

    /// Rebuilds the encoder, checking every name and shape against the config.
    pub fn to_encoder(&self) -> Result<Encoder, EncoderError> {
        self.config.validate()?;
        if self.tokenizer.vocab_size() != self.config.vocab_size {
            return Err(EncoderError::Config {
                field: "vocab_size",
                reason: format!("config says {}, tokenizer has {}", self.config.vocab_size, self.tokenizer.vocab_size()),
            });
        }
        let mut params = EncoderParams::zeros(&self.config);
        let names: Vec<String> = params.named_tensors().into_iter().map(|(n, _)| n).collect();
        if names.len() != self.weights.len() {
            return Err(EncoderError::Config {
                field: "weights",
                reason: format!("expected {} tensors, found {}", names.len(), self.weights.len()),
            });
        }
        for ((name, slot), w) in names.iter().zip(params.tensors_mut()).zip(&self.weights) {
            if &w.name != name || (w.rows, w.cols) != slot.shape() || w.data.len() != w.rows * w.cols {
                return Err(EncoderError::Config {
                    field: "weights",
                    reason: format!("tensor {} does not match expected {name} {:?}", w.name, slot.shape()),
                });
            }
            *slot = Matrix::from_vec(w.rows, w.cols, w.data.clone());
        }
        Encoder::from_params(self.config.clone(), params)
    }
}

pub fn save_model(path: &Path, encoder: &Encoder, tokenizer: &Tokenizer) -> Result<(), EncoderError> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer(&mut w, &ModelFile::new(encoder, tokenizer))?;
    w.flush()?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<(Encoder, Tokenizer), EncoderError> {
    let file: ModelFile = serde_json::from_reader(BufReader::new(File::open(path)?))?;
    Ok((file.to_encoder()?, file.tokenizer))
}
