use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{TrainConfig, TrainError};
use crate::corpus::LangPair;
use crate::encoder::{Encoder, ModelFile, Tokenizer};
use crate::evaluation::WordCount;

/// Best model of a run with the dev score it was selected by.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Checkpoint {
    pub step: usize,
    /// Dev similarity-search accuracy in `[0, 1]`.
    pub dev_metric: f64,
    /// Dev accuracy of each language pair at that step.
    pub dev_by_pair: Vec<(LangPair, f64)>,
    pub model: ModelFile,
    /// Word frequencies of the training corpus, used to pick exported words.
    pub lexicon: Vec<WordCount>,
    pub train_config: TrainConfig,
}

impl Checkpoint {
    pub fn encoder(&self) -> Result<(Encoder, Tokenizer), TrainError> {
        Ok((self.model.to_encoder()?, self.model.tokenizer.clone()))
    }

    pub fn save(&self, path: &Path) -> Result<(), TrainError> {
        let mut w = BufWriter::new(File::create(path)?);
        serde_json::to_writer(&mut w, self)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, TrainError> {
        let c: Checkpoint = serde_json::from_reader(BufReader::new(File::open(path)?))?;
        c.model.to_encoder()?;
        Ok(c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub step: usize,
    pub tr: f64,
    pub awp: f64,
    pub wtr: f64,
    pub total: f64,
    pub dev_metric: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsLog {
    pub rows: Vec<MetricsRow>,
}

impl MetricsLog {
    /// `step<TAB>tr<TAB>awp<TAB>wtr<TAB>total<TAB>dev_metric`, one row per line.
    pub fn to_tsv(&self) -> String {
        let mut s = String::new();
        for r in &self.rows {
            let _ = writeln!(s, "{}\t{}\t{}\t{}\t{}\t{}", r.step, r.tr, r.awp, r.wtr, r.total, r.dev_metric);
        }
        s
    }

    pub fn save(&self, path: &Path) -> Result<(), TrainError> {
        std::fs::write(path, self.to_tsv())?;
        Ok(())
    }

    pub fn best_dev_metric(&self) -> Option<f64> {
        self.rows.iter().map(|r| r.dev_metric).reduce(f64::max)
    }
}
