use serde::{Deserialize, Serialize};

use super::awp::{awp_direction, AwpMode};
use super::ranking::{tr_loss, tr_loss_grad, wtr_direction, wtr_pair_grad, TrOptions};
use super::{combined_loss, BatchLosses, LossWeights, ObjectiveError};
use crate::alignment::DictPair;
use crate::encoder::{EncodedSentence, Encoder, EncoderParams, Matrix, TokenizedSentence};

/// One parallel pair with its filtered dictionaries.
#[derive(Debug, Clone, Copy)]
pub struct BatchItem<'a> {
    pub src: &'a TokenizedSentence,
    pub tgt: &'a TokenizedSentence,
    pub dicts: &'a DictPair,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ObjectiveOptions {
    pub tr: TrOptions,
    /// Multiplier on word-level cosines; 1 keeps raw cosines.
    pub wtr_scale: f64,
    pub awp_mode: AwpMode,
    /// Skip components whose weight is zero; they are then reported as 0.
    pub skip_unweighted: bool,
}

impl Default for ObjectiveOptions {
    fn default() -> Self {
        Self { tr: TrOptions::default(), wtr_scale: 1.0, awp_mode: AwpMode::Batched, skip_unweighted: false }
    }
}

/// Computes all three losses for a batch and, when `grads` is given,
/// accumulates the gradient of the weighted total into it.
pub fn evaluate_batch(
    encoder: &Encoder,
    items: &[BatchItem<'_>],
    weights: LossWeights,
    opts: ObjectiveOptions,
    mut grads: Option<&mut EncoderParams>,
) -> Result<BatchLosses, ObjectiveError> {
    weights.validate()?;
    let n = items.len();
    if n < 2 {
        return Err(ObjectiveError::BatchTooSmall(n));
    }
    let wanted = |w: f64| !(opts.skip_unweighted && w == 0.0);
    let lang_of = |t: &TokenizedSentence| encoder.config.use_language_embedding.then_some(t.lang);
    let norm = 1.0 / (2 * n) as f64;

    let mut passes = Vec::with_capacity(2 * n);
    let mut encoded = Vec::with_capacity(2 * n);
    for item in items {
        for t in [item.src, item.tgt] {
            let pass = encoder.forward(&t.ids, lang_of(t))?;
            encoded.push(EncodedSentence {
                h_cls: pass.states.row(0).to_vec(),
                h_tokens: pass.states.clone(),
                word_spans: t.word_spans.clone(),
            });
            passes.push(pass);
        }
    }
    let mut d_states: Vec<Matrix> = encoded.iter().map(|e| Matrix::zeros(e.h_tokens.rows(), e.h_tokens.cols())).collect();

    let src_cls: Vec<Vec<f64>> = encoded.iter().step_by(2).map(|e| e.h_cls.clone()).collect();
    let tgt_cls: Vec<Vec<f64>> = encoded.iter().skip(1).step_by(2).map(|e| e.h_cls.clone()).collect();
    let tr = if !wanted(weights.alpha) {
        0.0
    } else if grads.is_some() && weights.alpha > 0.0 {
        let g = tr_loss_grad(&src_cls, &tgt_cls, opts.tr)?;
        for i in 0..n {
            let (ds, dt) = (&g.d_src[i], &g.d_tgt[i]);
            d_states[2 * i].row_mut(0).iter_mut().zip(ds).for_each(|(a, b)| *a += weights.alpha * b);
            d_states[2 * i + 1].row_mut(0).iter_mut().zip(dt).for_each(|(a, b)| *a += weights.alpha * b);
        }
        g.loss
    } else {
        tr_loss(&src_cls, &tgt_cls, opts.tr)?
    };

    let mut wtr = 0.0;
    if wanted(weights.gamma) {
        for (i, item) in items.iter().enumerate() {
            let (x, y) = (&encoded[2 * i], &encoded[2 * i + 1]);
            if grads.is_some() && weights.gamma > 0.0 {
                let g = wtr_pair_grad(x, y, item.dicts, opts.wtr_scale, weights.gamma * norm)?;
                wtr += g.loss;
                d_states[2 * i].add_assign(&g.d_src);
                d_states[2 * i + 1].add_assign(&g.d_tgt);
            } else {
                wtr += wtr_direction(x, y, &item.dicts.forward, opts.wtr_scale)?;
                wtr += wtr_direction(y, x, &item.dicts.backward, opts.wtr_scale)?;
            }
        }
        wtr *= norm;
    }

    if let Some(g) = grads.as_mut() {
        for (pass, d) in passes.iter().zip(&d_states) {
            encoder.backward(pass, d, g);
        }
    }

    let mut awp = 0.0;
    if wanted(weights.beta) {
        // A zero weight still reports the value but leaves the buffer alone.
        let mut grads = grads.filter(|_| weights.beta > 0.0);
        for item in items {
            let scale = weights.beta * norm;
            let g = grads.as_mut().map(|g| (&mut **g, scale));
            awp += awp_direction(encoder, item.src, item.tgt, &item.dicts.forward, opts.awp_mode, g)?;
            let g = grads.as_mut().map(|g| (&mut **g, scale));
            awp += awp_direction(encoder, item.tgt, item.src, &item.dicts.backward, opts.awp_mode, g)?;
        }
        awp *= norm;
    }

    combined_loss(tr, awp, wtr, n, weights)
}
