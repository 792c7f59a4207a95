use serde::{Deserialize, Serialize};

use super::{phi, phi_grad, phi_m_span, phi_m_span_grad, ObjectiveError};
use crate::alignment::{AlignmentDict, DictPair};
use crate::encoder::{tensor, EncodedSentence, Matrix};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrOptions {
    /// Multiplier on cosines inside the softmax; 1 keeps raw cosines.
    pub scale: f64,
    /// Average the source-query and target-query directions.
    pub bidirectional: bool,
}

impl Default for TrOptions {
    fn default() -> Self {
        Self { scale: 1.0, bidirectional: false }
    }
}

pub struct TrGrad {
    pub loss: f64,
    pub d_src: Vec<Vec<f64>>,
    pub d_tgt: Vec<Vec<f64>>,
}

fn check_batch(src: &[Vec<f64>], tgt: &[Vec<f64>]) -> Result<(), ObjectiveError> {
    if src.len() != tgt.len() {
        return Err(ObjectiveError::LengthMismatch { what: "batch sides", left: src.len(), right: tgt.len() });
    }
    if src.len() < 2 {
        return Err(ObjectiveError::BatchTooSmall(src.len()));
    }
    Ok(())
}

/// Mean in-batch softmax cross-entropy, each source ranking its own target
/// against every other target of the batch.
pub fn tr_loss(src: &[Vec<f64>], tgt: &[Vec<f64>], opts: TrOptions) -> Result<f64, ObjectiveError> {
    check_batch(src, tgt)?;
    let one_way = |q: &[Vec<f64>], c: &[Vec<f64>]| -> Result<f64, ObjectiveError> {
        let mut total = 0.0;
        for (i, qi) in q.iter().enumerate() {
            let scores = c.iter().map(|cj| Ok(opts.scale * phi(qi, cj)?)).collect::<Result<Vec<_>, ObjectiveError>>()?;
            total += tensor::log_sum_exp(&scores) - scores[i];
        }
        Ok(total / q.len() as f64)
    };
    let fwd = one_way(src, tgt)?;
    if opts.bidirectional {
        Ok(0.5 * (fwd + one_way(tgt, src)?))
    } else {
        Ok(fwd)
    }
}

pub fn tr_loss_grad(src: &[Vec<f64>], tgt: &[Vec<f64>], opts: TrOptions) -> Result<TrGrad, ObjectiveError> {
    check_batch(src, tgt)?;
    let n = src.len();
    let zeros = |v: &[Vec<f64>]| v.iter().map(|r| vec![0.0; r.len()]).collect::<Vec<_>>();
    let mut d_src = zeros(src);
    let mut d_tgt = zeros(tgt);
    let dir_weight = if opts.bidirectional { 0.5 } else { 1.0 };

    let one_way = |q: &[Vec<f64>], c: &[Vec<f64>], dq: &mut [Vec<f64>], dc: &mut [Vec<f64>]| -> Result<f64, ObjectiveError> {
        let mut total = 0.0;
        for i in 0..n {
            let mut grads = Vec::with_capacity(n);
            let mut scores = Vec::with_capacity(n);
            for cj in c {
                let (cos, gq, gc) = phi_grad(&q[i], cj)?;
                scores.push(opts.scale * cos);
                grads.push((gq, gc));
            }
            total += tensor::log_sum_exp(&scores) - scores[i];
            let mut p = scores;
            tensor::softmax_in_place(&mut p);
            for (j, (gq, gc)) in grads.iter().enumerate() {
                let ds = (p[j] - if i == j { 1.0 } else { 0.0 }) * opts.scale * dir_weight / n as f64;
                dq[i].iter_mut().zip(gq).for_each(|(a, g)| *a += ds * g);
                dc[j].iter_mut().zip(gc).for_each(|(a, g)| *a += ds * g);
            }
        }
        Ok(total / n as f64)
    };
    let mut loss = one_way(src, tgt, &mut d_src, &mut d_tgt)?;
    if opts.bidirectional {
        loss = 0.5 * (loss + one_way(tgt, src, &mut d_tgt, &mut d_src)?);
    }
    Ok(TrGrad { loss, d_src, d_tgt })
}

/// Links whose words both survived tokenizer truncation.
pub(crate) fn usable_links<'a>(
    dict: &'a AlignmentDict,
    ctx_words: usize,
    tgt_words: usize,
) -> impl Iterator<Item = (usize, usize)> + 'a {
    dict.iter().filter(move |&(j, k, _)| j < ctx_words && k < tgt_words).map(|(j, k, _)| (j, k))
}

/// Sum over aligned words of the word-level ranking loss: the aligned target
/// word against every other word of the same target sentence.
pub fn wtr_direction(ctx: &EncodedSentence, tgt: &EncodedSentence, dict: &AlignmentDict, scale: f64) -> Result<f64, ObjectiveError> {
    let mut total = 0.0;
    for (j, k) in usable_links(dict, ctx.word_count(), tgt.word_count()) {
        let scores = tgt
            .word_spans
            .iter()
            .map(|&span| Ok(scale * phi_m_span(&ctx.h_tokens, ctx.word_spans[j], &tgt.h_tokens, span)?))
            .collect::<Result<Vec<_>, ObjectiveError>>()?;
        total += tensor::log_sum_exp(&scores) - scores[k];
    }
    Ok(total)
}

fn wtr_direction_grad(
    ctx: &EncodedSentence,
    tgt: &EncodedSentence,
    dict: &AlignmentDict,
    scale: f64,
    upstream: f64,
    d_ctx: &mut Matrix,
    d_tgt: &mut Matrix,
) -> Result<f64, ObjectiveError> {
    let mut total = 0.0;
    for (j, k) in usable_links(dict, ctx.word_count(), tgt.word_count()) {
        let cs = ctx.word_spans[j];
        let mut p = tgt
            .word_spans
            .iter()
            .map(|&span| Ok(scale * phi_m_span(&ctx.h_tokens, cs, &tgt.h_tokens, span)?))
            .collect::<Result<Vec<_>, ObjectiveError>>()?;
        total += tensor::log_sum_exp(&p) - p[k];
        tensor::softmax_in_place(&mut p);
        for (n, &span) in tgt.word_spans.iter().enumerate() {
            let ds = (p[n] - if n == k { 1.0 } else { 0.0 }) * scale * upstream;
            if ds != 0.0 {
                phi_m_span_grad(&ctx.h_tokens, cs, &tgt.h_tokens, span, ds, d_ctx, d_tgt)?;
            }
        }
    }
    Ok(total)
}

pub struct WtrGrad {
    /// Unnormalised sum over both directions.
    pub loss: f64,
    pub d_src: Matrix,
    pub d_tgt: Matrix,
}

/// Both directions of one pair; gradients are of `upstream * loss`.
pub fn wtr_pair_grad(
    src: &EncodedSentence,
    tgt: &EncodedSentence,
    dicts: &DictPair,
    scale: f64,
    upstream: f64,
) -> Result<WtrGrad, ObjectiveError> {
    let mut d_src = Matrix::zeros(src.h_tokens.rows(), src.h_tokens.cols());
    let mut d_tgt = Matrix::zeros(tgt.h_tokens.rows(), tgt.h_tokens.cols());
    let fwd = wtr_direction_grad(src, tgt, &dicts.forward, scale, upstream, &mut d_src, &mut d_tgt)?;
    let bwd = wtr_direction_grad(tgt, src, &dicts.backward, scale, upstream, &mut d_tgt, &mut d_src)?;
    Ok(WtrGrad { loss: fwd + bwd, d_src, d_tgt })
}

/// Batch form: both directions summed over pairs, divided by `2N`.
pub fn wtr_loss(pairs: &[(EncodedSentence, EncodedSentence)], dicts: &[DictPair], scale: f64) -> Result<f64, ObjectiveError> {
    if pairs.len() != dicts.len() {
        return Err(ObjectiveError::LengthMismatch { what: "pairs and dictionaries", left: pairs.len(), right: dicts.len() });
    }
    if pairs.is_empty() {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for ((x, y), d) in pairs.iter().zip(dicts) {
        total += wtr_direction(x, y, &d.forward, scale)? + wtr_direction(y, x, &d.backward, scale)?;
    }
    Ok(total / (2 * pairs.len()) as f64)
}
