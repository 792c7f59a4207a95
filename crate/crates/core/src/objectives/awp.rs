use serde::{Deserialize, Serialize};

use super::ranking::usable_links;
use super::ObjectiveError;
use crate::alignment::{AlignmentDict, DictPair};
use crate::encoder::{tensor, Encoder, EncoderParams, Matrix, TokenizedSentence, MASK_ID};

/// How masked passes are grouped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AwpMode {
    /// One pass per direction with every aligned word masked at once.
    Batched,
    /// One pass per aligned word, only that word masked.
    Exact,
}

/// Masks the listed context words and scores each one's clipped span
/// against the tokens of its aligned target word. Returns the sum over words
/// of the mean cross-entropy over that word's scored positions; with `grad`
/// set, accumulates `scale * d(sum)` into the buffer.
fn masked_pass(
    encoder: &Encoder,
    ctx: &TokenizedSentence,
    tgt: &TokenizedSentence,
    links: &[(usize, usize)],
    grad: Option<(&mut EncoderParams, f64)>,
) -> Result<f64, ObjectiveError> {
    if links.is_empty() {
        return Ok(0.0);
    }
    let mut ids = ctx.ids.clone();
    let mut positions = Vec::new();
    let mut targets = Vec::new();
    let mut weights = Vec::new();
    for &(j, k) in links {
        let (s, e) = ctx.word_spans[j];
        ids[s..e].iter_mut().for_each(|t| *t = MASK_ID);
        let tgt_ids = tgt.word_ids(k);
        let m = (e - s).min(tgt_ids.len());
        for t in 0..m {
            positions.push(s + t);
            targets.push(tgt_ids[t] as usize);
            weights.push(1.0 / m as f64);
        }
    }
    let lang = encoder.config.use_language_embedding.then_some(ctx.lang);
    let pass = encoder.forward(&ids, lang)?;
    let logits = encoder.mlm_head(&pass.states, &positions);

    let mut loss = 0.0;
    let mut d_logits = Matrix::zeros(positions.len(), logits.cols());
    for r in 0..positions.len() {
        let row = logits.row(r);
        loss += weights[r] * (tensor::log_sum_exp(row) - row[targets[r]]);
        let mut p = row.to_vec();
        tensor::softmax_in_place(&mut p);
        p[targets[r]] -= 1.0;
        d_logits.row_mut(r).copy_from_slice(&p);
        d_logits.row_mut(r).iter_mut().for_each(|g| *g *= weights[r]);
    }
    if let Some((grads, scale)) = grad {
        d_logits.scale(scale);
        let mut d_states = Matrix::zeros(pass.states.rows(), pass.states.cols());
        encoder.mlm_head_backward(&pass.states, &positions, &d_logits, &mut d_states, grads);
        encoder.backward(&pass, &d_states, grads);
    }
    Ok(loss)
}

/// One direction of the aligned-word loss for a pair: the context sentence
/// predicts, at each masked aligned word, the tokens of its target word.
pub fn awp_direction(
    encoder: &Encoder,
    ctx: &TokenizedSentence,
    tgt: &TokenizedSentence,
    dict: &AlignmentDict,
    mode: AwpMode,
    mut grad: Option<(&mut EncoderParams, f64)>,
) -> Result<f64, ObjectiveError> {
    let links: Vec<(usize, usize)> = usable_links(dict, ctx.word_count(), tgt.word_count()).collect();
    match mode {
        AwpMode::Batched => masked_pass(encoder, ctx, tgt, &links, grad),
        AwpMode::Exact => {
            let mut total = 0.0;
            for link in &links {
                let g = grad.as_mut().map(|(buf, s)| (&mut **buf, *s));
                total += masked_pass(encoder, ctx, tgt, std::slice::from_ref(link), g)?;
            }
            Ok(total)
        }
    }
}

/// Batch form: both directions summed over pairs, divided by `2N`.
pub fn awp_loss(
    encoder: &Encoder,
    pairs: &[(TokenizedSentence, TokenizedSentence)],
    dicts: &[DictPair],
    mode: AwpMode,
) -> Result<f64, ObjectiveError> {
    if pairs.len() != dicts.len() {
        return Err(ObjectiveError::LengthMismatch { what: "pairs and dictionaries", left: pairs.len(), right: dicts.len() });
    }
    if pairs.is_empty() {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for ((x, y), d) in pairs.iter().zip(dicts) {
        total += awp_direction(encoder, x, y, &d.forward, mode, None)?;
        total += awp_direction(encoder, y, x, &d.backward, mode, None)?;
    }
    Ok(total / (2 * pairs.len()) as f64)
}
