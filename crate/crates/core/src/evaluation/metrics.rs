use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::encoder::tensor::{dot, norm};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RetrievalScores {
    pub src_to_tgt: f64,
    pub tgt_to_src: f64,
    pub mean: f64,
}

/// Rows scaled to unit length; a zero row stays zero and so has cosine 0
/// with everything.
pub(crate) fn unit_rows(x: &[Vec<f64>]) -> Vec<Vec<f64>> {
    x.iter()
        .map(|r| {
            let n = norm(r);
            if n == 0.0 {
                r.clone()
            } else {
                r.iter().map(|v| v / n).collect()
            }
        })
        .collect()
}

/// `sims[i][j] = cos(a_i, b_j)`.
pub fn cosine_matrix(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let (ua, ub) = (unit_rows(a), unit_rows(b));
    ua.iter().map(|x| ub.iter().map(|y| dot(x, y)).collect()).collect()
}

/// Index of the largest value; the first one wins ties.
fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (j, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = j;
        }
    }
    best
}

/// Nearest-neighbour accuracy by cosine, row `i` of each side being the
/// translation of row `i` of the other.
pub fn retrieval_accuracy(src: &[Vec<f64>], tgt: &[Vec<f64>]) -> Result<RetrievalScores, EvalError> {
    if src.len() != tgt.len() {
        return Err(EvalError::CountMismatch { left: src.len(), right: tgt.len() });
    }
    if src.len() < 2 {
        return Err(EvalError::TooFew { what: "retrieval items", need: 2, got: src.len() });
    }
    let sims = cosine_matrix(src, tgt);
    let n = src.len();
    let fwd = (0..n).filter(|&i| argmax(&sims[i]) == i).count();
    let bwd = (0..n)
        .filter(|&j| {
            let col: Vec<f64> = sims.iter().map(|r| r[j]).collect();
            argmax(&col) == j
        })
        .count();
    let (f, b) = (fwd as f64 / n as f64, bwd as f64 / n as f64);
    Ok(RetrievalScores { src_to_tgt: f, tgt_to_src: b, mean: 0.5 * (f + b) })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MiningMode {
    /// Cosine divided by the mean k-nearest-neighbour cosine of both sides.
    Margin,
    Cosine,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MiningCandidate {
    pub src: usize,
    pub tgt: usize,
    pub score: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub true_positives: usize,
    pub predicted: usize,
    pub gold: usize,
}

impl Prf {
    pub fn from_counts(true_positives: usize, predicted: usize, gold: usize) -> Self {
        let precision = if predicted == 0 { 0.0 } else { true_positives as f64 / predicted as f64 };
        let recall = if gold == 0 { 0.0 } else { true_positives as f64 / gold as f64 };
        let f1 = if precision + recall > 0.0 { 2.0 * precision * recall / (precision + recall) } else { 0.0 };
        Self { precision, recall, f1, true_positives, predicted, gold }
    }
}

/// Mean of the `k` largest values of a row.
fn top_k_mean(row: impl Iterator<Item = f64>, k: usize) -> f64 {
    let mut v: Vec<f64> = row.collect();
    v.sort_by(|a, b| b.total_cmp(a));
    let k = k.min(v.len());
    v[..k].iter().sum::<f64>() / k as f64
}

/// Best-scoring target for every source under the chosen scoring.
pub fn mining_candidates(a: &[Vec<f64>], b: &[Vec<f64>], k: usize, mode: MiningMode) -> Result<Vec<MiningCandidate>, EvalError> {
    if k == 0 {
        return Err(EvalError::BadParameter { name: "k", reason: "must be at least 1".into() });
    }
    if a.is_empty() || b.is_empty() {
        return Err(EvalError::TooFew { what: "mining sentences", need: 1, got: a.len().min(b.len()) });
    }
    let sims = cosine_matrix(a, b);
    let scores: Vec<Vec<f64>> = match mode {
        MiningMode::Cosine => sims,
        MiningMode::Margin => {
            let ra: Vec<f64> = sims.iter().map(|r| top_k_mean(r.iter().copied(), k)).collect();
            let rb: Vec<f64> = (0..b.len()).map(|j| top_k_mean(sims.iter().map(|r| r[j]), k)).collect();
            sims.iter()
                .enumerate()
                .map(|(i, r)| r.iter().enumerate().map(|(j, &c)| c / (0.5 * ra[i] + 0.5 * rb[j])).collect())
                .collect()
        }
    };
    Ok(scores
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let j = argmax(r);
            MiningCandidate { src: i, tgt: j, score: r[j] }
        })
        .collect())
}

/// Precision, recall and F of the candidates scoring at least `threshold`.
pub fn prf_at_threshold(cands: &[MiningCandidate], gold: &BTreeSet<(usize, usize)>, threshold: f64) -> Prf {
    let kept = cands.iter().filter(|c| c.score >= threshold);
    let (mut tp, mut predicted) = (0, 0);
    for c in kept {
        predicted += 1;
        if gold.contains(&(c.src, c.tgt)) {
            tp += 1;
        }
    }
    Prf::from_counts(tp, predicted, gold.len())
}

/// Threshold maximising F over every distinct candidate score. Ties in F go
/// to the highest threshold.
pub fn best_threshold(cands: &[MiningCandidate], gold: &BTreeSet<(usize, usize)>) -> Result<(f64, Prf), EvalError> {
    if gold.is_empty() {
        return Err(EvalError::EmptyGold);
    }
    let mut order: Vec<&MiningCandidate> = cands.iter().collect();
    order.sort_by(|x, y| y.score.total_cmp(&x.score));
    let mut best = (f64::INFINITY, Prf::from_counts(0, 0, gold.len()));
    let (mut tp, mut predicted) = (0, 0);
    let mut i = 0;
    while i < order.len() {
        let t = order[i].score;
        while i < order.len() && order[i].score == t {
            predicted += 1;
            if gold.contains(&(order[i].src, order[i].tgt)) {
                tp += 1;
            }
            i += 1;
        }
        // F = 2tp / (predicted + gold); compare exactly in integers.
        let prf = Prf::from_counts(tp, predicted, gold.len());
        if tp * (best.1.predicted + gold.len()) > best.1.true_positives * (predicted + gold.len()) {
            best = (t, prf);
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Threshold {
    /// Sweep this task's own scores for the F-maximising threshold.
    Optimal,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MiningResult {
    pub threshold: f64,
    pub prf: Prf,
}

/// Mines `a × b` and scores the result against gold `(a index, b index)`
/// pairs.
pub fn mine_bitext(
    a: &[Vec<f64>],
    b: &[Vec<f64>],
    gold: &BTreeSet<(usize, usize)>,
    k: usize,
    mode: MiningMode,
    threshold: Threshold,
) -> Result<MiningResult, EvalError> {
    if gold.is_empty() {
        return Err(EvalError::EmptyGold);
    }
    let cands = mining_candidates(a, b, k, mode)?;
    Ok(match threshold {
        Threshold::Optimal => {
            let (threshold, prf) = best_threshold(&cands, gold)?;
            MiningResult { threshold, prf }
        }
        Threshold::Fixed(t) => MiningResult { threshold: t, prf: prf_at_threshold(&cands, gold, t) },
    })
}

/// 1-based ranks, tied values sharing the mean of their positions.
pub fn average_ranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && x[idx[j + 1]] == x[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &p in &idx[i..=j] {
            ranks[p] = r;
        }
        i = j + 1;
    }
    ranks
}

pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64, EvalError> {
    if x.len() != y.len() {
        return Err(EvalError::CountMismatch { left: x.len(), right: y.len() });
    }
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(EvalError::ConstantInput);
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Spearman correlation: Pearson correlation of average ranks.
pub fn sts_spearman(similarities: &[f64], gold: &[f64]) -> Result<f64, EvalError> {
    if similarities.len() != gold.len() {
        return Err(EvalError::CountMismatch { left: similarities.len(), right: gold.len() });
    }
    if similarities.len() < 3 {
        return Err(EvalError::TooFew { what: "similarity scores", need: 3, got: similarities.len() });
    }
    pearson(&average_ranks(similarities), &average_ranks(gold))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn retrieval_identity_and_shift() {
        let x = vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]];
        assert_eq!(retrieval_accuracy(&x, &x).unwrap(), RetrievalScores { src_to_tgt: 1.0, tgt_to_src: 1.0, mean: 1.0 });
        let mut shifted = x.clone();
        shifted.rotate_left(1);
        assert_eq!(retrieval_accuracy(&x, &shifted).unwrap().mean, 0.0);
        assert!(matches!(retrieval_accuracy(&x, &x[..2]), Err(EvalError::CountMismatch { .. })));
    }

    #[test]
    fn mining_half_recall() {
        let gold: BTreeSet<_> = (0..4).map(|i| (i, i)).collect();
        let cands = [MiningCandidate { src: 0, tgt: 0, score: 1.0 }, MiningCandidate { src: 1, tgt: 1, score: 1.0 }];
        let prf = prf_at_threshold(&cands, &gold, 0.5);
        assert_eq!((prf.precision, prf.recall), (1.0, 0.5));
        assert!((prf.f1 - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn mining_clusters_are_perfect() {
        let a = vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]];
        let b = vec![vec![0.0, 0.99, 0.1], vec![1.0, 0.01, 0.0], vec![0.1, 0.0, 1.0]];
        let gold: BTreeSet<_> = [(0, 1), (1, 0), (2, 2)].into_iter().collect();
        for mode in [MiningMode::Margin, MiningMode::Cosine] {
            let r = mine_bitext(&a, &b, &gold, 2, mode, Threshold::Optimal).unwrap();
            assert_eq!((r.prf.precision, r.prf.recall, r.prf.f1), (1.0, 1.0, 1.0));
        }
        assert!(matches!(mine_bitext(&a, &b, &BTreeSet::new(), 2, MiningMode::Margin, Threshold::Optimal), Err(EvalError::EmptyGold)));
    }

    #[test]
    fn spearman_examples() {
        let x = [0.1, 0.5, 0.3, 0.9];
        assert!((sts_spearman(&x, &x).unwrap() - 1.0).abs() < 1e-15);
        let rev: Vec<f64> = x.iter().map(|v| -v).collect();
        assert!((sts_spearman(&x, &rev).unwrap() + 1.0).abs() < 1e-15);
        assert_eq!(average_ranks(&[1.0, 2.0, 2.0, 3.0]), vec![1.0, 2.5, 2.5, 4.0]);
        assert!(matches!(sts_spearman(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]), Err(EvalError::ConstantInput)));
        assert!(sts_spearman(&[1.0, 2.0], &[1.0, 2.0]).is_err());
    }
}
