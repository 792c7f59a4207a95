//! Double-loop reference implementations of the evaluation metrics.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Cosine with the convention that a zero vector scores 0.
pub fn safe_cosine(u: &[f64], v: &[f64]) -> f64 {
    let (mut uv, mut uu, mut vv) = (0.0, 0.0, 0.0);
    for i in 0..u.len() {
        uv += u[i] * v[i];
        uu += u[i] * u[i];
        vv += v[i] * v[i];
    }
    if uu == 0.0 || vv == 0.0 {
        0.0
    } else {
        uv / (uu.sqrt() * vv.sqrt())
    }
}

/// Correct when no other candidate beats the translation, earlier
/// candidates winning exact ties.
pub fn oracle_retrieval(src: &[Vec<f64>], tgt: &[Vec<f64>]) -> (usize, usize) {
    let n = src.len();
    let mut fwd = 0;
    let mut bwd = 0;
    for i in 0..n {
        let own = safe_cosine(&src[i], &tgt[i]);
        let beaten = (0..n).any(|j| {
            let c = safe_cosine(&src[i], &tgt[j]);
            j != i && (c > own || (c == own && j < i))
        });
        if !beaten {
            fwd += 1;
        }
        let beaten = (0..n).any(|j| {
            let c = safe_cosine(&src[j], &tgt[i]);
            j != i && (c > own || (c == own && j < i))
        });
        if !beaten {
            bwd += 1;
        }
    }
    (fwd, bwd)
}

fn top_k_mean(mut v: Vec<f64>, k: usize) -> f64 {
    let mut total = 0.0;
    let k = k.min(v.len());
    for _ in 0..k {
        let mut best = 0;
        for j in 1..v.len() {
            if v[j] > v[best] {
                best = j;
            }
        }
        total += v[best];
        v.remove(best);
    }
    total / k as f64
}

/// Forward best candidate of every source under ratio-margin (or plain
/// cosine) scoring: `(src, tgt, score)`.
pub fn oracle_candidates(a: &[Vec<f64>], b: &[Vec<f64>], k: usize, margin: bool) -> Vec<(usize, usize, f64)> {
    let mut out = Vec::new();
    for i in 0..a.len() {
        let mut best: Option<(usize, f64)> = None;
        for j in 0..b.len() {
            let c = safe_cosine(&a[i], &b[j]);
            let score = if margin {
                let ra = top_k_mean(b.iter().map(|y| safe_cosine(&a[i], y)).collect(), k);
                let rb = top_k_mean(a.iter().map(|x| safe_cosine(x, &b[j])).collect(), k);
                c / ((ra + rb) / 2.0)
            } else {
                c
            };
            if best.is_none_or(|(_, s)| score > s) {
                best = Some((j, score));
            }
        }
        let (j, s) = best.unwrap();
        out.push((i, j, s));
    }
    out
}

/// `(threshold, true positives, predicted)` maximising F over every
/// candidate score; the highest threshold wins ties.
pub fn oracle_threshold_sweep(cands: &[(usize, usize, f64)], gold: &BTreeSet<(usize, usize)>) -> (f64, usize, usize) {
    let g = gold.len();
    let mut best = (f64::INFINITY, 0, 0);
    for &(_, _, t) in cands {
        let kept: Vec<_> = cands.iter().filter(|c| c.2 >= t).collect();
        let tp = kept.iter().filter(|c| gold.contains(&(c.0, c.1))).count();
        // F = 2tp / (kept + gold), compared as exact fractions.
        let (lhs, rhs) = (tp * (best.2 + g), best.1 * (kept.len() + g));
        if lhs > rhs || (lhs == rhs && tp > 0 && t > best.0) {
            best = (t, tp, kept.len());
        }
    }
    best
}

/// Ranks by counting: `1 + #smaller + (#equal - 1) / 2`.
pub fn oracle_ranks(x: &[f64]) -> Vec<f64> {
    x.iter()
        .map(|&v| {
            let smaller = x.iter().filter(|&&w| w < v).count();
            let equal = x.iter().filter(|&&w| w == v).count();
            1.0 + smaller as f64 + (equal as f64 - 1.0) / 2.0
        })
        .collect()
}

pub fn oracle_spearman(x: &[f64], y: &[f64]) -> f64 {
    let (rx, ry) = (oracle_ranks(x), oracle_ranks(y));
    let n = x.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut dx = 0.0;
    let mut dy = 0.0;
    for i in 0..x.len() {
        num += (rx[i] - mx) * (ry[i] - my);
        dx += (rx[i] - mx).powi(2);
        dy += (ry[i] - my).powi(2);
    }
    num / (dx * dy).sqrt()
}

/// Noisy copies of shared anchors, so retrieval and mining are neither
/// trivial nor hopeless. Every fifth target row repeats the previous one to
/// create exact ties.
pub fn noisy_views(seed: u64, n: usize, d: usize, noise: f64) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut a: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut b: Vec<Vec<f64>> = Vec::with_capacity(n);
    for i in 0..n {
        let anchor: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let view = |rng: &mut ChaCha8Rng| -> Vec<f64> { anchor.iter().map(|x| x + noise * rng.random_range(-1.0..1.0)).collect() };
        a.push(view(&mut rng));
        let v = view(&mut rng);
        b.push(if i % 5 == 4 { b[i - 1].clone() } else { v });
    }
    (a, b)
}
