mod common;

use common::*;
use proptest::prelude::*;
use xlse_core::alignment::{word_align_filtered, AlignmentProvider};
use xlse_core::objectives::{
    awp_loss, evaluate_batch, tr_loss, wtr_loss, AwpMode, BatchItem, LossWeights, ObjectiveOptions, TrOptions,
};

fn items(batch: &SmallBatch) -> Vec<BatchItem<'_>> {
    batch.tokens.iter().zip(&batch.dicts).map(|((x, y), d)| BatchItem { src: x, tgt: y, dicts: d }).collect()
}

#[test]
fn losses_match_reference_loops_on_random_batches() {
    for seed in 0..120u64 {
        let n = 2 + (seed as usize % 3);
        let batch = random_batch(seed, n, 6, 8, 1 + (seed as usize % 2), seed % 2 == 0, 0.9);
        let enc = encode_pairs(&batch);
        let src: Vec<Vec<f64>> = enc.iter().map(|(x, _)| x.h_cls.clone()).collect();
        let tgt: Vec<Vec<f64>> = enc.iter().map(|(_, y)| y.h_cls.clone()).collect();

        let tr = tr_loss(&src, &tgt, TrOptions::default()).unwrap();
        assert!((tr - oracle_tr(&src, &tgt)).abs() < 1e-6, "seed {seed}");

        let wtr = wtr_loss(&enc, &batch.dicts, 1.0).unwrap();
        assert!((wtr - oracle_wtr(&enc, &batch.dicts)).abs() < 1e-6, "seed {seed}");

        let awp = awp_loss(&batch.encoder, &batch.tokens, &batch.dicts, AwpMode::Exact).unwrap();
        assert!((awp - oracle_awp_exact(&batch.encoder, &batch.tokens, &batch.dicts)).abs() < 1e-6, "seed {seed}");
    }
}

#[test]
fn batch_evaluation_reports_the_standalone_components() {
    let batch = random_batch(7, 4, 6, 8, 2, true, 0.9);
    let enc = encode_pairs(&batch);
    let src: Vec<Vec<f64>> = enc.iter().map(|(x, _)| x.h_cls.clone()).collect();
    let tgt: Vec<Vec<f64>> = enc.iter().map(|(_, y)| y.h_cls.clone()).collect();
    let w = LossWeights::default();
    for mode in [AwpMode::Exact, AwpMode::Batched] {
        let opts = ObjectiveOptions { awp_mode: mode, ..Default::default() };
        let mut grads = batch.encoder.params.zeros_like();
        let with = evaluate_batch(&batch.encoder, &items(&batch), w, opts, Some(&mut grads)).unwrap();
        let without = evaluate_batch(&batch.encoder, &items(&batch), w, opts, None).unwrap();
        assert_eq!(with, without);
        assert!((with.tr - tr_loss(&src, &tgt, TrOptions::default()).unwrap()).abs() < 1e-12);
        assert!((with.wtr - wtr_loss(&enc, &batch.dicts, 1.0).unwrap()).abs() < 1e-12);
        assert!((with.awp - awp_loss(&batch.encoder, &batch.tokens, &batch.dicts, mode).unwrap()).abs() < 1e-12);
        assert!((with.total - (0.8 * with.tr + 0.1 * with.awp + 0.1 * with.wtr)).abs() < 1e-12);
        assert_eq!(with.n, 4);
    }
}

#[test]
fn skipping_unweighted_components_reports_zero() {
    let batch = random_batch(3, 3, 5, 8, 1, false, 0.9);
    let opts = ObjectiveOptions { skip_unweighted: true, ..Default::default() };
    let b = evaluate_batch(&batch.encoder, &items(&batch), LossWeights::TR_ONLY, opts, None).unwrap();
    assert_eq!((b.awp, b.wtr), (0.0, 0.0));
    assert_eq!(b.total, b.tr);
}

/// Sampled finite-difference check of the full weighted batch loss.
#[test]
fn batch_gradient_matches_finite_differences_on_sampled_entries() {
    let batch = random_batch(11, 3, 5, 8, 2, true, 0.9);
    let w = LossWeights::new(0.5, 0.3, 0.2).unwrap();
    let opts = ObjectiveOptions { awp_mode: AwpMode::Batched, ..Default::default() };
    let mut grads = batch.encoder.params.zeros_like();
    evaluate_batch(&batch.encoder, &items(&batch), w, opts, Some(&mut grads)).unwrap();
    let analytic: Vec<Vec<f64>> = grads.named_tensors().iter().map(|(_, t)| t.data().to_vec()).collect();
    let h = 1e-5;
    for (ti, g) in analytic.iter().enumerate() {
        for k in (0..g.len()).step_by(7) {
            let total = |d: f64| {
                let mut b = SmallBatch { encoder: batch.encoder.clone(), pairs: vec![], tokens: batch.tokens.clone(), dicts: batch.dicts.clone() };
                b.encoder.params.tensors_mut()[ti].data_mut()[k] += d;
                evaluate_batch(&b.encoder, &items(&b), w, opts, None).unwrap().total
            };
            let num = (total(h) - total(-h)) / (2.0 * h);
            let rel = (num - g[k]).abs() / num.abs().max(g[k].abs()).max(1e-4);
            assert!(rel < 1e-4, "tensor {ti}[{k}]: {} vs {num}", g[k]);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn losses_ignore_batch_order(seed in 0u64..1000, rot in 1usize..4) {
        let batch = random_batch(seed, 4, 5, 8, 1, false, 0.9);
        let mut shuffled = SmallBatch { encoder: batch.encoder.clone(), pairs: batch.pairs.clone(), tokens: batch.tokens.clone(), dicts: batch.dicts.clone() };
        shuffled.tokens.rotate_left(rot);
        shuffled.dicts.rotate_left(rot);
        let opts = ObjectiveOptions { awp_mode: AwpMode::Exact, ..Default::default() };
        let a = evaluate_batch(&batch.encoder, &items(&batch), LossWeights::default(), opts, None).unwrap();
        let b = evaluate_batch(&shuffled.encoder, &items(&shuffled), LossWeights::default(), opts, None).unwrap();
        prop_assert!((a.tr - b.tr).abs() < 1e-6);
        prop_assert!((a.awp - b.awp).abs() < 1e-6);
        prop_assert!((a.wtr - b.wtr).abs() < 1e-6);
    }

    #[test]
    fn raising_the_threshold_never_adds_terms(seed in 0u64..1000, t1 in 0.0f64..1.0, t2 in 0.0f64..1.0) {
        let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
        let batch = random_batch(seed, 3, 6, 8, 1, false, 0.0);
        for p in &batch.pairs {
            let a = word_align_filtered(p, AlignmentProvider::Gold, lo).unwrap();
            let b = word_align_filtered(p, AlignmentProvider::Gold, hi).unwrap();
            prop_assert!(b.forward.len() <= a.forward.len());
            prop_assert!(b.backward.len() <= a.backward.len());
        }
    }
}
