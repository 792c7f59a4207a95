mod common;

use std::collections::BTreeSet;

use common::metrics::*;
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use xlse_core::corpus::{generate_corpus, CorpusConfig, LangId, LanguageSpec, ParallelPair};
use xlse_core::encoder::{Encoder, EncoderConfig, Tokenizer};
use xlse_core::evaluation::{
    count_words, export_projection, mine_bitext, mining_candidates, retrieval_accuracy, select_words, sts_spearman,
    word_vector, MiningMode, Threshold,
};

fn gold_identity(n: usize) -> BTreeSet<(usize, usize)> {
    (0..n).map(|i| (i, i)).collect()
}

#[test]
fn retrieval_matches_brute_force() {
    for seed in 0..60u64 {
        let n = 2 + (seed as usize * 7) % 49;
        let (mut a, b) = noisy_views(seed, n, 6, 0.3 + 0.2 * (seed % 4) as f64);
        if seed % 3 == 0 {
            a[0] = vec![0.0; 6];
        }
        let got = retrieval_accuracy(&a, &b).unwrap();
        let (f, r) = oracle_retrieval(&a, &b);
        assert_eq!(got.src_to_tgt, f as f64 / n as f64, "seed {seed}");
        assert_eq!(got.tgt_to_src, r as f64 / n as f64, "seed {seed}");
    }
}

#[test]
fn mining_matches_brute_force() {
    for seed in 0..60u64 {
        let n = 3 + (seed as usize * 11) % 48;
        let (a, b) = noisy_views(100 + seed, n, 5, 0.6);
        // Sources without a translation among the targets.
        let gold: BTreeSet<(usize, usize)> = (0..n).filter(|i| i % 3 != 2).map(|i| (i, i)).collect();
        let k = 1 + (seed as usize % 4);
        for (mode, margin) in [(MiningMode::Margin, true), (MiningMode::Cosine, false)] {
            let cands = mining_candidates(&a, &b, k, mode).unwrap();
            let oracle = oracle_candidates(&a, &b, k, margin);
            for (c, o) in cands.iter().zip(&oracle) {
                assert_eq!((c.src, c.tgt), (o.0, o.1), "seed {seed}");
                assert!((c.score - o.2).abs() < 1e-12);
            }
            let got = mine_bitext(&a, &b, &gold, k, mode, Threshold::Optimal).unwrap();
            let (t, tp, predicted) = oracle_threshold_sweep(&oracle, &gold);
            assert_eq!((got.prf.true_positives, got.prf.predicted, got.prf.gold), (tp, predicted, gold.len()), "seed {seed}");
            assert!((got.threshold - t).abs() < 1e-12 || got.threshold == t);
        }
    }
}

#[test]
fn spearman_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for trial in 0..80 {
        let n = 3 + trial % 48;
        // Coarse values create ties on both sides.
        let x: Vec<f64> = (0..n).map(|_| (rng.random_range(0.0..1.0f64) * 10.0).round()).collect();
        let y: Vec<f64> = x.iter().map(|v| v + (rng.random_range(-4.0..4.0f64)).round()).collect();
        if x.iter().all(|v| *v == x[0]) || y.iter().all(|v| *v == y[0]) {
            continue;
        }
        let got = sts_spearman(&x, &y).unwrap();
        assert!((got - oracle_spearman(&x, &y)).abs() <= 1e-9, "trial {trial}");
    }
}

#[test]
fn spearman_of_a_monotone_pair_is_one() {
    let x: Vec<f64> = (0..30).map(|i| (i as f64 * 0.37).sin() + i as f64).collect();
    let y: Vec<f64> = x.iter().map(|v| v.powi(3) + 2.0).collect();
    assert_eq!(sts_spearman(&x, &y).unwrap(), 1.0);
    let z: Vec<f64> = x.iter().map(|v| -v).collect();
    assert_eq!(sts_spearman(&x, &z).unwrap(), -1.0);
}

fn rows(n: usize, d: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    proptest::collection::vec(proptest::collection::vec(-1.0f64..1.0, d), n)
}

fn random_orthogonal(seed: u64, d: usize) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = DMatrix::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0));
    m.qr().q()
}

fn rotate(x: &[Vec<f64>], q: &DMatrix<f64>) -> Vec<Vec<f64>> {
    x.iter().map(|r| (0..r.len()).map(|j| (0..r.len()).map(|i| r[i] * q[(i, j)]).sum()).collect()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn retrieval_is_invariant_under_rotation(a in rows(12, 4), b in rows(12, 4), seed in 0u64..1000) {
        let q = random_orthogonal(seed, 4);
        let before = retrieval_accuracy(&a, &b).unwrap();
        let after = retrieval_accuracy(&rotate(&a, &q), &rotate(&b, &q)).unwrap();
        prop_assert_eq!(before, after);
    }

    #[test]
    fn mining_f_is_the_harmonic_mean(seed in 0u64..1000, n in 4usize..40, k in 1usize..5) {
        let (a, b) = noisy_views(seed, n, 4, 0.8);
        let gold: BTreeSet<(usize, usize)> = (0..n).filter(|i| i % 4 != 0).map(|i| (i, i)).collect();
        for t in [Threshold::Optimal, Threshold::Fixed(0.9), Threshold::Fixed(1.0)] {
            let p = mine_bitext(&a, &b, &gold, k, MiningMode::Margin, t).unwrap().prf;
            prop_assert!((0.0..=1.0).contains(&p.precision) && (0.0..=1.0).contains(&p.recall));
            let f = if p.precision + p.recall > 0.0 { 2.0 * p.precision * p.recall / (p.precision + p.recall) } else { 0.0 };
            prop_assert!((p.f1 - f).abs() < 1e-12);
        }
    }

    #[test]
    fn optimal_threshold_is_never_beaten_by_a_fixed_one(seed in 0u64..1000, t in 0.0f64..2.0) {
        let (a, b) = noisy_views(seed, 20, 4, 0.8);
        let gold = gold_identity(20);
        let best = mine_bitext(&a, &b, &gold, 3, MiningMode::Margin, Threshold::Optimal).unwrap();
        let fixed = mine_bitext(&a, &b, &gold, 3, MiningMode::Margin, Threshold::Fixed(t)).unwrap();
        // F = 2tp / (predicted + gold), compared exactly: rounding in
        // 2PR / (P + R) can split equal F values.
        let (b, f) = (best.prf, fixed.prf);
        prop_assert!(b.true_positives * (f.predicted + f.gold) >= f.true_positives * (b.predicted + b.gold));
    }

    #[test]
    fn spearman_ignores_monotone_transforms(x in proptest::collection::vec(-5.0f64..5.0, 3..40), noise in proptest::collection::vec(-1.0f64..1.0, 40)) {
        let y: Vec<f64> = x.iter().zip(&noise).map(|(a, e)| a + 2.0 * e).collect();
        prop_assume!(sts_spearman(&x, &y).is_ok());
        let tx: Vec<f64> = x.iter().map(|v| v.exp()).collect();
        let ty: Vec<f64> = y.iter().map(|v| v * v * v + v).collect();
        prop_assert_eq!(sts_spearman(&x, &y).unwrap(), sts_spearman(&tx, &ty).unwrap());
    }
}

#[test]
fn projection_export_writes_one_row_per_word() {
    let config = CorpusConfig {
        languages: vec![
            LanguageSpec { lang: LangId(1), vocab_size: 200, pair_count: 300 },
            LanguageSpec { lang: LangId(2), vocab_size: 200, pair_count: 300 },
        ],
        ..CorpusConfig::default()
    };
    let pairs: Vec<ParallelPair> = generate_corpus(&config, 2).unwrap().into_values().flatten().collect();
    let counts = count_words(&pairs);
    let tokenizer = Tokenizer::build(counts.iter().map(|c| c.word.as_str()), 8, 32);
    let enc_config = EncoderConfig { model_dim: 16, layers: 1, heads: 2, ffn_dim: 32, vocab_size: tokenizer.vocab_size(), ..Default::default() };
    let encoder = Encoder::new(enc_config, 1).unwrap();
    let chosen = select_words(&counts, 500);
    assert_eq!(chosen.len(), 500);
    for lang in 0..3 {
        let share = chosen.iter().filter(|w| w.lang == LangId(lang)).count();
        assert!((166..=167).contains(&share), "language {lang}: {share}");
    }
    let words: Vec<_> = chosen
        .into_iter()
        .map(|w| {
            let v = word_vector(&encoder, &tokenizer, &w.word).unwrap();
            (w.word, w.lang, v)
        })
        .collect();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("proj.tsv");
    let coords = export_projection(&words, &path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), 500);
    for (line, (word, lang, _)) in text.lines().zip(&words) {
        let f: Vec<&str> = line.split('\t').collect();
        assert_eq!(f.len(), 4);
        assert_eq!((f[0], f[1]), (word.as_str(), lang.to_string().as_str()));
    }
    for axis in 0..2 {
        let mean = coords.iter().map(|c| c[axis]).sum::<f64>() / coords.len() as f64;
        assert!(mean.abs() < 1e-9);
    }
}
