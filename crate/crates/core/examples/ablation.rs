//! Low-resource ablation: trains the same encoder with sentence ranking only
//! and with all three objectives, then compares dev retrieval and aligned
//! word cosine on the low-resource language pair.
//!
//! Usage: `cargo run --release --example ablation -- [steps] [seeds] [dim] [lr] [variants]`
//! where `variants` is a comma-separated subset of `tr,awp,wtr,all`.

use std::time::Instant;

use xlse_core::corpus::{generate_corpus, split_corpus, CorpusConfig, LangId, LangPair, LanguageSpec, ParallelPair};
use xlse_core::evaluation::{aligned_word_cosine, SAMPLED_WORDS};
use xlse_core::objectives::LossWeights;
use xlse_core::trainer::{train_with_progress, ModelShape, TrainConfig};

fn arg<T: std::str::FromStr>(i: usize, default: T) -> T {
    std::env::args().nth(i).and_then(|s| s.parse().ok()).unwrap_or(default)
}

fn main() {
    let steps: usize = arg(1, 600);
    let seeds: u64 = arg(2, 2);
    let dim: usize = arg(3, 32);
    let lr: f64 = arg(4, 1e-3);
    let variants: String = arg(5, "tr,all".to_string());
    let low = LangPair::new(LangId(0), LangId(2));

    let corpus_config = CorpusConfig {
        languages: vec![
            LanguageSpec { lang: LangId(1), vocab_size: 200, pair_count: 4000 },
            LanguageSpec { lang: LangId(2), vocab_size: 200, pair_count: 400 },
        ],
        ..CorpusConfig::default()
    };
    let corpus = generate_corpus(&corpus_config, 1).unwrap();
    let mut train_set: Vec<ParallelPair> = Vec::new();
    let mut dev: Vec<ParallelPair> = Vec::new();
    for (lp, pairs) in &corpus {
        let frac = if *lp == low { 0.5 } else { 0.05 };
        let (t, d) = split_corpus(pairs, frac).unwrap();
        train_set.extend(t);
        dev.extend(d);
    }
    let low_train = train_set.iter().filter(|p| p.lang_pair() == low).count();
    println!("train {} (low {low_train}, {:.1}%), dev {}", train_set.len(), 100.0 * low_train as f64 / train_set.len() as f64, dev.len());
    let low_dev: Vec<ParallelPair> = dev.iter().filter(|p| p.lang_pair() == low).cloned().collect();

    let all = [
        ("tr", LossWeights::TR_ONLY),
        ("awp", LossWeights { alpha: 0.8, beta: 0.2, gamma: 0.0 }),
        ("wtr", LossWeights { alpha: 0.8, beta: 0.0, gamma: 0.2 }),
        ("all", LossWeights::default()),
    ];
    for (name, weights) in all.into_iter().filter(|(n, _)| variants.split(',').any(|v| v == *n)) {
        for seed in 0..seeds {
            let config = TrainConfig {
                steps,
                batch_size: 64,
                lr,
                eval_every: (steps / 6).max(1),
                weights,
                seed,
                model: ModelShape { model_dim: dim, layers: 2, heads: 4, ffn_dim: 2 * dim, max_seq_len: 32, split_chars: 8 },
                ..TrainConfig::default()
            };
            let start = Instant::now();
            let out = train_with_progress(&config, &train_set, &dev, None, |r| {
                eprintln!("  {name} s{seed} step {} tr {:.4} awp {:.4} wtr {:.4} dev {:.4}", r.step, r.tr, r.awp, r.wtr, r.dev_metric)
            })
            .unwrap();
            let (enc, tok) = out.best.encoder().unwrap();
            let low_acc = out.best.dev_by_pair.iter().find(|(lp, _)| *lp == low).unwrap().1;
            let cos = aligned_word_cosine(&enc, &tok, &low_dev, SAMPLED_WORDS).unwrap();
            println!(
                "{name} seed {seed}: best step {} dev {:.4} low {:.4} cos {:.4}±{:.4} ({:.1}s)",
                out.best.step,
                out.best.dev_metric,
                low_acc,
                cos.mean,
                cos.std,
                start.elapsed().as_secs_f64()
            );
        }
    }
}
