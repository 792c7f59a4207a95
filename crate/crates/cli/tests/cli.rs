use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use xlse_core::alignment::load_alignments;
use xlse_core::corpus::{load_parallel, LangId, LangPair};

const SMALL_CONFIG: &str = r#"
seed = 4
dev_fraction = 0.2
export_words = 30

[corpus]
pivot_vocab_size = 30
languages = [
    { lang = 1, vocab_size = 30, pair_count = 80 },
    { lang = 2, vocab_size = 30, pair_count = 40 },
]

[train]
steps = 4
batch_size = 8
lr = 0.001
eval_every = 2

[train.model]
model_dim = 8
layers = 1
heads = 2
ffn_dim = 16

[eval]
aligned_pairs = 50
"#;

fn xlse(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_xlse")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = xlse(args);
    assert!(
        out.status.success(),
        "xlse {:?} failed: {}",
        args,
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn write_config(dir: &Path) -> PathBuf {
    let path = dir.join("run.toml");
    std::fs::write(&path, SMALL_CONFIG).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn full_pipeline_produces_a_report_for_both_language_pairs() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path());
    let corpus = dir.path().join("corpus");
    let run = dir.path().join("run");
    ok(&["gen-corpus", "--config", s(&config), "--out", s(&corpus)]);
    assert!(corpus.join("config.toml").is_file());

    let align = dir.path().join("align.tsv");
    ok(&["align", "--config", s(&config), "--corpus", s(&corpus.join("train.tsv")), "--out", s(&align)]);

    ok(&[
        "train",
        "--config",
        s(&config),
        "--corpus",
        s(&corpus),
        "--provider",
        "file",
        "--alignments",
        s(&align),
        "--out",
        s(&run),
    ]);
    for f in ["checkpoint.json", "metrics.tsv", "config.toml"] {
        assert!(run.join(f).is_file(), "missing {f}");
    }
    let recorded = std::fs::read_to_string(run.join("config.toml")).unwrap();
    assert!(recorded.contains("provider = \"file\""));

    let report = dir.path().join("report.txt");
    ok(&[
        "eval",
        "--config",
        s(&config),
        "--checkpoint",
        s(&run.join("checkpoint.json")),
        "--corpus",
        s(&corpus.join("dev.tsv")),
        "--out",
        s(&report),
    ]);
    let text = std::fs::read_to_string(&report).unwrap();
    for lp in ["0-1", "0-2"] {
        assert!(
            text.lines().any(|l| l.starts_with("retrieval.") && l.contains(lp)),
            "no retrieval entry for {lp} in\n{text}"
        );
    }

    let proj = dir.path().join("proj.tsv");
    ok(&["export-embeddings", "--checkpoint", s(&run.join("checkpoint.json")), "--n-words", "30", "--out", s(&proj)]);
    let rows = std::fs::read_to_string(&proj).unwrap();
    assert_eq!(rows.lines().filter(|l| !l.starts_with('#')).count(), 30);
}

#[test]
fn gold_alignment_file_equals_the_gold_links() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path());
    let corpus = dir.path().join("corpus");
    ok(&["gen-corpus", "--config", s(&config), "--out", s(&corpus)]);
    let align = dir.path().join("gold.tsv");
    let train = corpus.join("train.tsv");
    ok(&["align", "--config", s(&config), "--corpus", s(&train), "--provider", "gold", "--threshold", "0.9", "--out", s(&align)]);
    let records = load_alignments(&align).unwrap();
    let pairs = load_parallel(&train).unwrap();
    assert_eq!(records.len(), pairs.len());
    for p in &pairs {
        assert_eq!(records.get(p.id, p.lang_pair()).unwrap(), p.gold_links.as_deref().unwrap());
    }
}

#[test]
fn training_twice_gives_byte_identical_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path());
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    ok(&["train", "--config", s(&config), "--out", s(&a)]);
    ok(&["train", "--config", s(&config), "--out", s(&b)]);
    let ma = std::fs::read(a.join("metrics.tsv")).unwrap();
    let mb = std::fs::read(b.join("metrics.tsv")).unwrap();
    assert!(!ma.is_empty());
    assert_eq!(ma, mb);
    assert_eq!(std::fs::read(a.join("checkpoint.json")).unwrap(), std::fs::read(b.join("checkpoint.json")).unwrap());
}

#[test]
fn flags_override_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path());
    let out = dir.path().join("run");
    ok(&[
        "train",
        "--config",
        s(&config),
        "--seed",
        "11",
        "--weights",
        "1,0,0",
        "--lang-embedding",
        "on",
        "--out",
        s(&out),
    ]);
    let recorded = std::fs::read_to_string(out.join("config.toml")).unwrap();
    assert!(recorded.starts_with("seed = 11\n"), "{recorded}");
    assert!(recorded.contains("use_language_embedding = true"));
    assert!(recorded.contains("alpha = 1.0"));
}

#[test]
fn generated_corpus_contains_both_language_pairs() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path());
    ok(&["gen-corpus", "--config", s(&config), "--out", s(dir.path())]);
    let train = load_parallel(dir.path().join("train.tsv")).unwrap();
    let dev = load_parallel(dir.path().join("dev.tsv")).unwrap();
    assert_eq!(train.len() + dev.len(), 120);
    for lang in [1, 2] {
        assert!(train.iter().any(|p| p.lang_pair() == LangPair::new(LangId(0), LangId(lang))));
    }
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.toml");
    assert_eq!(code(&xlse(&["train", "--config", s(&missing)])), 2);
    assert_eq!(code(&xlse(&["eval", "--checkpoint", s(&missing), "--corpus", s(&missing)])), 2);

    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "dev_fraction = 2.0\n").unwrap();
    assert_eq!(code(&xlse(&["gen-corpus", "--config", s(&bad), "--out", s(dir.path())])), 3);
    std::fs::write(&bad, "[train]\nsteps = \"many\"\n").unwrap();
    assert_eq!(code(&xlse(&["train", "--config", s(&bad)])), 3);

    assert_eq!(code(&xlse(&["train", "--no-such-flag"])), 3);
    assert_eq!(code(&xlse(&["train", "--weights", "1,2"])), 3);
    assert_eq!(code(&xlse(&["train", "--threshold", "1.5", "--out", s(dir.path())])), 3);

    let garbage = dir.path().join("garbage.tsv");
    std::fs::write(&garbage, "not a corpus\n").unwrap();
    let out = xlse(&["align", "--corpus", s(&garbage), "--out", s(&dir.path().join("a.tsv"))]);
    assert_eq!(code(&out), 1);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert_eq!(stderr.trim().lines().count(), 1, "{stderr}");
}

#[test]
fn help_lists_every_flag() {
    let cmds = ["gen-corpus", "align", "train", "eval", "export-embeddings"];
    for cmd in cmds {
        let out = ok(&[cmd, "--help"]);
        let help = String::from_utf8_lossy(&out.stdout);
        for flag in ["--config", "--seed", "--out", "--provider", "--threshold", "--weights", "--lang-embedding"] {
            assert!(help.contains(flag), "{cmd} --help lacks {flag}");
        }
    }
    let out = ok(&["--help"]);
    let help = String::from_utf8_lossy(&out.stdout);
    for cmd in cmds {
        assert!(help.contains(cmd));
    }
}
