//! Parallel-corpus files: one record per line,
//! `pair_id \t src_lang \t tgt_lang \t src words \t tgt words \t links`
//! where links are comma-separated `i-j:score` triples (possibly empty).

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::{CorpusError, LangId, Link, ParallelPair, Sentence};

pub fn write_parallel<W: Write>(pairs: &[ParallelPair], mut out: W) -> Result<(), CorpusError> {
    for p in pairs {
        let links = p
            .gold_links
            .as_deref()
            .unwrap_or_default()
            .iter()
            .map(format_link)
            .collect::<Vec<_>>()
            .join(",");
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}",
            p.id,
            p.src.lang,
            p.tgt.lang,
            p.src.words.join(" "),
            p.tgt.words.join(" "),
            links
        )?;
    }
    out.flush()?;
    Ok(())
}

pub fn save_parallel(pairs: &[ParallelPair], path: impl AsRef<Path>) -> Result<(), CorpusError> {
    write_parallel(pairs, BufWriter::new(File::create(path)?))
}

pub fn read_parallel<R: BufRead>(input: R) -> Result<Vec<ParallelPair>, CorpusError> {
    let mut pairs = Vec::new();
    for (n, line) in input.lines().enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        pairs.push(parse_record(&line).map_err(|message| CorpusError::Parse { line: n + 1, message })?);
    }
    Ok(pairs)
}

pub fn load_parallel(path: impl AsRef<Path>) -> Result<Vec<ParallelPair>, CorpusError> {
    read_parallel(BufReader::new(File::open(path)?))
}

pub(crate) fn format_link(l: &Link) -> String {
    format!("{}-{}:{}", l.src, l.tgt, l.score)
}

pub(crate) fn parse_link(s: &str) -> Result<Link, String> {
    let (idx, score) = s.split_once(':').ok_or_else(|| format!("link {s:?} lacks ':score'"))?;
    let (i, j) = idx.split_once('-').ok_or_else(|| format!("link {s:?} lacks 'i-j'"))?;
    let src = i.parse().map_err(|_| format!("bad source index in {s:?}"))?;
    let tgt = j.parse().map_err(|_| format!("bad target index in {s:?}"))?;
    let score: f64 = score.parse().map_err(|_| format!("bad score in {s:?}"))?;
    if !(0.0..=1.0).contains(&score) {
        return Err(format!("score {score} outside [0,1]"));
    }
    Ok(Link { src, tgt, score })
}

fn parse_record(line: &str) -> Result<ParallelPair, String> {
    let fields: Vec<&str> = line.split('\t').collect();
    if fields.len() != 6 {
        return Err(format!("expected 6 tab-separated fields, found {}", fields.len()));
    }
    let id = fields[0].parse().map_err(|_| format!("bad pair id {:?}", fields[0]))?;
    let src_lang: LangId = fields[1].parse().map_err(|_| format!("bad source language {:?}", fields[1]))?;
    let tgt_lang: LangId = fields[2].parse().map_err(|_| format!("bad target language {:?}", fields[2]))?;
    let words = |s: &str| s.split(' ').map(str::to_owned).collect::<Vec<_>>();
    let src = Sentence::new(src_lang, words(fields[3])).map_err(|e| e.to_string())?;
    let tgt = Sentence::new(tgt_lang, words(fields[4])).map_err(|e| e.to_string())?;
    let gold_links = if fields[5].is_empty() {
        None
    } else {
        Some(fields[5].split(',').map(parse_link).collect::<Result<Vec<_>, _>>()?)
    };
    let pair = ParallelPair { id, src, tgt, gold_links };
    pair.validate().map_err(|e| e.to_string())?;
    Ok(pair)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{generate_corpus, CorpusConfig};

    #[test]
    fn empty_input_is_empty_corpus() {
        assert!(read_parallel("".as_bytes()).unwrap().is_empty());
    }

    #[test]
    fn single_record() {
        let pairs = read_parallel("3\t0\t1\ta b\tx y z\t0-0:1,1-2:0.5\n".as_bytes()).unwrap();
        assert_eq!(pairs.len(), 1);
        assert_eq!(pairs[0].src.len(), 2);
        assert_eq!(pairs[0].tgt.len(), 3);
        assert_eq!(pairs[0].gold_links.as_ref().unwrap()[1], Link::new(1, 2, 0.5));
    }

    #[test]
    fn empty_link_field_is_none() {
        let pairs = read_parallel("3\t0\t1\ta\tx\t\n".as_bytes()).unwrap();
        assert!(pairs[0].gold_links.is_none());
    }

    #[test]
    fn malformed_lines_report_line_number() {
        let text = "1\t0\t1\ta\tx\t0-0:1\n2\t0\t1\ta\tx\n";
        match read_parallel(text.as_bytes()) {
            Err(CorpusError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
        let text = "1\t0\t1\ta\tx\t0-3:1\n";
        assert!(matches!(read_parallel(text.as_bytes()), Err(CorpusError::Parse { line: 1, .. })));
        let text = "1\t0\t1\ta\tx\t0-0\n";
        assert!(matches!(read_parallel(text.as_bytes()), Err(CorpusError::Parse { line: 1, .. })));
    }

    #[test]
    fn generated_corpus_round_trips_through_file() {
        let config = CorpusConfig {
            languages: vec![crate::corpus::LanguageSpec { lang: LangId(1), vocab_size: 40, pair_count: 1000 }],
            ..CorpusConfig::default()
        };
        let mut pairs: Vec<ParallelPair> = generate_corpus(&config, 5).unwrap().into_values().flatten().collect();
        pairs[0].gold_links.as_mut().unwrap()[0].score = 0.123456789012345;
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("corpus.tsv");
        save_parallel(&pairs, &path).unwrap();
        assert_eq!(load_parallel(&path).unwrap(), pairs);
    }
}
