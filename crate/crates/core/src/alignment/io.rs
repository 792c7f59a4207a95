//! Alignment files: `pair_id \t S→T \t i-j:score i-j:score ...` per line.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::corpus::{format_link, parse_link};
use crate::corpus::{LangId, LangPair, Link};

use super::AlignmentError;

/// Scored links per pair id and direction.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AlignmentRecords {
    records: BTreeMap<u64, BTreeMap<LangPair, Vec<Link>>>,
}

impl AlignmentRecords {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, pair_id: u64, direction: LangPair, links: Vec<Link>) {
        self.records.entry(pair_id).or_default().insert(direction, links);
    }

    pub fn get(&self, pair_id: u64, direction: LangPair) -> Option<&[Link]> {
        self.records.get(&pair_id)?.get(&direction).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, LangPair, &[Link])> + '_ {
        self.records
            .iter()
            .flat_map(|(&id, dirs)| dirs.iter().map(move |(&d, links)| (id, d, links.as_slice())))
    }
}

pub fn write_alignments<W: Write>(records: &AlignmentRecords, mut out: W) -> Result<(), AlignmentError> {
    for (id, dir, links) in records.iter() {
        let links: Vec<String> = links.iter().map(format_link).collect();
        writeln!(out, "{}\t{}→{}\t{}", id, dir.src, dir.tgt, links.join(" "))?;
    }
    out.flush()?;
    Ok(())
}

pub fn save_alignments(records: &AlignmentRecords, path: impl AsRef<Path>) -> Result<(), AlignmentError> {
    write_alignments(records, BufWriter::new(File::create(path)?))
}

pub fn read_alignments<R: BufRead>(input: R) -> Result<AlignmentRecords, AlignmentError> {
    let mut records = AlignmentRecords::new();
    for (n, line) in input.lines().enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let (id, dir, links) = parse_record(&line).map_err(|message| AlignmentError::Parse { line: n + 1, message })?;
        records.insert(id, dir, links);
    }
    Ok(records)
}

pub fn load_alignments(path: impl AsRef<Path>) -> Result<AlignmentRecords, AlignmentError> {
    read_alignments(BufReader::new(File::open(path)?))
}

fn parse_record(line: &str) -> Result<(u64, LangPair, Vec<Link>), String> {
    let fields: Vec<&str> = line.split('\t').collect();
    if fields.len() != 3 {
        return Err(format!("expected 3 tab-separated fields, found {}", fields.len()));
    }
    let id = fields[0].parse().map_err(|_| format!("bad pair id {:?}", fields[0]))?;
    let (s, t) = fields[1]
        .split_once('→')
        .or_else(|| fields[1].split_once("->"))
        .ok_or_else(|| format!("bad direction {:?}", fields[1]))?;
    let lang = |x: &str| x.parse::<LangId>().map_err(|_| format!("bad language {x:?}"));
    let dir = LangPair::new(lang(s)?, lang(t)?);
    let links = fields[2].split_whitespace().map(parse_link).collect::<Result<Vec<_>, _>>()?;
    Ok((id, dir, links))
}
