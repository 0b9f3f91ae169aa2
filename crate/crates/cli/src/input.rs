//! Stream records from JSON Lines or CSV, or from the synthetic generator.

use std::fs::File;
use std::io::{self, BufRead, BufReader, Read};
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use serde::Deserialize;
use sgs_core::synth::{BlobConfig, BlobStream};
use sgs_core::{PointId, Stamp};

#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub id: Option<PointId>,
    pub t: Option<Stamp>,
    pub x: Vec<f64>,
    /// 1-based source line, 0 for generated records.
    pub line: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Jsonl,
    Csv,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonRecord {
    #[serde(default)]
    id: Option<PointId>,
    #[serde(default)]
    t: Option<Stamp>,
    x: Vec<f64>,
}

pub trait RecordSource: Iterator<Item = Result<Record>> {
    /// Dimension declared before any record (a CSV header), if known.
    fn declared_dim(&self) -> Option<usize>;
}

pub struct JsonlSource<R> {
    lines: io::Lines<R>,
    line: u64,
}

impl<R: BufRead> Iterator for JsonlSource<R> {
    type Item = Result<Record>;

    fn next(&mut self) -> Option<Result<Record>> {
        loop {
            let text = match self.lines.next()? {
                Ok(t) => t,
                Err(e) => return Some(Err(e.into())),
            };
            self.line += 1;
            if text.trim().is_empty() {
                continue;
            }
            let line = self.line;
            return Some(
                serde_json::from_str::<JsonRecord>(&text)
                    .map(|r| Record {
                        id: r.id,
                        t: r.t,
                        x: r.x,
                        line,
                    })
                    .with_context(|| format!("line {line}: malformed record")),
            );
        }
    }
}

impl<R: BufRead> RecordSource for JsonlSource<R> {
    fn declared_dim(&self) -> Option<usize> {
        None
    }
}

pub struct CsvSource<R> {
    records: csv::StringRecordsIntoIter<R>,
    id_col: Option<usize>,
    t_col: usize,
    x_cols: Vec<usize>,
}

impl<R: Read> CsvSource<R> {
    fn new(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        let header = rdr
            .headers()
            .context("line 1: unreadable CSV header")?
            .clone();
        let pos = |name: &str| header.iter().position(|h| h == name);
        let t_col = pos("t").ok_or_else(|| anyhow!("line 1: CSV header needs a 't' column"))?;
        let id_col = pos("id");
        let x_cols: Vec<usize> = (0..header.len())
            .filter(|&i| i != t_col && Some(i) != id_col)
            .collect();
        if x_cols.is_empty() {
            bail!("line 1: CSV header declares no coordinate columns");
        }
        Ok(Self {
            records: rdr.into_records(),
            id_col,
            t_col,
            x_cols,
        })
    }
}

impl<R: Read> Iterator for CsvSource<R> {
    type Item = Result<Record>;

    fn next(&mut self) -> Option<Result<Record>> {
        let rec = match self.records.next()? {
            Ok(r) => r,
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line());
                return Some(Err(anyhow!("line {line}: {e}")));
            }
        };
        let line = rec.position().map_or(0, |p| p.line());
        let parse = || -> Result<Record> {
            let t = match &rec[self.t_col] {
                "" => None,
                s => Some(
                    s.parse()
                        .with_context(|| format!("stamp '{s}' is not an integer"))?,
                ),
            };
            let id = self
                .id_col
                .map(|i| {
                    rec[i]
                        .parse()
                        .with_context(|| format!("id '{}' is not an integer", &rec[i]))
                })
                .transpose()?;
            let x = self
                .x_cols
                .iter()
                .map(|&i| {
                    rec[i]
                        .parse()
                        .with_context(|| format!("coordinate '{}' is not a number", &rec[i]))
                })
                .collect::<Result<_>>()?;
            Ok(Record { id, t, x, line })
        };
        Some(parse().with_context(|| format!("line {line}: malformed record")))
    }
}

impl<R: Read> RecordSource for CsvSource<R> {
    fn declared_dim(&self) -> Option<usize> {
        Some(self.x_cols.len())
    }
}

pub struct GenSource {
    stream: BlobStream,
    remaining: u64,
    next_t: Stamp,
    d: usize,
}

impl GenSource {
    pub fn new(cfg: BlobConfig, count: u64) -> Result<Self> {
        let d = cfg.d;
        Ok(Self {
            stream: BlobStream::new(cfg)?,
            remaining: count,
            next_t: 1,
            d,
        })
    }
}

impl Iterator for GenSource {
    type Item = Result<Record>;

    fn next(&mut self) -> Option<Result<Record>> {
        if self.remaining == 0 {
            return None;
        }
        self.remaining -= 1;
        let t = self.next_t;
        self.next_t += 1;
        let x = self.stream.next()?;
        Some(Ok(Record {
            id: None,
            t: Some(t),
            x,
            line: 0,
        }))
    }
}

impl RecordSource for GenSource {
    fn declared_dim(&self) -> Option<usize> {
        Some(self.d)
    }
}

fn sniff(path: Option<&Path>, first: &[u8]) -> Format {
    match path.and_then(|p| p.extension()).and_then(|e| e.to_str()) {
        Some("csv") => return Format::Csv,
        Some("jsonl") | Some("json") | Some("ndjson") => return Format::Jsonl,
        _ => {}
    }
    let lead = first.iter().find(|b| !b.is_ascii_whitespace());
    if lead == Some(&b'{') || lead.is_none() {
        Format::Jsonl
    } else {
        Format::Csv
    }
}

/// Open `path` (`-` for stdin), detecting the format from the extension or the first
/// non-blank byte unless given.
pub fn open(path: &Path, format: Option<Format>) -> Result<Box<dyn RecordSource>> {
    let reader: Box<dyn BufRead> = if path == Path::new("-") {
        Box::new(BufReader::new(io::stdin()))
    } else {
        let f = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
        Box::new(BufReader::new(f))
    };
    let mut reader = reader;
    let first = reader.fill_buf()?.to_vec();
    let named = (path != Path::new("-")).then_some(path);
    match format.unwrap_or_else(|| sniff(named, &first)) {
        Format::Jsonl => Ok(Box::new(JsonlSource {
            lines: reader.lines(),
            line: 0,
        })),
        Format::Csv => Ok(Box::new(CsvSource::new(reader)?)),
    }
}
