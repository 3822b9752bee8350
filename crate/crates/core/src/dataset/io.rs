use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::DatasetError;
use crate::sample::Sample;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Jsonl,
    Babi,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Jsonl => "jsonl",
            Format::Babi => "txt",
        }
    }
}

impl FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "jsonl" => Ok(Format::Jsonl),
            "babi" | "babi-txt" => Ok(Format::Babi),
            other => Err(format!("unknown format `{other}` (expected jsonl or babi)")),
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> DatasetError + '_ {
    move |source| DatasetError::Io { path: path.to_path_buf(), source }
}

/// One JSON object per line.
pub fn write_jsonl<W: Write>(samples: &[Sample], mut out: W) -> std::io::Result<()> {
    for s in samples {
        serde_json::to_writer(&mut out, s)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

/// bAbI-style text: numbered story lines, then
/// `N question<TAB>answer<TAB>chain line numbers`. Numbering restarts at 1
/// for every sample.
pub fn write_babi<W: Write>(samples: &[Sample], mut out: W) -> std::io::Result<()> {
    for s in samples {
        for (i, line) in s.story.iter().enumerate() {
            writeln!(out, "{} {}", i + 1, line)?;
        }
        let support: Vec<String> = s.chain_positions().iter().map(|p| (p + 1).to_string()).collect();
        writeln!(out, "{} {}\t{}\t{}", s.story.len() + 1, s.question, s.answer, support.join(" "))?;
    }
    out.flush()
}

pub fn write_dataset(samples: &[Sample], format: Format, path: &Path) -> Result<(), DatasetError> {
    let file = File::create(path).map_err(io_err(path))?;
    let out = BufWriter::new(file);
    match format {
        Format::Jsonl => write_jsonl(samples, out),
        Format::Babi => write_babi(samples, out),
    }
    .map_err(io_err(path))
}

pub fn read_jsonl<R: BufRead>(input: R, path: &Path) -> Result<Vec<Sample>, DatasetError> {
    let mut samples = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let s = serde_json::from_str(&line)
            .map_err(|source| DatasetError::Json { path: path.to_path_buf(), line: i + 1, source })?;
        samples.push(s);
    }
    Ok(samples)
}

/// Reads a JSONL dataset.
pub fn read_dataset(path: &Path) -> Result<Vec<Sample>, DatasetError> {
    let file = File::open(path).map_err(io_err(path))?;
    read_jsonl(BufReader::new(file), path)
}
