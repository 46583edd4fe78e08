//! Plain FASTA reading and writing.
//!
//! Records whose residues fall outside the 20-letter alphabet are skipped
//! with a warning rather than failing the whole file.

use std::io::{self, BufRead, Write};

use crate::sequence::{ProteinSequence, SequenceError};

const LINE_WIDTH: usize = 60;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FastaRecord {
    pub header: String,
    pub sequence: ProteinSequence,
}

/// A record dropped while reading, with the reason.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkippedRecord {
    pub header: String,
    pub line: usize,
    pub error: SequenceError,
}

#[derive(Debug, Default)]
pub struct FastaContents {
    pub records: Vec<FastaRecord>,
    pub skipped: Vec<SkippedRecord>,
}

pub fn read_fasta<R: BufRead>(reader: R) -> io::Result<FastaContents> {
    let mut out = FastaContents::default();
    let mut current: Option<(String, usize, String)> = None;

    let finish = |entry: Option<(String, usize, String)>, out: &mut FastaContents| {
        if let Some((header, line, body)) = entry {
            match ProteinSequence::parse(&body) {
                Ok(sequence) => out.records.push(FastaRecord { header, sequence }),
                Err(error) => {
                    log::warn!("skipping FASTA record {header:?} (line {line}): {error}");
                    out.skipped.push(SkippedRecord { header, line, error });
                }
            }
        }
    };

    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if let Some(header) = line.strip_prefix('>') {
            finish(current.take(), &mut out);
            current = Some((header.trim().to_string(), idx + 1, String::new()));
        } else if line.is_empty() || line.starts_with(';') {
            continue;
        } else {
            match current.as_mut() {
                Some((_, _, body)) => body.push_str(line),
                None => {
                    return Err(io::Error::new(
                        io::ErrorKind::InvalidData,
                        format!("line {}: sequence data before first header", idx + 1),
                    ))
                }
            }
        }
    }
    finish(current.take(), &mut out);
    Ok(out)
}

pub fn write_fasta<W: Write>(mut writer: W, records: &[FastaRecord]) -> io::Result<()> {
    for rec in records {
        writeln!(writer, ">{}", rec.header)?;
        let text = rec.sequence.to_string();
        for chunk in text.as_bytes().chunks(LINE_WIDTH) {
            writer.write_all(chunk)?;
            writer.write_all(b"\n")?;
        }
    }
    Ok(())
}
