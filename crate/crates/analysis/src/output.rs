//! CSV and Newick writers. Every output opens with comment lines naming
//! the config hash and seed it was produced from.

use std::fmt::Display;
use std::io::{self, Write};

use crate::convergence::ConvergenceRow;
use crate::distance::logo_header;
use crate::features::SourceLabel;

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct OutputMeta {
    /// Hashes of the campaign configs behind the inputs, if any.
    pub config_hashes: Vec<String>,
    pub seed: u64,
}

impl OutputMeta {
    fn hashes(&self) -> String {
        if self.config_hashes.is_empty() {
            "none".into()
        } else {
            self.config_hashes.join(",")
        }
    }

    pub fn write_comment<W: Write>(&self, w: &mut W) -> io::Result<()> {
        writeln!(w, "# config_hash={}", self.hashes())?;
        writeln!(w, "# seed={}", self.seed)
    }
}

fn csv_err(e: csv::Error) -> io::Error {
    match e.into_kind() {
        csv::ErrorKind::Io(e) => e,
        other => io::Error::other(format!("{other:?}")),
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_embedding_csv<W: Write>(
    mut w: W,
    meta: &OutputMeta,
    ids: &[String],
    labels: &[SourceLabel],
    embedding: &[[f64; 2]],
) -> io::Result<()> {
    meta.write_comment(&mut w)?;
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["id", "label", "x", "y"]).map_err(csv_err)?;
    for ((id, label), p) in ids.iter().zip(labels).zip(embedding) {
        out.write_record([id.clone(), label.to_string(), p[0].to_string(), p[1].to_string()])
            .map_err(csv_err)?;
    }
    out.flush()
}

/// A square matrix with row and column names.
pub fn write_matrix_csv<W: Write, T: Display>(
    mut w: W,
    meta: &OutputMeta,
    names: &[String],
    matrix: &[Vec<T>],
) -> io::Result<()> {
    meta.write_comment(&mut w)?;
    let mut out = csv::Writer::from_writer(w);
    out.write_record(std::iter::once("id").chain(names.iter().map(String::as_str)))
        .map_err(csv_err)?;
    for (name, row) in names.iter().zip(matrix) {
        out.write_record(std::iter::once(name.clone()).chain(row.iter().map(ToString::to_string)))
            .map_err(csv_err)?;
    }
    out.flush()
}

/// One row per position (1-based), one column per residue.
pub fn write_logo_csv<W: Write>(mut w: W, meta: &OutputMeta, counts: &[[usize; 20]]) -> io::Result<()> {
    meta.write_comment(&mut w)?;
    let mut out = csv::Writer::from_writer(w);
    out.write_record(std::iter::once("position".to_string()).chain(logo_header()))
        .map_err(csv_err)?;
    for (i, column) in counts.iter().enumerate() {
        out.write_record(std::iter::once((i + 1).to_string()).chain(column.iter().map(ToString::to_string)))
            .map_err(csv_err)?;
    }
    out.flush()
}

/// Failed iterations keep their row with empty metric cells.
pub fn write_convergence_csv<W: Write>(mut w: W, meta: &OutputMeta, rows: &[ConvergenceRow]) -> io::Result<()> {
    meta.write_comment(&mut w)?;
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["iteration", "total_energy", "objective_score", "accepted", "failed"])
        .map_err(csv_err)?;
    for r in rows {
        out.write_record([
            r.iteration.to_string(),
            opt(r.total_energy),
            opt(r.objective_score),
            r.accepted.to_string(),
            r.failed.to_string(),
        ])
        .map_err(csv_err)?;
    }
    out.flush()
}

/// Newick text preceded by a bracketed comment line.
pub fn write_newick<W: Write>(mut w: W, meta: &OutputMeta, newick: &str) -> io::Result<()> {
    writeln!(w, "[config_hash={} seed={}]", meta.hashes(), meta.seed)?;
    writeln!(w, "{newick}")?;
    w.flush()
}
