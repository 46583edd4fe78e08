//! Labeled sequence sets read from trajectories or FASTA files.

use std::io::BufReader;
use std::path::Path;

use swarm_core::fasta::read_fasta;
use swarm_core::ProteinSequence;

use crate::convergence::read_trajectory_strict;
use crate::features::SourceLabel;
use crate::AnalysisError;

#[derive(Debug, Clone, PartialEq)]
pub struct SequenceSource {
    pub label: SourceLabel,
    pub ids: Vec<String>,
    pub sequences: Vec<ProteinSequence>,
    pub config_hash: Option<String>,
}

/// Loads a trajectory (proposed sequence of every iteration) or a FASTA
/// corpus, telling them apart by the first non-blank character. Without an
/// explicit label a trajectory is named after its objective and a corpus
/// after its file stem.
pub fn load_source(path: &Path, label: Option<&str>) -> Result<SequenceSource, AnalysisError> {
    let io_err = |source| AnalysisError::Io {
        path: path.display().to_string(),
        source,
    };
    let text = std::fs::read_to_string(path).map_err(io_err)?;
    if text.trim_start().starts_with('{') {
        let t = read_trajectory_strict(path).map_err(|e| e.in_file(path))?;
        let label = label
            .map(str::to_string)
            .unwrap_or_else(|| t.header.objective.name.clone());
        return Ok(SequenceSource {
            label: SourceLabel(label),
            ids: t.records.iter().map(|r| format!("iter{}", r.iteration)).collect(),
            sequences: t.sequences().cloned().collect(),
            config_hash: Some(t.header.config_hash),
        });
    }
    let contents = read_fasta(BufReader::new(text.as_bytes())).map_err(io_err)?;
    for skip in &contents.skipped {
        log::warn!(
            "{}:{}: skipping {}: {}",
            path.display(),
            skip.line,
            skip.header,
            skip.error
        );
    }
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Ok(SequenceSource {
        label: SourceLabel(label.map(str::to_string).unwrap_or(stem)),
        ids: contents
            .records
            .iter()
            .map(|r| r.header.split_whitespace().next().unwrap_or("").to_string())
            .collect(),
        sequences: contents.records.into_iter().map(|r| r.sequence).collect(),
        config_hash: None,
    })
}
