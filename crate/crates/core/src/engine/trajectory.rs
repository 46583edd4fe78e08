//! Line-delimited trajectory files.
//!
//! The first line is a header, then one line per iteration, with a
//! checkpoint line carrying the full campaign state after every
//! `checkpoint_every` iterations and a summary line at the end.

use std::fs::{File, OpenOptions};
use std::io::{self, BufRead, BufReader, Seek, SeekFrom, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agents::Proposal;
use crate::engine::config::RunConfig;
use crate::eval::{DesignObjective, EvaluationResult};
use crate::memory::{GlobalMemory, LocalHistory};
use crate::sequence::{ProteinSequence, SsString};

/// Version of the trajectory line format.
pub const TRAJECTORY_FORMAT: u32 = 1;

#[derive(Debug, Error)]
pub enum TrajectoryError {
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("corrupt trajectory at line {line}: {message}")]
    Corrupt { line: usize, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Header {
    pub format: u32,
    pub protocol_version: u32,
    pub config_hash: String,
    pub start_sequence: ProteinSequence,
    pub objective: DesignObjective,
    pub seed: u64,
    pub config: RunConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub proposed_sequence: ProteinSequence,
    pub accepted: bool,
    /// True when evaluation failed; the state was left unchanged.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub failed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub total_energy: Option<f64>,
    pub objective_score: Option<f64>,
    pub ss: Option<SsString>,
    pub changed_positions: Vec<usize>,
    pub fallback_positions: Vec<usize>,
    /// The retained sequence after this iteration.
    pub current_best: ProteinSequence,
    /// Highest objective score among retained sequences so far.
    pub best_score: f64,
    pub proposals: Vec<Proposal>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evaluation: Option<EvaluationResult>,
    /// Milliseconds since the Unix epoch, when timing is recorded.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_ms: Option<u64>,
}

/// Everything needed to continue a campaign.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignState {
    /// Completed iterations.
    pub iteration: usize,
    pub current: ProteinSequence,
    pub current_eval: EvaluationResult,
    /// Whether an accepted structure exists to build contexts from.
    pub has_structure: bool,
    pub best: ProteinSequence,
    pub best_eval: EvaluationResult,
    pub best_iteration: usize,
    pub memory: GlobalMemory,
    pub locals: Vec<LocalHistory>,
    pub consecutive_failures: usize,
    pub accepted_count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergencePoint {
    pub iteration: usize,
    pub total_energy: Option<f64>,
    pub objective_score: Option<f64>,
    pub accepted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub complete: bool,
    pub iterations_run: usize,
    pub accepted_count: usize,
    pub acceptance_rate: f64,
    pub best_sequence: ProteinSequence,
    pub best_score: f64,
    pub best_energy: f64,
    pub best_iteration: usize,
    pub convergence: Vec<ConvergencePoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Line {
    Header(Box<Header>),
    Iteration(Box<IterationRecord>),
    Checkpoint(Box<CampaignState>),
    Summary(Box<Summary>),
}

/// A parsed trajectory file.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub header: Header,
    pub records: Vec<IterationRecord>,
    /// Last checkpoint and the number of records that precede it.
    pub checkpoint: Option<(CampaignState, usize)>,
    pub summary: Option<Summary>,
    /// Byte offset just past the last header, iteration or checkpoint line.
    pub resume_offset: u64,
}

impl Trajectory {
    pub fn sequences(&self) -> impl Iterator<Item = &ProteinSequence> {
        self.records.iter().map(|r| &r.proposed_sequence)
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> TrajectoryError + '_ {
    move |source| TrajectoryError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Parses trajectory text. A final line without a newline is treated as
/// torn by a crash and ignored.
pub fn parse_trajectory<R: BufRead>(mut reader: R) -> Result<Trajectory, TrajectoryError> {
    let mut header = None;
    let mut records = Vec::new();
    let mut checkpoint = None;
    let mut summary = None;
    let mut offset = 0u64;
    let mut resume_offset = 0u64;
    let mut buf = String::new();
    let mut line_no = 0;
    loop {
        buf.clear();
        let read = reader.read_line(&mut buf).map_err(|e| TrajectoryError::Corrupt {
            line: line_no + 1,
            message: e.to_string(),
        })?;
        if read == 0 {
            break;
        }
        line_no += 1;
        offset += read as u64;
        if !buf.ends_with('\n') {
            log::warn!("ignoring torn final line {line_no}");
            break;
        }
        if buf.trim().is_empty() {
            continue;
        }
        let line: Line = serde_json::from_str(&buf).map_err(|e| TrajectoryError::Corrupt {
            line: line_no,
            message: e.to_string(),
        })?;
        let corrupt = |message: &str| TrajectoryError::Corrupt {
            line: line_no,
            message: message.into(),
        };
        match line {
            Line::Header(h) => {
                if header.is_some() {
                    return Err(corrupt("second header"));
                }
                header = Some(*h);
            }
            _ if header.is_none() => return Err(corrupt("record before header")),
            Line::Iteration(r) => {
                if summary.is_some() {
                    return Err(corrupt("record after summary"));
                }
                if r.iteration != records.len() + 1 {
                    return Err(corrupt(&format!(
                        "expected iteration {}, found {}",
                        records.len() + 1,
                        r.iteration
                    )));
                }
                records.push(*r);
            }
            Line::Checkpoint(state) => {
                if state.iteration != records.len() {
                    return Err(corrupt("checkpoint does not follow its iteration"));
                }
                checkpoint = Some((*state, records.len()));
            }
            Line::Summary(s) => {
                summary = Some(*s);
                continue;
            }
        }
        resume_offset = offset;
    }
    let header = header.ok_or(TrajectoryError::Corrupt {
        line: 1,
        message: "missing header".into(),
    })?;
    Ok(Trajectory {
        header,
        records,
        checkpoint,
        summary,
        resume_offset,
    })
}

pub fn read_trajectory(path: &Path) -> Result<Trajectory, TrajectoryError> {
    let file = File::open(path).map_err(io_err(path))?;
    parse_trajectory(BufReader::new(file))
}

/// Append-only writer; every line is flushed as soon as it is written.
pub struct TrajectoryWriter {
    file: File,
    path: String,
}

impl TrajectoryWriter {
    pub fn create(path: &Path) -> Result<Self, TrajectoryError> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(io_err(path))?;
        }
        let file = File::create(path).map_err(io_err(path))?;
        Ok(TrajectoryWriter {
            file,
            path: path.display().to_string(),
        })
    }

    /// Opens an existing file and cuts it back to `offset`, dropping a
    /// summary or torn line.
    pub fn reopen(path: &Path, offset: u64) -> Result<Self, TrajectoryError> {
        let mut file = OpenOptions::new()
            .read(true)
            .write(true)
            .open(path)
            .map_err(io_err(path))?;
        file.set_len(offset).map_err(io_err(path))?;
        file.seek(SeekFrom::End(0)).map_err(io_err(path))?;
        Ok(TrajectoryWriter {
            file,
            path: path.display().to_string(),
        })
    }

    pub fn write(&mut self, line: &Line) -> Result<(), TrajectoryError> {
        let mut text = serde_json::to_string(line).expect("trajectory lines serialize");
        text.push('\n');
        self.file
            .write_all(text.as_bytes())
            .and_then(|_| self.file.flush())
            .map_err(|source| TrajectoryError::Io {
                path: self.path.clone(),
                source,
            })
    }
}
