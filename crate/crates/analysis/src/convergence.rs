//! Per-iteration convergence rows read back from a trajectory.

use std::io::BufReader;
use std::path::Path;

use swarm_core::engine::trajectory::{parse_trajectory, Trajectory, TrajectoryError};

use crate::AnalysisError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub iteration: usize,
    pub total_energy: Option<f64>,
    pub objective_score: Option<f64>,
    pub accepted: bool,
    pub failed: bool,
}

/// Reads a trajectory strictly: unlike resume, a final line without its
/// newline is reported as corrupt.
pub fn read_trajectory_strict(path: &Path) -> Result<Trajectory, AnalysisError> {
    let text = std::fs::read_to_string(path).map_err(|source| AnalysisError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_trajectory_strict(&text)
}

pub fn parse_trajectory_strict(text: &str) -> Result<Trajectory, AnalysisError> {
    if !text.is_empty() && !text.ends_with('\n') {
        return Err(AnalysisError::CorruptTrajectory {
            line: text.lines().count(),
            message: "truncated final line".into(),
        });
    }
    parse_trajectory(BufReader::new(text.as_bytes())).map_err(|e| match e {
        TrajectoryError::Corrupt { line, message } => AnalysisError::CorruptTrajectory { line, message },
        TrajectoryError::Io { path, source } => AnalysisError::Io { path, source },
    })
}

pub fn convergence_series(trajectory: &Trajectory) -> Vec<ConvergenceRow> {
    trajectory
        .records
        .iter()
        .map(|r| ConvergenceRow {
            iteration: r.iteration,
            total_energy: r.total_energy,
            objective_score: r.objective_score,
            accepted: r.accepted,
            failed: r.failed,
        })
        .collect()
}
