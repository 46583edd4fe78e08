//! Post-hoc analysis of design trajectories and sequence corpora:
//! composition features, t-SNE embeddings, neighbor-joining trees,
//! Hamming matrices, sequence logos and convergence series.

pub mod convergence;
pub mod distance;
pub mod features;
pub mod nj;
pub mod output;
pub mod sources;
pub mod tsne;

use std::io;
use std::path::Path;

use thiserror::Error;

pub use convergence::{convergence_series, read_trajectory_strict, ConvergenceRow};
pub use distance::{euclidean_distances, hamming_matrix, logo_counts};
pub use features::{features, preprocess, FeatureMatrix, FeatureVector, SourceLabel};
pub use nj::{nj_tree, subsample_indices, NjTree};
pub use output::OutputMeta;
pub use sources::{load_source, SequenceSource};
pub use tsne::{effective_perplexity, tsne, TsneParams, TsneResult};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("corrupt trajectory at line {line}: {message}")]
    CorruptTrajectory { line: usize, message: String },
    #[error("{path}: corrupt trajectory at line {line}: {message}")]
    CorruptFile { path: String, line: usize, message: String },
    #[error("need at least {needed} rows, found {found}")]
    TooFewRows { needed: usize, found: usize },
    #[error("every feature dimension was dropped")]
    DegenerateMatrix,
    #[error("distance matrix is asymmetric at ({i}, {j})")]
    AsymmetricMatrix { i: usize, j: usize },
    #[error("negative distance at ({i}, {j})")]
    NegativeDistance { i: usize, j: usize },
    #[error("sequence {index} has length {found}, expected {expected}")]
    LengthMismatch {
        index: usize,
        expected: usize,
        found: usize,
    },
    #[error("no sequences given")]
    EmptyInput,
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl AnalysisError {
    /// Attaches the file name to a trajectory parse error.
    pub fn in_file(self, path: &Path) -> Self {
        match self {
            AnalysisError::CorruptTrajectory { line, message } => AnalysisError::CorruptFile {
                path: path.display().to_string(),
                line,
                message,
            },
            other => other,
        }
    }
}
