//! Per-agent local view: linear neighbors, spatial neighbors from the last
//! accepted structure, an exposure class and the secondary structure label.

use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eval::EvaluationResult;
use crate::memory::{ContextKey, MemoryDigest};
use crate::sequence::{AminoAcid, ProteinSequence, SsLabel, SsString};

pub type Coord = [f64; 3];

pub const DEFAULT_RADIUS: usize = 2;
pub const DEFAULT_SPATIAL_CUTOFF: f64 = 8.0;

/// Contact-number shell used for the exposure estimate.
pub const EXPOSURE_SHELL: f64 = 10.0;
pub const BURIED_ABOVE: usize = 14;
pub const EXPOSED_BELOW: usize = 9;

const DEGENERATE_DISTANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ContextError {
    #[error("evaluation carries no coordinates")]
    MissingCoordinates,
    #[error("structure has {coords} coordinates but {ss} secondary structure labels")]
    LengthMismatch { coords: usize, ss: usize },
    #[error("residues {0} and {1} occupy the same point")]
    DegenerateStructure(usize, usize),
    #[error("position {position} out of range for length {len}")]
    OutOfRange { position: usize, len: usize },
    #[error("invalid context parameter: {0}")]
    InvalidParameter(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Exposure {
    Buried,
    Intermediate,
    Exposed,
}

impl Exposure {
    pub fn from_contact_number(count: usize) -> Exposure {
        if count > BURIED_ABOVE {
            Exposure::Buried
        } else if count < EXPOSED_BELOW {
            Exposure::Exposed
        } else {
            Exposure::Intermediate
        }
    }
}

impl fmt::Display for Exposure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Exposure::Buried => "buried",
            Exposure::Intermediate => "intermediate",
            Exposure::Exposed => "exposed",
        })
    }
}

/// Structural facts about the last accepted sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct StructureSnapshot {
    ca_coords: Vec<Coord>,
    distances: DMatrix<f64>,
    ss: SsString,
    exposure: Vec<Exposure>,
    contact_numbers: Vec<usize>,
    sentinel: bool,
}

impl StructureSnapshot {
    /// Placeholder used before any structure exists: no spatial neighbors,
    /// every residue Intermediate and every label L.
    pub fn sentinel(n: usize) -> Self {
        StructureSnapshot {
            ca_coords: Vec::new(),
            distances: DMatrix::zeros(0, 0),
            ss: SsString::uniform(SsLabel::Loop, n),
            exposure: vec![Exposure::Intermediate; n],
            contact_numbers: Vec::new(),
            sentinel: true,
        }
    }

    pub fn from_parts(ca_coords: Vec<Coord>, ss: SsString) -> Result<Self, ContextError> {
        let n = ca_coords.len();
        if n == 0 {
            return Err(ContextError::MissingCoordinates);
        }
        if ss.len() != n {
            return Err(ContextError::LengthMismatch {
                coords: n,
                ss: ss.len(),
            });
        }
        let distances = distance_matrix(&ca_coords);
        for i in 0..n {
            for j in (i + 1)..n {
                if distances[(i, j)] < DEGENERATE_DISTANCE {
                    return Err(ContextError::DegenerateStructure(i, j));
                }
            }
        }
        let contact_numbers: Vec<usize> = (0..n)
            .map(|i| (0..n).filter(|&j| j != i && distances[(i, j)] < EXPOSURE_SHELL).count())
            .collect();
        let exposure = contact_numbers
            .iter()
            .map(|&c| Exposure::from_contact_number(c))
            .collect();
        Ok(StructureSnapshot {
            ca_coords,
            distances,
            ss,
            exposure,
            contact_numbers,
            sentinel: false,
        })
    }

    pub fn is_sentinel(&self) -> bool {
        self.sentinel
    }

    pub fn len(&self) -> usize {
        self.ss.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ss.is_empty()
    }

    pub fn ca_coords(&self) -> &[Coord] {
        &self.ca_coords
    }

    pub fn distances(&self) -> &DMatrix<f64> {
        &self.distances
    }

    pub fn ss(&self) -> &SsString {
        &self.ss
    }

    pub fn exposure(&self) -> &[Exposure] {
        &self.exposure
    }

    /// Neighbor counts within [`EXPOSURE_SHELL`]; empty for the sentinel.
    pub fn contact_numbers(&self) -> &[usize] {
        &self.contact_numbers
    }
}

pub fn distance_matrix(coords: &[Coord]) -> DMatrix<f64> {
    let n = coords.len();
    DMatrix::from_fn(n, n, |i, j| euclidean(&coords[i], &coords[j]))
}

pub fn euclidean(a: &Coord, b: &Coord) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// Repackages an evaluator result as a snapshot for the next iteration.
pub fn build_snapshot(evaluation: &EvaluationResult) -> Result<StructureSnapshot, ContextError> {
    StructureSnapshot::from_parts(evaluation.ca_coords.clone(), evaluation.ss.clone())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpatialNeighbor {
    pub position: usize,
    pub distance: f64,
}

/// Everything one agent sees about its position.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidueContext {
    pub position: usize,
    pub sequence_len: usize,
    pub current: AminoAcid,
    /// `(offset, residue)` for offsets `-r..=-1, 1..=r`, clipped at chain ends.
    pub linear_neighbors: Vec<(isize, AminoAcid)>,
    /// Sorted ascending by distance.
    pub spatial_neighbors: Vec<SpatialNeighbor>,
    pub exposure: Exposure,
    pub ss_label: SsLabel,
    /// Labels for the linear window, centred on this position.
    pub ss_window: String,
    pub has_structure: bool,
    pub memory_digest: MemoryDigest,
}

impl ResidueContext {
    pub fn key(&self) -> ContextKey {
        ContextKey {
            left: self.neighbor_at(-1),
            right: self.neighbor_at(1),
            ss: self.ss_label,
        }
    }

    pub fn neighbor_at(&self, offset: isize) -> Option<AminoAcid> {
        self.linear_neighbors
            .iter()
            .find(|(o, _)| *o == offset)
            .map(|(_, aa)| *aa)
    }
}

/// Context key for position `i`, computed the same way [`ResidueContext::key`]
/// would, without building the full context.
pub fn context_key(snapshot: &StructureSnapshot, sequence: &ProteinSequence, i: usize) -> ContextKey {
    ContextKey {
        left: i.checked_sub(1).and_then(|j| sequence.get(j)),
        right: sequence.get(i + 1),
        ss: snapshot.ss().get(i).unwrap_or(SsLabel::Loop),
    }
}

/// Assembles the local view of position `i`. Spatial neighbors exclude the
/// linear window `|j - i| <= radius` so the two channels stay disjoint.
pub fn residue_context(
    snapshot: &StructureSnapshot,
    sequence: &ProteinSequence,
    i: usize,
    radius: usize,
    cutoff: f64,
    digest: MemoryDigest,
) -> Result<ResidueContext, ContextError> {
    let n = sequence.len();
    if i >= n {
        return Err(ContextError::OutOfRange { position: i, len: n });
    }
    if snapshot.len() != n {
        return Err(ContextError::LengthMismatch {
            coords: n,
            ss: snapshot.len(),
        });
    }
    if radius < 1 {
        return Err(ContextError::InvalidParameter("radius must be at least 1"));
    }
    if !(cutoff > 0.0) {
        return Err(ContextError::InvalidParameter("cutoff must be positive"));
    }

    let lo = i.saturating_sub(radius);
    let hi = (i + radius).min(n - 1);
    let linear_neighbors = (lo..=hi)
        .filter(|&j| j != i)
        .map(|j| (j as isize - i as isize, sequence[j]))
        .collect();
    let ss_window = (lo..=hi).map(|j| snapshot.ss().labels()[j].code()).collect();

    let mut spatial_neighbors = Vec::new();
    if !snapshot.is_sentinel() {
        let d = snapshot.distances();
        for j in 0..n {
            if j.abs_diff(i) > radius && d[(i, j)] < cutoff {
                spatial_neighbors.push(SpatialNeighbor {
                    position: j,
                    distance: d[(i, j)],
                });
            }
        }
        spatial_neighbors.sort_by(|a, b| a.distance.total_cmp(&b.distance).then(a.position.cmp(&b.position)));
    }

    Ok(ResidueContext {
        position: i,
        sequence_len: n,
        current: sequence[i],
        linear_neighbors,
        spatial_neighbors,
        exposure: snapshot.exposure()[i],
        ss_label: snapshot.ss().labels()[i],
        ss_window,
        has_structure: !snapshot.is_sentinel(),
        memory_digest: digest,
    })
}
