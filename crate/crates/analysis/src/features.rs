//! Composition-based feature vectors and their preprocessing.

use std::fmt;

use swarm_core::{AminoAcid, ProteinSequence};

use crate::AnalysisError;

pub const FEATURE_DIMS: usize = 22;
pub const VARIANCE_THRESHOLD: f64 = 1e-7;
pub const CORRELATION_THRESHOLD: f64 = 0.95;

/// Version tag of [`RESIDUE_MASSES`]; bump when the values change.
pub const MASS_TABLE_VERSION: &str = "average-residue-masses/1";
/// Average mass of one water molecule in daltons.
pub const WATER_MASS: f64 = 18.01528;
/// Average residue masses in daltons (amino acid minus water), in
/// `AminoAcid::ALL` order.
pub const RESIDUE_MASSES: [f64; 20] = [
    71.0788,  // A
    156.1875, // R
    114.1038, // N
    115.0886, // D
    103.1388, // C
    128.1307, // Q
    129.1155, // E
    57.0519,  // G
    137.1411, // H
    113.1594, // I
    113.1594, // L
    128.1741, // K
    131.1926, // M
    147.1766, // F
    97.1167,  // P
    87.0782,  // S
    101.1051, // T
    186.2132, // W
    163.1760, // Y
    99.1326,  // V
];

pub fn residue_mass(aa: AminoAcid) -> f64 {
    RESIDUE_MASSES[aa.index()]
}

/// Where a sequence came from: a campaign objective or a corpus name.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SourceLabel(pub String);

impl fmt::Display for SourceLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    /// Residue frequencies in `AminoAcid::ALL` order.
    pub composition: [f64; 20],
    /// Average mass per residue of the free peptide, daltons.
    pub mol_weight: f64,
    /// Fraction of F, W and Y.
    pub aromaticity: f64,
    pub source_label: SourceLabel,
}

impl FeatureVector {
    pub fn values(&self) -> [f64; FEATURE_DIMS] {
        let mut out = [0.0; FEATURE_DIMS];
        out[..20].copy_from_slice(&self.composition);
        out[20] = self.mol_weight;
        out[21] = self.aromaticity;
        out
    }
}

/// Names of the 22 raw dimensions, in [`FeatureVector::values`] order.
pub fn feature_names() -> Vec<String> {
    AminoAcid::ALL
        .iter()
        .map(|aa| format!("comp_{}", aa.code()))
        .chain(["mol_weight".to_string(), "aromaticity".to_string()])
        .collect()
}

pub fn features(sequence: &ProteinSequence, label: SourceLabel) -> FeatureVector {
    let n = sequence.len() as f64;
    let mut counts = [0usize; 20];
    for aa in sequence.iter() {
        counts[aa.index()] += 1;
    }
    let mut composition = [0.0; 20];
    for (c, k) in composition.iter_mut().zip(counts) {
        *c = k as f64 / n;
    }
    let mass: f64 = sequence.iter().map(residue_mass).sum::<f64>() + WATER_MASS;
    let aromatic = [AminoAcid::Phe, AminoAcid::Trp, AminoAcid::Tyr]
        .iter()
        .map(|aa| counts[aa.index()])
        .sum::<usize>();
    FeatureVector {
        composition,
        mol_weight: mass / n,
        aromaticity: aromatic as f64 / n,
        source_label: label,
    }
}

/// Rows of feature values plus the raw dimensions they keep.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<SourceLabel>,
    pub kept_dims: Vec<usize>,
}

impl FeatureMatrix {
    pub fn from_vectors(vectors: &[FeatureVector]) -> Self {
        FeatureMatrix {
            rows: vectors.iter().map(|v| v.values().to_vec()).collect(),
            labels: vectors.iter().map(|v| v.source_label.clone()).collect(),
            kept_dims: (0..FEATURE_DIMS).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    fn column(&self, d: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[d]).collect()
    }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Population variance.
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64
}

pub fn pearson(xs: &[f64], ys: &[f64]) -> f64 {
    let (mx, my) = (mean(xs), mean(ys));
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    sxy / (sxx * syy).sqrt()
}

/// Drops near-constant dimensions, then scans the rest in order and drops
/// any dimension too correlated with an earlier survivor.
pub fn preprocess(matrix: &FeatureMatrix) -> Result<FeatureMatrix, AnalysisError> {
    if matrix.len() < 2 {
        return Err(AnalysisError::TooFewRows {
            needed: 2,
            found: matrix.len(),
        });
    }
    let width = matrix.kept_dims.len();
    let columns: Vec<Vec<f64>> = (0..width).map(|d| matrix.column(d)).collect();
    let varied: Vec<usize> = (0..width)
        .filter(|&d| variance(&columns[d]) >= VARIANCE_THRESHOLD)
        .collect();
    let mut kept: Vec<usize> = Vec::new();
    for &d in &varied {
        if kept
            .iter()
            .all(|&k| pearson(&columns[k], &columns[d]).abs() < CORRELATION_THRESHOLD)
        {
            kept.push(d);
        }
    }
    if kept.is_empty() {
        return Err(AnalysisError::DegenerateMatrix);
    }
    Ok(FeatureMatrix {
        rows: matrix
            .rows
            .iter()
            .map(|r| kept.iter().map(|&d| r[d]).collect())
            .collect(),
        labels: matrix.labels.clone(),
        kept_dims: kept.iter().map(|&d| matrix.kept_dims[d]).collect(),
    })
}
