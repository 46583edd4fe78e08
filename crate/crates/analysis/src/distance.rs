//! Pairwise distances and per-position counts.

use swarm_core::{hamming, AminoAcid, ProteinSequence};

use crate::AnalysisError;

pub fn euclidean_distances(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = rows.len();
    let mut d = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let s: f64 = rows[i].iter().zip(&rows[j]).map(|(a, b)| (a - b) * (a - b)).sum();
            d[i][j] = s.sqrt();
            d[j][i] = d[i][j];
        }
    }
    d
}

fn check_lengths(sequences: &[ProteinSequence]) -> Result<usize, AnalysisError> {
    let first = sequences.first().ok_or(AnalysisError::EmptyInput)?;
    if let Some((index, s)) = sequences.iter().enumerate().find(|(_, s)| s.len() != first.len()) {
        return Err(AnalysisError::LengthMismatch {
            index,
            expected: first.len(),
            found: s.len(),
        });
    }
    Ok(first.len())
}

pub fn hamming_matrix(sequences: &[ProteinSequence]) -> Result<Vec<Vec<usize>>, AnalysisError> {
    check_lengths(sequences)?;
    let n = sequences.len();
    let mut m = vec![vec![0; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = hamming(&sequences[i], &sequences[j]).expect("lengths checked");
            m[i][j] = d;
            m[j][i] = d;
        }
    }
    Ok(m)
}

/// Counts per position, columns in `AminoAcid::ALL` order.
pub fn logo_counts(sequences: &[ProteinSequence]) -> Result<Vec<[usize; 20]>, AnalysisError> {
    let len = check_lengths(sequences)?;
    let mut counts = vec![[0; 20]; len];
    for s in sequences {
        for (column, aa) in counts.iter_mut().zip(s.iter()) {
            column[aa.index()] += 1;
        }
    }
    Ok(counts)
}

pub fn logo_header() -> Vec<String> {
    AminoAcid::ALL.iter().map(|aa| aa.code().to_string()).collect()
}
