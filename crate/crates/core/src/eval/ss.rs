//! Secondary structure from a smoothed propensity vote.

use crate::sequence::{ProteinSequence, SsLabel, SsString};
use crate::tables::propensities;

pub const WINDOW_HALF_WIDTH: usize = 2;
pub const NUCLEATION_THRESHOLD: f64 = 1.03;
pub const MIN_HELIX_RUN: usize = 4;
pub const MIN_STRAND_RUN: usize = 3;

/// Labels each residue by the mean helix and sheet propensity over a
/// five-residue window (clipped at the ends), then demotes helix runs
/// shorter than 4 and strand runs shorter than 3 to loop.
pub fn assign_ss(sequence: &ProteinSequence) -> SsString {
    let table = propensities();
    let n = sequence.len();
    let mut labels: Vec<SsLabel> = (0..n)
        .map(|i| {
            let lo = i.saturating_sub(WINDOW_HALF_WIDTH);
            let hi = (i + WINDOW_HALF_WIDTH).min(n - 1);
            let width = (hi - lo + 1) as f64;
            let (h, e) = (lo..=hi).fold((0.0, 0.0), |(h, e), j| {
                let p = table.get(sequence[j]);
                (h + p.helix, e + p.sheet)
            });
            let (h, e) = (h / width, e / width);
            if h > NUCLEATION_THRESHOLD && h > e {
                SsLabel::Helix
            } else if e > NUCLEATION_THRESHOLD && e > h {
                SsLabel::Strand
            } else {
                SsLabel::Loop
            }
        })
        .collect();

    let mut start = 0;
    while start < n {
        let label = labels[start];
        let end = (start..n).find(|&j| labels[j] != label).unwrap_or(n);
        let min_run = match label {
            SsLabel::Helix => MIN_HELIX_RUN,
            SsLabel::Strand => MIN_STRAND_RUN,
            SsLabel::Loop => 0,
        };
        if end - start < min_run {
            labels[start..end].fill(SsLabel::Loop);
        }
        start = end;
    }
    SsString::new(labels)
}
