//! Residue-class contact energy. Lower is better.

use std::collections::BTreeMap;

use crate::context::{euclidean, Coord};
use crate::eval::EvalError;
use crate::sequence::{AminoAcid, ProteinSequence};
use crate::tables::{classes, reference_energies, ResidueClass};

pub const CONTACT_CUTOFF: f64 = 8.0;
pub const MIN_SEPARATION: usize = 3;
pub const CLASH_DISTANCE: f64 = 3.2;
pub const CLASH_PENALTY: f64 = 10.0;

pub const TERM_CONTACT: &str = "contact";
pub const TERM_CLASH: &str = "clash";
pub const TERM_REFERENCE: &str = "reference";

/// Pairwise contact weight between two residues.
pub fn pair_weight(a: AminoAcid, b: AminoAcid) -> f64 {
    use ResidueClass::*;
    let table = classes();
    match (table.class_of(a), table.class_of(b)) {
        (Hydrophobic, Hydrophobic) => -1.0,
        (Hydrophobic, Polar) | (Polar, Hydrophobic) => 0.3,
        (Positive, Negative) | (Negative, Positive) => -0.5,
        (Positive, Positive) | (Negative, Negative) => 0.5,
        _ => 0.0,
    }
}

/// Total energy and its `contact`, `clash` and `reference` terms.
///
/// Contacts count pairs at sequence separation ≥ 3 closer than 8 Å; every
/// pair closer than 3.2 Å adds a clash penalty of 10.
pub fn contact_energy(
    sequence: &ProteinSequence,
    ca_coords: &[Coord],
) -> Result<(f64, BTreeMap<String, f64>), EvalError> {
    let n = sequence.len();
    if ca_coords.len() != n {
        return Err(EvalError::LengthMismatch {
            left: n,
            right: ca_coords.len(),
        });
    }
    let mut contact = 0.0;
    let mut clash = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let d = euclidean(&ca_coords[i], &ca_coords[j]);
            if j - i >= MIN_SEPARATION && d < CONTACT_CUTOFF {
                contact += pair_weight(sequence[i], sequence[j]);
            }
            if d < CLASH_DISTANCE {
                clash += CLASH_PENALTY;
            }
        }
    }
    let refs = reference_energies();
    let reference: f64 = sequence.iter().map(|aa| refs.get(aa)).sum();
    let terms = BTreeMap::from([
        (TERM_CONTACT.to_string(), contact),
        (TERM_CLASH.to_string(), clash),
        (TERM_REFERENCE.to_string(), reference),
    ]);
    Ok((contact + clash + reference, terms))
}
