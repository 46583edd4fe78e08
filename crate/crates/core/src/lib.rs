//! Position-per-agent protein sequence design.
//!
//! Every residue position is owned by an agent that proposes a replacement
//! residue each iteration. Proposals are assembled into a candidate
//! sequence, evaluated, and kept or discarded by an acceptance rule, while a
//! shared memory records which substitutions worked in which contexts.

pub mod agents;
pub mod context;
pub mod engine;
pub mod eval;
pub mod fasta;
pub mod memory;
pub mod sequence;
pub mod tables;

pub use sequence::{hamming, AminoAcid, ProteinSequence, SequenceError, SsLabel, SsString};
