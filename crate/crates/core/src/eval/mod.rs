//! Structure evaluation. The built-in evaluator is a deterministic stand-in
//! for folding, DSSP and an all-atom score function: propensity-vote
//! secondary structure, an idealized Cα trace, a residue-class contact
//! energy and ANM mode spectra. Realistic numbers come from attaching an
//! external evaluator through the line protocol in [`bridge`].

pub mod anm;
pub mod backbone;
pub mod bridge;
pub mod energy;
pub mod objective;
pub mod ss;

use std::collections::BTreeMap;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::context::Coord;
use crate::sequence::{ProteinSequence, SsString};

pub use anm::{anm_frequencies, anm_hessian, AnmParams};
pub use backbone::build_backbone;
pub use bridge::{BridgeCommand, ExternalEvaluator, PROTOCOL_VERSION};
pub use energy::contact_energy;
pub use objective::{frequency_score, objective_score, DesignObjective, ObjectiveScorerSpec, ResidueSet, ScoreInputs};
pub use ss::assign_ss;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("structure is disconnected: {zero_modes} near-zero modes (expected 6)")]
    DisconnectedStructure { zero_modes: usize },
    #[error("requested {requested} modes but only {available} non-zero modes exist")]
    InsufficientModes { requested: usize, available: usize },
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("evaluation is missing field {0}")]
    MissingField(&'static str),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("bridge unavailable: {0}")]
    BridgeUnavailable(String),
    #[error("protocol violation: {0}")]
    ProtocolViolation(String),
    #[error("bridge timed out after {0:?}")]
    Timeout(Duration),
    #[error("bridge reported error: {0}")]
    BridgeReported(String),
}

/// Fold-derived facts about one sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationResult {
    /// Lower is better.
    pub total_energy: f64,
    pub energy_terms: BTreeMap<String, f64>,
    pub ss: SsString,
    pub ca_coords: Vec<Coord>,
    /// In `[0, 1]`.
    pub objective_score: f64,
    /// Max-normalized mode frequencies, ascending, when the objective needs them.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frequencies: Option<Vec<f64>>,
}

impl EvaluationResult {
    /// Checks the result invariants for a sequence of length `n`. The error
    /// names the offending field.
    pub fn check_invariants(&self, n: usize) -> Result<(), String> {
        if !self.total_energy.is_finite() {
            return Err("total_energy: not finite".into());
        }
        if let Some((k, _)) = self.energy_terms.iter().find(|(_, v)| !v.is_finite()) {
            return Err(format!("energy_terms: {k} not finite"));
        }
        if self.ss.len() != n {
            return Err(format!("ss: length {} != sequence length {n}", self.ss.len()));
        }
        if self.ca_coords.len() != n {
            return Err(format!(
                "ca_coords: {} rows != sequence length {n}",
                self.ca_coords.len()
            ));
        }
        if self.ca_coords.iter().flatten().any(|v| !v.is_finite()) {
            return Err("ca_coords: not finite".into());
        }
        if !(0.0..=1.0).contains(&self.objective_score) {
            return Err(format!("objective_score: {} outside [0, 1]", self.objective_score));
        }
        if let Some(f) = &self.frequencies {
            if f.iter().any(|&v| !(v > 0.0 && v <= 1.0)) {
                return Err("frequencies: values must lie in (0, 1]".into());
            }
            if f.windows(2).any(|w| w[0] > w[1]) {
                return Err("frequencies: not sorted ascending".into());
            }
        }
        Ok(())
    }
}

/// Anything that can fold and score a sequence.
pub trait Evaluator: Send {
    fn evaluate(
        &mut self,
        sequence: &ProteinSequence,
        scorer: &ObjectiveScorerSpec,
    ) -> Result<EvaluationResult, EvalError>;
}

/// Deterministic offline evaluator.
#[derive(Debug, Clone, Copy, Default)]
pub struct BuiltinEvaluator {
    pub anm: AnmParams,
}

impl Evaluator for BuiltinEvaluator {
    fn evaluate(
        &mut self,
        sequence: &ProteinSequence,
        scorer: &ObjectiveScorerSpec,
    ) -> Result<EvaluationResult, EvalError> {
        evaluate_builtin(sequence, scorer, &self.anm)
    }
}

/// assign_ss, build_backbone, contact_energy, then mode spectra when the
/// objective asks for them, then the objective score.
pub fn evaluate_builtin(
    sequence: &ProteinSequence,
    scorer: &ObjectiveScorerSpec,
    anm: &AnmParams,
) -> Result<EvaluationResult, EvalError> {
    let ss = assign_ss(sequence);
    let ca_coords = build_backbone(sequence, &ss)?;
    let (total_energy, energy_terms) = contact_energy(sequence, &ca_coords)?;
    let frequencies = match scorer.mode_count() {
        Some(k) => Some(anm_frequencies(&ca_coords, anm.cutoff, anm.gamma, k)?),
        None => None,
    };
    let objective_score = objective_score(
        scorer,
        sequence,
        &ScoreInputs {
            ss: Some(&ss),
            ca_coords: Some(&ca_coords),
            frequencies: frequencies.as_deref(),
        },
    )?;
    Ok(EvaluationResult {
        total_energy,
        energy_terms,
        ss,
        ca_coords,
        objective_score,
        frequencies,
    })
}
