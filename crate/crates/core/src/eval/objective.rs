//! Objective scorers. Every scorer maps into `[0, 1]`, higher is better.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::context::{euclidean, Coord};
use crate::eval::EvalError;
use crate::sequence::{AminoAcid, ProteinSequence, SsLabel, SsString};
use crate::tables::classes;

pub const DEFAULT_MIN_COORDINATING: usize = 4;
/// Residues in a metal pocket must be pairwise closer than this.
pub const POCKET_SPAN: f64 = 12.0;
pub const POCKET_SIZE: usize = 4;
/// Spatial factor when no compact pocket exists.
pub const NO_POCKET_FACTOR: f64 = 0.8;

/// Marks an `SsComposition` position that may take any label.
pub fn is_dont_care(c: char) -> bool {
    c == '.' || c == '·'
}

/// A set of residues, written either as a class name from the class table
/// (`hydrophobic`, `aromatic`, ...) or as literal one-letter codes (`G`, `FWY`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResidueSet {
    label: String,
    members: Vec<AminoAcid>,
}

impl ResidueSet {
    pub fn contains(&self, aa: AminoAcid) -> bool {
        self.members.contains(&aa)
    }

    pub fn members(&self) -> &[AminoAcid] {
        &self.members
    }
}

impl FromStr for ResidueSet {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let label = s.trim();
        if let Some(members) = classes().named_set(&label.to_ascii_lowercase()) {
            return Ok(ResidueSet {
                label: label.to_ascii_lowercase(),
                members: members.to_vec(),
            });
        }
        let mut members = Vec::new();
        for c in label.chars() {
            let aa = AminoAcid::from_code(c)
                .ok_or_else(|| format!("'{label}' is neither a class name nor residue letters"))?;
            if !members.contains(&aa) {
                members.push(aa);
            }
        }
        if members.is_empty() {
            return Err("empty residue set".into());
        }
        Ok(ResidueSet {
            label: label.to_ascii_uppercase(),
            members,
        })
    }
}

impl fmt::Display for ResidueSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label)
    }
}

impl Serialize for ResidueSet {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.label)
    }
}

impl<'de> Deserialize<'de> for ResidueSet {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

fn default_min_coordinating() -> usize {
    DEFAULT_MIN_COORDINATING
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ObjectiveScorerSpec {
    /// Per-position target over H/E/L, `.` for don't-care.
    SsComposition { target: String },
    /// Target normalized mode spectrum; its length sets the mode count.
    FrequencySpectrum { target: Vec<f64> },
    /// Residue at position i must lie in `classes[i % period]`.
    PatternRule { period: usize, classes: Vec<ResidueSet> },
    /// Each interior residue's neighbors share a class.
    LocalSymmetry,
    MetalPocket {
        #[serde(default = "default_min_coordinating")]
        min_coordinating: usize,
    },
}

impl ObjectiveScorerSpec {
    /// Number of ANM modes the scorer needs, if any.
    pub fn mode_count(&self) -> Option<usize> {
        match self {
            ObjectiveScorerSpec::FrequencySpectrum { target } => Some(target.len()),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ObjectiveScorerSpec::SsComposition { .. } => "ss_composition",
            ObjectiveScorerSpec::FrequencySpectrum { .. } => "frequency_spectrum",
            ObjectiveScorerSpec::PatternRule { .. } => "pattern_rule",
            ObjectiveScorerSpec::LocalSymmetry => "local_symmetry",
            ObjectiveScorerSpec::MetalPocket { .. } => "metal_pocket",
        }
    }

    /// Checks the spec against a design of length `n`.
    pub fn validate(&self, n: usize) -> Result<(), String> {
        match self {
            ObjectiveScorerSpec::SsComposition { target } => {
                let len = target.chars().count();
                if len != n {
                    return Err(format!("target length {len} != sequence length {n}"));
                }
                if let Some(c) = target
                    .chars()
                    .find(|&c| !is_dont_care(c) && SsLabel::from_code(c).is_none())
                {
                    return Err(format!("target contains '{c}', expected H, E, L or '.'"));
                }
            }
            ObjectiveScorerSpec::FrequencySpectrum { target } => {
                if target.is_empty() {
                    return Err("target spectrum is empty".into());
                }
                if target.iter().any(|&v| !(v > 0.0 && v <= 1.0)) {
                    return Err("target values must lie in (0, 1]".into());
                }
                if 3 * n < target.len() + 6 {
                    return Err(format!(
                        "{} modes requested but a {n}-residue chain has {}",
                        target.len(),
                        (3 * n).saturating_sub(6)
                    ));
                }
            }
            ObjectiveScorerSpec::PatternRule { period, classes } => {
                if *period == 0 {
                    return Err("period must be at least 1".into());
                }
                if classes.len() != *period {
                    return Err(format!("{} class sets for period {period}", classes.len()));
                }
            }
            ObjectiveScorerSpec::LocalSymmetry => {}
            ObjectiveScorerSpec::MetalPocket { min_coordinating } => {
                if *min_coordinating == 0 {
                    return Err("min_coordinating must be at least 1".into());
                }
            }
        }
        Ok(())
    }
}

/// What the campaign is trying to achieve: text for the agents and a
/// scorer for the evaluator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignObjective {
    pub name: String,
    pub prompt_text: String,
    pub scorer: ObjectiveScorerSpec,
}

impl DesignObjective {
    pub fn validate(&self, n: usize) -> Result<(), String> {
        if self.name.trim().is_empty() {
            return Err("name: must not be empty".into());
        }
        if self.prompt_text.trim().is_empty() {
            return Err("prompt_text: must not be empty".into());
        }
        self.scorer.validate(n).map_err(|e| format!("scorer: {e}"))
    }
}

/// Evaluation fields a scorer may read.
#[derive(Debug, Clone, Copy, Default)]
pub struct ScoreInputs<'a> {
    pub ss: Option<&'a SsString>,
    pub ca_coords: Option<&'a [Coord]>,
    pub frequencies: Option<&'a [f64]>,
}

/// Cosine similarity and mean squared error between two spectra.
pub fn frequency_score(freqs: &[f64], target: &[f64]) -> Result<(f64, f64), EvalError> {
    if freqs.len() != target.len() {
        return Err(EvalError::LengthMismatch {
            left: freqs.len(),
            right: target.len(),
        });
    }
    if freqs.is_empty() {
        return Err(EvalError::InvalidInput("empty spectrum".into()));
    }
    if freqs.iter().chain(target).any(|&v| !(v > 0.0) || !v.is_finite()) {
        return Err(EvalError::InvalidInput("spectra must be positive".into()));
    }
    let dot: f64 = freqs.iter().zip(target).map(|(a, b)| a * b).sum();
    let na: f64 = freqs.iter().map(|a| a * a).sum();
    let nb: f64 = target.iter().map(|b| b * b).sum();
    let cosine = (dot / (na * nb).sqrt()).clamp(0.0, 1.0);
    let mse = freqs.iter().zip(target).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / freqs.len() as f64;
    Ok((cosine, mse))
}

fn has_pocket(coords: &[Coord], candidates: &[usize]) -> bool {
    fn extend(coords: &[Coord], candidates: &[usize], chosen: &mut Vec<usize>, from: usize) -> bool {
        if chosen.len() == POCKET_SIZE {
            return true;
        }
        for k in from..candidates.len() {
            let c = candidates[k];
            if chosen.iter().all(|&p| euclidean(&coords[p], &coords[c]) < POCKET_SPAN) {
                chosen.push(c);
                if extend(coords, candidates, chosen, k + 1) {
                    return true;
                }
                chosen.pop();
            }
        }
        false
    }
    extend(coords, candidates, &mut Vec::with_capacity(POCKET_SIZE), 0)
}

pub fn objective_score(
    spec: &ObjectiveScorerSpec,
    sequence: &ProteinSequence,
    inputs: &ScoreInputs<'_>,
) -> Result<f64, EvalError> {
    let n = sequence.len();
    let score = match spec {
        ObjectiveScorerSpec::SsComposition { target } => {
            let ss = inputs.ss.ok_or(EvalError::MissingField("ss"))?;
            let target: Vec<char> = target.chars().collect();
            if target.len() != ss.len() {
                return Err(EvalError::LengthMismatch {
                    left: target.len(),
                    right: ss.len(),
                });
            }
            let (mut scored, mut matched) = (0usize, 0usize);
            for (t, label) in target.iter().zip(ss.labels()) {
                if is_dont_care(*t) {
                    continue;
                }
                scored += 1;
                if SsLabel::from_code(*t) == Some(*label) {
                    matched += 1;
                }
            }
            if scored == 0 {
                1.0
            } else {
                matched as f64 / scored as f64
            }
        }
        ObjectiveScorerSpec::FrequencySpectrum { target } => {
            let freqs = inputs.frequencies.ok_or(EvalError::MissingField("frequencies"))?;
            frequency_score(freqs, target)?.0
        }
        ObjectiveScorerSpec::PatternRule { period, classes } => {
            if *period == 0 || classes.len() != *period {
                return Err(EvalError::InvalidInput(format!(
                    "{} class sets for period {period}",
                    classes.len()
                )));
            }
            let hits = sequence
                .iter()
                .enumerate()
                .filter(|(i, aa)| classes[i % period].contains(*aa))
                .count();
            hits as f64 / n as f64
        }
        ObjectiveScorerSpec::LocalSymmetry => {
            if n < 3 {
                0.0
            } else {
                let table = classes();
                let mirrored = (1..n - 1)
                    .filter(|&i| table.class_of(sequence[i - 1]) == table.class_of(sequence[i + 1]))
                    .count();
                mirrored as f64 / (n - 2) as f64
            }
        }
        ObjectiveScorerSpec::MetalPocket { min_coordinating } => {
            let coords = inputs.ca_coords.ok_or(EvalError::MissingField("ca_coords"))?;
            if coords.len() != n {
                return Err(EvalError::LengthMismatch {
                    left: n,
                    right: coords.len(),
                });
            }
            let table = classes();
            let coordinating: Vec<usize> = (0..n).filter(|&i| table.is_metal_coordinating(sequence[i])).collect();
            let fill = (coordinating.len() as f64 / (*min_coordinating).max(1) as f64).min(1.0);
            let factor = if has_pocket(coords, &coordinating) {
                1.0
            } else {
                NO_POCKET_FACTOR
            };
            fill * factor
        }
    };
    Ok(score.clamp(0.0, 1.0))
}
