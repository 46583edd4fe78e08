//! Campaign configuration.

use std::path::PathBuf;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::agents::AgentPolicySpec;
use crate::context::{DEFAULT_RADIUS, DEFAULT_SPATIAL_CUTOFF};
use crate::eval::bridge::{BridgeCommand, DEFAULT_BRIDGE_TIMEOUT};
use crate::eval::{AnmParams, BuiltinEvaluator, DesignObjective, Evaluator, ExternalEvaluator};
use crate::memory::{DEFAULT_MIN_SUPPORT, DEFAULT_THETA};
use crate::sequence::ProteinSequence;

pub const DEFAULT_ITERATIONS: usize = 64;
pub const DEFAULT_EPSILON: f64 = 0.01;
pub const DEFAULT_MAX_CONSECUTIVE_FAILURES: usize = 5;
pub const DEFAULT_CHECKPOINT_EVERY: usize = 8;
pub const MIN_SEQUENCE_LENGTH: usize = 2;

/// A configuration problem, tied to the field that caused it.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid config field {field}: {message}")]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError {
            field: field.into(),
            message: message.into(),
        }
    }
}

fn default_timeout_secs() -> f64 {
    DEFAULT_BRIDGE_TIMEOUT.as_secs_f64()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EvaluatorSpec {
    #[default]
    Builtin,
    External {
        #[serde(flatten)]
        command: BridgeCommand,
        #[serde(default = "default_timeout_secs")]
        timeout_secs: f64,
    },
}

impl EvaluatorSpec {
    pub fn build(&self, anm: AnmParams) -> Box<dyn Evaluator> {
        match self {
            EvaluatorSpec::Builtin => Box::new(BuiltinEvaluator { anm }),
            EvaluatorSpec::External { command, timeout_secs } => Box::new(ExternalEvaluator::new(
                command.clone(),
                Duration::from_secs_f64(*timeout_secs),
                anm,
            )),
        }
    }
}

fn default_iterations() -> usize {
    DEFAULT_ITERATIONS
}
fn default_radius() -> usize {
    DEFAULT_RADIUS
}
fn default_cutoff() -> f64 {
    DEFAULT_SPATIAL_CUTOFF
}
fn default_epsilon() -> f64 {
    DEFAULT_EPSILON
}
fn default_theta() -> f64 {
    DEFAULT_THETA
}
fn default_min_support() -> u32 {
    DEFAULT_MIN_SUPPORT
}
fn default_max_failures() -> usize {
    DEFAULT_MAX_CONSECUTIVE_FAILURES
}
fn default_checkpoint_every() -> usize {
    DEFAULT_CHECKPOINT_EVERY
}
fn default_output_path() -> PathBuf {
    PathBuf::from("trajectory.jsonl")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub objective: DesignObjective,
    pub start_sequence: ProteinSequence,
    #[serde(default = "default_iterations")]
    pub iterations: usize,
    #[serde(default)]
    pub seed: u64,
    pub policy: AgentPolicySpec,
    #[serde(default)]
    pub evaluator: EvaluatorSpec,
    /// Linear neighborhood radius.
    #[serde(default = "default_radius")]
    pub radius: usize,
    /// Spatial neighbor cutoff in Å.
    #[serde(default = "default_cutoff")]
    pub cutoff: f64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_theta")]
    pub theta: f64,
    #[serde(default = "default_min_support")]
    pub min_support: u32,
    #[serde(default)]
    pub anm: AnmParams,
    #[serde(default = "default_max_failures")]
    pub max_consecutive_failures: usize,
    #[serde(default = "default_checkpoint_every")]
    pub checkpoint_every: usize,
    /// Adds wall-clock fields to records. Off by default so that seeded
    /// runs produce identical files.
    #[serde(default)]
    pub record_timing: bool,
    #[serde(default = "default_output_path")]
    pub output_path: PathBuf,
}

impl RunConfig {
    /// A config with defaults for everything but the essentials.
    pub fn new(objective: DesignObjective, start_sequence: ProteinSequence, policy: AgentPolicySpec) -> Self {
        RunConfig {
            objective,
            start_sequence,
            iterations: DEFAULT_ITERATIONS,
            seed: 0,
            policy,
            evaluator: EvaluatorSpec::Builtin,
            radius: DEFAULT_RADIUS,
            cutoff: DEFAULT_SPATIAL_CUTOFF,
            epsilon: DEFAULT_EPSILON,
            theta: DEFAULT_THETA,
            min_support: DEFAULT_MIN_SUPPORT,
            anm: AnmParams::default(),
            max_consecutive_failures: DEFAULT_MAX_CONSECUTIVE_FAILURES,
            checkpoint_every: DEFAULT_CHECKPOINT_EVERY,
            record_timing: false,
            output_path: default_output_path(),
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let n = self.start_sequence.len();
        if n < MIN_SEQUENCE_LENGTH {
            return Err(ConfigError::new(
                "start_sequence",
                format!("length {n} is below the minimum of {MIN_SEQUENCE_LENGTH}"),
            ));
        }
        if self.iterations < 1 {
            return Err(ConfigError::new("iterations", "must be at least 1"));
        }
        if !(self.epsilon >= 0.0) || !self.epsilon.is_finite() {
            return Err(ConfigError::new(
                "epsilon",
                format!("must be >= 0, got {}", self.epsilon),
            ));
        }
        if !(self.theta > 0.0 && self.theta < 1.0) {
            return Err(ConfigError::new(
                "theta",
                format!("must lie in (0, 1), got {}", self.theta),
            ));
        }
        if self.radius < 1 {
            return Err(ConfigError::new("radius", "must be at least 1"));
        }
        if !(self.cutoff > 0.0) || !self.cutoff.is_finite() {
            return Err(ConfigError::new("cutoff", format!("must be > 0, got {}", self.cutoff)));
        }
        if !(self.anm.cutoff > 0.0) || !(self.anm.gamma > 0.0) {
            return Err(ConfigError::new("anm", "cutoff and gamma must be > 0"));
        }
        if self.max_consecutive_failures < 1 {
            return Err(ConfigError::new("max_consecutive_failures", "must be at least 1"));
        }
        if self.checkpoint_every < 1 {
            return Err(ConfigError::new("checkpoint_every", "must be at least 1"));
        }
        self.objective
            .validate(n)
            .map_err(|e| ConfigError::new(format!("objective.{}", e.split(':').next().unwrap_or("")), e))?;
        self.policy.validate().map_err(|e| ConfigError::new("policy", e))?;
        if let EvaluatorSpec::External { command, timeout_secs } = &self.evaluator {
            if command.program.trim().is_empty() {
                return Err(ConfigError::new("evaluator.program", "must not be empty"));
            }
            if !(*timeout_secs > 0.0) || !timeout_secs.is_finite() {
                return Err(ConfigError::new("evaluator.timeout_secs", "must be > 0"));
            }
        }
        Ok(())
    }

    /// SHA-256 over the canonical JSON of every field except the output
    /// location, hex encoded.
    pub fn config_hash(&self) -> String {
        let mut value = serde_json::to_value(self).expect("config serializes");
        if let Some(obj) = value.as_object_mut() {
            obj.remove("output_path");
        }
        let bytes = serde_json::to_vec(&value).expect("config serializes");
        hex::encode(Sha256::new().chain_update(&bytes).finalize())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::ObjectiveScorerSpec;

    fn config() -> RunConfig {
        RunConfig::new(
            DesignObjective {
                name: "sym".into(),
                prompt_text: "mirror neighbors".into(),
                scorer: ObjectiveScorerSpec::LocalSymmetry,
            },
            ProteinSequence::parse("MKTAYIAKQR").unwrap(),
            AgentPolicySpec::Keep,
        )
    }

    #[test]
    fn defaults_validate() {
        config().validate().unwrap();
    }

    #[test]
    fn errors_name_the_field() {
        let mut c = config();
        c.iterations = 0;
        assert_eq!(c.validate().unwrap_err().field, "iterations");
        let mut c = config();
        c.epsilon = -0.1;
        assert_eq!(c.validate().unwrap_err().field, "epsilon");
        let mut c = config();
        c.start_sequence = ProteinSequence::parse("A").unwrap();
        assert_eq!(c.validate().unwrap_err().field, "start_sequence");
        let mut c = config();
        c.objective.prompt_text = " ".into();
        assert_eq!(c.validate().unwrap_err().field, "objective.prompt_text");
    }

    #[test]
    fn hash_ignores_output_path() {
        let a = config();
        let mut b = config();
        b.output_path = "elsewhere.jsonl".into();
        assert_eq!(a.config_hash(), b.config_hash());
        b.seed = 1;
        assert_ne!(a.config_hash(), b.config_hash());
        assert_eq!(a.config_hash().len(), 64);
    }

    #[test]
    fn missing_start_sequence_is_named() {
        let err = serde_json::from_str::<RunConfig>(
            r#"{"objective":{"name":"x","prompt_text":"y","scorer":{"kind":"local_symmetry"}},"policy":{"kind":"keep"}}"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("start_sequence"), "{err}");
    }

    #[test]
    fn external_evaluator_shape() {
        let spec: EvaluatorSpec =
            serde_json::from_str(r#"{"kind":"external","program":"python3","args":["bridge.py"]}"#).unwrap();
        assert_eq!(
            spec,
            EvaluatorSpec::External {
                command: BridgeCommand::new("python3", ["bridge.py"]),
                timeout_secs: DEFAULT_BRIDGE_TIMEOUT.as_secs_f64(),
            }
        );
    }
}
