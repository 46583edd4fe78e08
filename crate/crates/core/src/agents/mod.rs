//! Per-position agents. Each agent sees one [`ResidueContext`] and answers
//! with a single-residue [`Proposal`]. Policies never touch memory or
//! structure state; they only read the prompt bundle and context.

pub mod llm;
pub mod local;
pub mod prompt;

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::context::ResidueContext;
use crate::eval::objective::DesignObjective;
use crate::eval::EvaluationResult;
use crate::sequence::AminoAcid;

pub use llm::{parse_proposal_text, LlmEndpointConfig, LlmPolicy};
pub use local::{KeepPolicy, PropensityPolicy, RandomPolicy};
pub use prompt::{build_prompt, PromptBundle};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AgentError {
    #[error("malformed response: {0}")]
    MalformedResponse(String),
    #[error("transport error: {0}")]
    TransportError(String),
    #[error("credential variable {0} is not set")]
    MissingCredential(String),
    #[error("invalid policy: {0}")]
    InvalidPolicy(String),
}

/// One agent's answer: the residue it wants at its position.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Proposal {
    pub position: usize,
    pub proposed_value: AminoAcid,
    pub reasoning: String,
    /// Set when the policy failed and the current residue was kept.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub fallback: bool,
}

impl Proposal {
    pub fn new(position: usize, proposed_value: AminoAcid, reasoning: impl Into<String>) -> Self {
        Proposal {
            position,
            proposed_value,
            reasoning: reasoning.into(),
            fallback: false,
        }
    }

    pub fn fallback(position: usize, current: AminoAcid, reason: impl Into<String>) -> Self {
        Proposal {
            position,
            proposed_value: current,
            reasoning: reason.into(),
            fallback: true,
        }
    }
}

/// Which policy every agent in a campaign uses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AgentPolicySpec {
    Llm(LlmEndpointConfig),
    Propensity {
        target_ss: crate::sequence::SsLabel,
        #[serde(default = "local::default_temperature")]
        temperature: f64,
    },
    Keep,
    Random {
        #[serde(default)]
        seed: u64,
    },
}

impl AgentPolicySpec {
    pub fn validate(&self) -> Result<(), String> {
        match self {
            AgentPolicySpec::Llm(cfg) => cfg.validate(),
            AgentPolicySpec::Propensity { temperature, .. } => {
                if !(*temperature >= 0.0) || !temperature.is_finite() {
                    return Err(format!("temperature must be a finite value >= 0, got {temperature}"));
                }
                Ok(())
            }
            AgentPolicySpec::Keep | AgentPolicySpec::Random { .. } => Ok(()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            AgentPolicySpec::Llm(_) => "llm",
            AgentPolicySpec::Propensity { .. } => "propensity",
            AgentPolicySpec::Keep => "keep",
            AgentPolicySpec::Random { .. } => "random",
        }
    }

    /// Instantiates the policy. LLM policies read their credential here.
    pub fn build(&self) -> Result<Box<dyn AgentPolicy>, AgentError> {
        self.validate().map_err(AgentError::InvalidPolicy)?;
        Ok(match self {
            AgentPolicySpec::Llm(cfg) => Box::new(LlmPolicy::new(cfg.clone())?),
            AgentPolicySpec::Propensity { target_ss, temperature } => Box::new(PropensityPolicy {
                target_ss: *target_ss,
                temperature: *temperature,
            }),
            AgentPolicySpec::Keep => Box::new(KeepPolicy),
            AgentPolicySpec::Random { seed } => Box::new(RandomPolicy { seed: *seed }),
        })
    }
}

/// Maps a prompt and context to a proposal. Implementations must be pure
/// given `(bundle, ctx, seed)` apart from remote calls.
pub trait AgentPolicy: Send + Sync {
    fn propose(&self, bundle: &PromptBundle, ctx: &ResidueContext, seed: u64) -> Proposal;

    /// Upper bound on proposals computed at once.
    fn max_concurrency(&self) -> usize {
        1
    }
}

/// Per-agent RNG seed for one iteration.
pub fn derive_seed(campaign_seed: u64, iteration: usize, position: usize) -> u64 {
    let digest = Sha256::new()
        .chain_update(campaign_seed.to_le_bytes())
        .chain_update((iteration as u64).to_le_bytes())
        .chain_update((position as u64).to_le_bytes())
        .finalize();
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}

/// Phase 1: one proposal per context, returned in position order however
/// the work was scheduled.
pub fn collect_proposals(
    policy: &dyn AgentPolicy,
    contexts: &[ResidueContext],
    objective: &DesignObjective,
    last_eval: Option<&EvaluationResult>,
    campaign_seed: u64,
    iteration: usize,
) -> Vec<Proposal> {
    let run = |ctx: &ResidueContext| {
        let bundle = build_prompt(ctx, objective, last_eval);
        let seed = derive_seed(campaign_seed, iteration, ctx.position);
        let mut p = policy.propose(&bundle, ctx, seed);
        p.position = ctx.position;
        p
    };

    let workers = policy.max_concurrency().clamp(1, contexts.len().max(1));
    if workers == 1 {
        return contexts.iter().map(run).collect();
    }

    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<Proposal>>> = Mutex::new(vec![None; contexts.len()]);
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::Relaxed);
                let Some(ctx) = contexts.get(k) else { break };
                let p = run(ctx);
                slots.lock().expect("proposal slots")[k] = Some(p);
            });
        }
    });
    slots
        .into_inner()
        .expect("proposal slots")
        .into_iter()
        .map(|p| p.expect("every position proposed"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::context::{residue_context, StructureSnapshot};
    use crate::eval::ObjectiveScorerSpec;
    use crate::memory::MemoryDigest;
    use crate::sequence::{ProteinSequence, SsLabel};

    pub(crate) fn contexts(s: &str) -> Vec<ResidueContext> {
        let seq = ProteinSequence::parse(s).unwrap();
        let snap = StructureSnapshot::sentinel(seq.len());
        (0..seq.len())
            .map(|i| residue_context(&snap, &seq, i, 2, 8.0, MemoryDigest::empty(i)).unwrap())
            .collect()
    }

    pub(crate) fn objective() -> DesignObjective {
        DesignObjective {
            name: "helix".into(),
            prompt_text: "Make the protein fold into a single alpha helix.".into(),
            scorer: ObjectiveScorerSpec::LocalSymmetry,
        }
    }

    #[test]
    fn keep_policy_returns_current_sequence() {
        let ctxs = contexts("MKTA");
        let policy = AgentPolicySpec::Keep.build().unwrap();
        let props = collect_proposals(policy.as_ref(), &ctxs, &objective(), None, 1, 1);
        let got: String = props.iter().map(|p| p.proposed_value.code()).collect();
        assert_eq!(got, "MKTA");
        assert!(props.iter().enumerate().all(|(i, p)| p.position == i && !p.fallback));
    }

    #[test]
    fn seeds_differ_by_position_and_iteration() {
        let a = derive_seed(7, 1, 0);
        assert_eq!(a, derive_seed(7, 1, 0));
        assert_ne!(a, derive_seed(7, 1, 1));
        assert_ne!(a, derive_seed(7, 2, 0));
        assert_ne!(a, derive_seed(8, 1, 0));
    }

    struct Scrambled;

    impl AgentPolicy for Scrambled {
        fn propose(&self, _: &PromptBundle, ctx: &ResidueContext, _: u64) -> Proposal {
            // Later positions finish first.
            std::thread::sleep(std::time::Duration::from_millis(5 * (10 - ctx.position as u64)));
            Proposal::new(ctx.position, AminoAcid::ALL[ctx.position], "")
        }

        fn max_concurrency(&self) -> usize {
            4
        }
    }

    #[test]
    fn concurrent_results_keep_position_order() {
        let ctxs = contexts("AAAAAAAAAA");
        let props = collect_proposals(&Scrambled, &ctxs, &objective(), None, 0, 1);
        for (i, p) in props.iter().enumerate() {
            assert_eq!(p.position, i);
            assert_eq!(p.proposed_value, AminoAcid::ALL[i]);
        }
    }

    #[test]
    fn policy_spec_serde() {
        let spec: AgentPolicySpec = serde_json::from_str(r#"{"kind":"propensity","target_ss":"H"}"#).unwrap();
        assert_eq!(
            spec,
            AgentPolicySpec::Propensity {
                target_ss: SsLabel::Helix,
                temperature: local::default_temperature()
            }
        );
        let spec: AgentPolicySpec = serde_json::from_str(r#"{"kind":"keep"}"#).unwrap();
        assert_eq!(spec, AgentPolicySpec::Keep);
        assert!(AgentPolicySpec::Propensity {
            target_ss: SsLabel::Helix,
            temperature: -1.0
        }
        .validate()
        .is_err());
    }
}
