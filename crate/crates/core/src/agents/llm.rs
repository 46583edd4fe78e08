//! Chat-completion backed agents.

use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::agents::{AgentError, AgentPolicy, PromptBundle, Proposal};
use crate::context::ResidueContext;
use crate::sequence::AminoAcid;

fn default_temperature() -> f64 {
    0.7
}

fn default_max_retries() -> u32 {
    3
}

fn default_timeout_secs() -> f64 {
    60.0
}

fn default_max_concurrent() -> usize {
    4
}

fn default_backoff_secs() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlmEndpointConfig {
    /// Either the API root (`https://host/v1`) or the full
    /// `/chat/completions` URL.
    pub base_url: String,
    pub model_name: String,
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    #[serde(default = "default_max_retries")]
    pub max_retries: u32,
    #[serde(default = "default_timeout_secs")]
    pub timeout_secs: f64,
    /// Name of the environment variable holding the API key. The key itself
    /// never appears in configs or trajectories.
    #[serde(default)]
    pub api_key_env: Option<String>,
    #[serde(default = "default_max_concurrent")]
    pub max_concurrent_requests: usize,
    /// First retry delay; each further retry doubles it.
    #[serde(default = "default_backoff_secs")]
    pub backoff_initial_secs: f64,
}

impl LlmEndpointConfig {
    pub fn new(base_url: impl Into<String>, model_name: impl Into<String>) -> Self {
        LlmEndpointConfig {
            base_url: base_url.into(),
            model_name: model_name.into(),
            temperature: default_temperature(),
            max_retries: default_max_retries(),
            timeout_secs: default_timeout_secs(),
            api_key_env: None,
            max_concurrent_requests: default_max_concurrent(),
            backoff_initial_secs: default_backoff_secs(),
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.base_url.trim().is_empty() {
            return Err("base_url: must not be empty".into());
        }
        if self.model_name.trim().is_empty() {
            return Err("model_name: must not be empty".into());
        }
        if !(self.temperature >= 0.0) || !self.temperature.is_finite() {
            return Err(format!("temperature: must be >= 0, got {}", self.temperature));
        }
        if !(self.timeout_secs > 0.0) || !self.timeout_secs.is_finite() {
            return Err(format!("timeout_secs: must be > 0, got {}", self.timeout_secs));
        }
        if self.max_concurrent_requests == 0 {
            return Err("max_concurrent_requests: must be at least 1".into());
        }
        if !(self.backoff_initial_secs >= 0.0) || !self.backoff_initial_secs.is_finite() {
            return Err(format!(
                "backoff_initial_secs: must be >= 0, got {}",
                self.backoff_initial_secs
            ));
        }
        Ok(())
    }

    pub fn endpoint(&self) -> String {
        let base = self.base_url.trim_end_matches('/');
        if base.ends_with("/chat/completions") {
            base.to_string()
        } else {
            format!("{base}/chat/completions")
        }
    }
}

/// Finds the first JSON object in `text` carrying string `reasoning` and
/// `proposed_value` fields and returns them. A multi-letter value is cut to
/// its first character that is an amino-acid code.
pub fn parse_proposal_text(text: &str) -> Result<(String, AminoAcid), AgentError> {
    for (start, _) in text.match_indices('{') {
        let mut stream = serde_json::Deserializer::from_str(&text[start..]).into_iter::<Value>();
        let Some(Ok(Value::Object(obj))) = stream.next() else {
            continue;
        };
        let (Some(Value::String(reasoning)), Some(Value::String(value))) =
            (obj.get("reasoning"), obj.get("proposed_value"))
        else {
            continue;
        };
        let value = value.trim();
        let aa = if value.chars().count() == 1 {
            value.chars().next().and_then(AminoAcid::from_code)
        } else {
            value
                .chars()
                .find(|c| c.is_ascii_alphabetic() && AminoAcid::from_code(*c).is_some())
                .and_then(AminoAcid::from_code)
        };
        return match aa {
            Some(aa) => Ok((reasoning.clone(), aa)),
            None => Err(AgentError::MalformedResponse(format!(
                "proposed_value {value:?} is not an amino acid code"
            ))),
        };
    }
    Err(AgentError::MalformedResponse(
        "no object with reasoning and proposed_value found".into(),
    ))
}

pub struct LlmPolicy {
    config: LlmEndpointConfig,
    client: reqwest::blocking::Client,
    api_key: Option<String>,
}

impl LlmPolicy {
    pub fn new(config: LlmEndpointConfig) -> Result<Self, AgentError> {
        let api_key = match &config.api_key_env {
            Some(var) => Some(std::env::var(var).map_err(|_| AgentError::MissingCredential(var.clone()))?),
            None => None,
        };
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs_f64(config.timeout_secs))
            .build()
            .map_err(|e| AgentError::TransportError(e.to_string()))?;
        Ok(LlmPolicy {
            config,
            client,
            api_key,
        })
    }

    fn request(&self, bundle: &PromptBundle) -> Result<String, AgentError> {
        let body = json!({
            "model": self.config.model_name,
            "messages": [
                {"role": "system", "content": bundle.role_task},
                {"role": "user", "content": bundle.user_message()},
            ],
            "temperature": self.config.temperature,
        });
        let mut req = self.client.post(self.config.endpoint()).json(&body);
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(|e| AgentError::TransportError(e.to_string()))?;
        let status = resp.status();
        if !status.is_success() {
            return Err(AgentError::TransportError(format!("HTTP {status}")));
        }
        let value: Value = resp
            .json()
            .map_err(|e| AgentError::MalformedResponse(format!("response body: {e}")))?;
        value["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| AgentError::MalformedResponse("no message content in response".into()))
    }

    fn attempt(&self, bundle: &PromptBundle) -> Result<(String, AminoAcid), AgentError> {
        parse_proposal_text(&self.request(bundle)?)
    }
}

impl AgentPolicy for LlmPolicy {
    fn propose(&self, bundle: &PromptBundle, ctx: &ResidueContext, _: u64) -> Proposal {
        let mut last = None;
        for attempt in 0..=self.config.max_retries {
            if attempt > 0 {
                let delay = self.config.backoff_initial_secs * f64::from(1u32 << (attempt - 1).min(16));
                thread::sleep(Duration::from_secs_f64(delay));
            }
            match self.attempt(bundle) {
                Ok((reasoning, aa)) => return Proposal::new(ctx.position, aa, reasoning),
                Err(e) => {
                    log::warn!("position {}: attempt {} failed: {e}", ctx.position, attempt + 1);
                    last = Some(e);
                }
            }
        }
        let reason = last.map(|e| e.to_string()).unwrap_or_default();
        Proposal::fallback(ctx.position, ctx.current, format!("fallback: {reason}"))
    }

    fn max_concurrency(&self) -> usize {
        self.config.max_concurrent_requests
    }
}
