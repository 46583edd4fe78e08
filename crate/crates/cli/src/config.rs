//! Builds a `RunConfig` from an optional TOML file plus flag overrides.
//! Precedence is flags, then file, then built-in defaults.

use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};
use swarm_core::engine::{ConfigError, RunConfig};

/// Flag values that replace file values when present.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub objective: Option<String>,
    pub start_sequence: Option<String>,
    pub iterations: Option<usize>,
    pub seed: Option<u64>,
    pub policy: Option<String>,
    pub evaluator: Option<String>,
    pub radius: Option<usize>,
    pub cutoff: Option<f64>,
    pub epsilon: Option<f64>,
    pub theta: Option<f64>,
    pub min_support: Option<u32>,
    pub anm_cutoff: Option<f64>,
    pub anm_gamma: Option<f64>,
    pub max_consecutive_failures: Option<usize>,
    pub checkpoint_every: Option<usize>,
    pub record_timing: Option<bool>,
    pub output: Option<PathBuf>,
}

/// `keep`, `random[:SEED]`, `propensity:H|E|L[:TEMPERATURE]`, or a JSON
/// object in the config's own shape.
pub fn parse_policy(text: &str) -> Result<Value, ConfigError> {
    let bad = |m: &str| ConfigError::new("policy", format!("{m} in {text:?}"));
    if text.trim_start().starts_with('{') {
        return serde_json::from_str(text).map_err(|e| bad(&e.to_string()));
    }
    let parts: Vec<&str> = text.split(':').collect();
    match parts.as_slice() {
        ["keep"] => Ok(json!({"kind": "keep"})),
        ["random"] => Ok(json!({"kind": "random"})),
        ["random", seed] => {
            let seed: u64 = seed.parse().map_err(|_| bad("seed must be an integer"))?;
            Ok(json!({"kind": "random", "seed": seed}))
        }
        ["propensity", ss] => Ok(json!({"kind": "propensity", "target_ss": ss})),
        ["propensity", ss, t] => {
            let t: f64 = t.parse().map_err(|_| bad("temperature must be a number"))?;
            Ok(json!({"kind": "propensity", "target_ss": ss, "temperature": t}))
        }
        _ => Err(bad("expected keep, random[:SEED], propensity:SS[:T] or a JSON object")),
    }
}

/// `builtin`, `external:PROGRAM [ARGS...]`, or a JSON object.
pub fn parse_evaluator(text: &str) -> Result<Value, ConfigError> {
    let bad = |m: &str| ConfigError::new("evaluator", format!("{m} in {text:?}"));
    if text.trim_start().starts_with('{') {
        return serde_json::from_str(text).map_err(|e| bad(&e.to_string()));
    }
    if text == "builtin" {
        return Ok(json!({"kind": "builtin"}));
    }
    if let Some(command) = text.strip_prefix("external:") {
        let mut words = command.split_whitespace();
        let program = words.next().ok_or_else(|| bad("missing program"))?;
        let args: Vec<&str> = words.collect();
        return Ok(json!({"kind": "external", "program": program, "args": args}));
    }
    Err(bad("expected builtin, external:PROGRAM [ARGS...] or a JSON object"))
}

fn set(map: &mut Map<String, Value>, key: &str, value: Option<Value>) {
    if let Some(v) = value {
        map.insert(key.to_string(), v);
    }
}

/// Reads the file (if any), applies overrides and deserializes. Errors name
/// the offending field.
pub fn load_config(path: Option<&Path>, overrides: &Overrides) -> Result<RunConfig, ConfigError> {
    let mut root = match path {
        Some(p) => {
            let text =
                std::fs::read_to_string(p).map_err(|e| ConfigError::new("config", format!("{}: {e}", p.display())))?;
            toml::from_str::<Value>(&text).map_err(|e| ConfigError::new("config", format!("{}: {e}", p.display())))?
        }
        None => Value::Object(Map::new()),
    };
    let map = root
        .as_object_mut()
        .ok_or_else(|| ConfigError::new("config", "top level must be a table"))?;

    let o = overrides;
    if let Some(text) = &o.objective {
        let v = serde_json::from_str(text).map_err(|e| ConfigError::new("objective", e.to_string()))?;
        map.insert("objective".into(), v);
    }
    set(map, "start_sequence", o.start_sequence.clone().map(Value::from));
    set(map, "iterations", o.iterations.map(Value::from));
    set(map, "seed", o.seed.map(Value::from));
    if let Some(p) = &o.policy {
        map.insert("policy".into(), parse_policy(p)?);
    }
    if let Some(e) = &o.evaluator {
        map.insert("evaluator".into(), parse_evaluator(e)?);
    }
    set(map, "radius", o.radius.map(Value::from));
    set(map, "cutoff", o.cutoff.map(Value::from));
    set(map, "epsilon", o.epsilon.map(Value::from));
    set(map, "theta", o.theta.map(Value::from));
    set(map, "min_support", o.min_support.map(Value::from));
    set(
        map,
        "max_consecutive_failures",
        o.max_consecutive_failures.map(Value::from),
    );
    set(map, "checkpoint_every", o.checkpoint_every.map(Value::from));
    set(map, "record_timing", o.record_timing.map(Value::from));
    set(
        map,
        "output_path",
        o.output.as_ref().map(|p| Value::from(p.display().to_string())),
    );
    if o.anm_cutoff.is_some() || o.anm_gamma.is_some() {
        let anm = map.entry("anm").or_insert_with(|| json!({}));
        let anm = anm
            .as_object_mut()
            .ok_or_else(|| ConfigError::new("anm", "must be a table"))?;
        set(anm, "cutoff", o.anm_cutoff.map(Value::from));
        set(anm, "gamma", o.anm_gamma.map(Value::from));
    }

    let config: RunConfig = serde_path_to_error::deserialize(root).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner().to_string();
        // Missing fields are reported against their parent; name the field itself.
        let field = match inner.split('`').nth(1) {
            Some(name) if inner.starts_with("missing field") => {
                if path == "." {
                    name.to_string()
                } else {
                    format!("{path}.{name}")
                }
            }
            _ => path,
        };
        ConfigError::new(field, inner)
    })?;
    config.validate()?;
    Ok(config)
}
