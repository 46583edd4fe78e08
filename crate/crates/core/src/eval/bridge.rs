//! Client side of the external evaluator protocol.
//!
//! The bridge is a child process speaking line-delimited JSON on its
//! standard streams. Its first output line is the handshake
//! `{"protocol": 1}`; after that every request line gets exactly one
//! response line.
//!
//! ```text
//! -> {"id":"1","sequence":"ACDEFGHIKL","need":["energy","ss","coords"]}
//! <- {"id":"1","total_energy":-3.2,"energy_terms":{...},"ss":"LLLLLLLLLL","ca_coords":[[0,0,0],...]}
//! ```

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::context::Coord;
use crate::eval::{
    anm_frequencies, objective_score, AnmParams, EvalError, EvaluationResult, Evaluator, ObjectiveScorerSpec,
    ScoreInputs,
};
use crate::sequence::{ProteinSequence, SsString};

pub const PROTOCOL_VERSION: u32 = 1;
pub const DEFAULT_BRIDGE_TIMEOUT: Duration = Duration::from_secs(120);

/// How to launch a bridge process.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BridgeCommand {
    pub program: String,
    #[serde(default)]
    pub args: Vec<String>,
}

impl BridgeCommand {
    pub fn new(program: impl Into<String>, args: impl IntoIterator<Item = impl Into<String>>) -> Self {
        BridgeCommand {
            program: program.into(),
            args: args.into_iter().map(Into::into).collect(),
        }
    }
}

struct BridgeProcess {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<String>,
    protocol: Option<u32>,
}

impl BridgeProcess {
    fn spawn(command: &BridgeCommand) -> Result<Self, EvalError> {
        let mut child = Command::new(&command.program)
            .args(&command.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| EvalError::BridgeUnavailable(format!("cannot start {}: {e}", command.program)))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                let Ok(line) = line else { break };
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        Ok(BridgeProcess {
            child,
            stdin,
            lines: rx,
            protocol: None,
        })
    }

    fn read_line(&self, deadline: Instant, timeout: Duration) -> Result<String, EvalError> {
        loop {
            let left = deadline.saturating_duration_since(Instant::now());
            match self.lines.recv_timeout(left) {
                Ok(line) if line.trim().is_empty() => continue,
                Ok(line) => return Ok(line),
                Err(RecvTimeoutError::Timeout) => return Err(EvalError::Timeout(timeout)),
                Err(RecvTimeoutError::Disconnected) => {
                    return Err(EvalError::BridgeUnavailable("bridge closed its output".into()))
                }
            }
        }
    }
}

impl Drop for BridgeProcess {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// Parses a handshake line and returns the protocol version.
pub fn parse_handshake(line: &str) -> Result<u32, EvalError> {
    let missing = || EvalError::ProtocolViolation(format!("missing handshake: first line was {}", abbreviate(line)));
    let value: Value = serde_json::from_str(line).map_err(|_| missing())?;
    let version = value.get("protocol").ok_or_else(missing)?;
    let version = version
        .as_u64()
        .ok_or_else(|| EvalError::ProtocolViolation(format!("protocol: not an integer: {version}")))?;
    if version != u64::from(PROTOCOL_VERSION) {
        return Err(EvalError::ProtocolViolation(format!(
            "protocol: unsupported version {version}, expected {PROTOCOL_VERSION}"
        )));
    }
    Ok(PROTOCOL_VERSION)
}

fn abbreviate(line: &str) -> String {
    const MAX: usize = 80;
    if line.chars().count() <= MAX {
        format!("{line:?}")
    } else {
        format!("{:?}...", line.chars().take(MAX).collect::<String>())
    }
}

/// Builds the request line for one evaluation.
pub fn request_json(id: &str, sequence: &ProteinSequence, scorer: &ObjectiveScorerSpec, anm: &AnmParams) -> Value {
    let mut need = vec!["energy", "ss", "coords"];
    let mut request = json!({
        "id": id,
        "sequence": sequence.to_string(),
    });
    if let Some(k) = scorer.mode_count() {
        need.push("frequencies");
        request["anm"] = json!({ "cutoff": anm.cutoff, "k": k });
    }
    request["need"] = json!(need);
    request
}

fn violation(field: &str, detail: impl std::fmt::Display) -> EvalError {
    EvalError::ProtocolViolation(format!("{field}: {detail}"))
}

fn number(obj: &Map<String, Value>, field: &str) -> Result<f64, EvalError> {
    let v = obj.get(field).ok_or_else(|| violation(field, "missing"))?;
    v.as_f64().ok_or_else(|| violation(field, "not a number"))
}

/// Validates one response line against the request it answers.
///
/// Fields the bridge leaves out are filled in locally: the objective score
/// is always recomputed when absent, frequencies when the objective needs
/// them.
pub fn parse_response(
    line: &str,
    id: &str,
    sequence: &ProteinSequence,
    scorer: &ObjectiveScorerSpec,
    anm: &AnmParams,
) -> Result<EvaluationResult, EvalError> {
    let n = sequence.len();
    let value: Value =
        serde_json::from_str(line).map_err(|e| violation("response", format!("not valid JSON ({e})")))?;
    let Value::Object(obj) = value else {
        return Err(violation("response", "not a JSON object"));
    };
    match obj.get("id") {
        None => return Err(violation("id", "missing")),
        Some(Value::String(got)) if got == id => {}
        Some(other) => return Err(violation("id", format!("expected {id:?}, got {other}"))),
    }
    if let Some(err) = obj.get("error") {
        if let Some(extra) = obj.keys().find(|k| *k != "id" && *k != "error") {
            return Err(violation(
                "error",
                format!("must be exclusive, but {extra} is also present"),
            ));
        }
        let message = err.as_str().map(str::to_string).unwrap_or_else(|| err.to_string());
        return Err(EvalError::BridgeReported(message));
    }

    let total_energy = number(&obj, "total_energy")?;

    let mut energy_terms = BTreeMap::new();
    match obj.get("energy_terms") {
        None | Some(Value::Null) => {}
        Some(Value::Object(terms)) => {
            for (k, v) in terms {
                let v = v
                    .as_f64()
                    .ok_or_else(|| violation("energy_terms", format!("{k} is not a number")))?;
                energy_terms.insert(k.clone(), v);
            }
        }
        Some(_) => return Err(violation("energy_terms", "not an object")),
    }

    let ss_text = obj
        .get("ss")
        .ok_or_else(|| violation("ss", "missing"))?
        .as_str()
        .ok_or_else(|| violation("ss", "not a string"))?;
    let ss = SsString::parse(ss_text).map_err(|i| violation("ss", format!("invalid label at position {i}")))?;
    if ss.len() != n {
        return Err(violation("ss", format!("length {} != sequence length {n}", ss.len())));
    }

    let rows = obj
        .get("ca_coords")
        .ok_or_else(|| violation("ca_coords", "missing"))?
        .as_array()
        .ok_or_else(|| violation("ca_coords", "not an array"))?;
    if rows.len() != n {
        return Err(violation(
            "ca_coords",
            format!("{} rows != sequence length {n}", rows.len()),
        ));
    }
    let mut ca_coords: Vec<Coord> = Vec::with_capacity(n);
    for (i, row) in rows.iter().enumerate() {
        let xyz = row
            .as_array()
            .filter(|r| r.len() == 3)
            .and_then(|r| Some([r[0].as_f64()?, r[1].as_f64()?, r[2].as_f64()?]))
            .ok_or_else(|| violation("ca_coords", format!("row {i} is not [x, y, z]")))?;
        ca_coords.push(xyz);
    }

    let frequencies = match obj.get("frequencies") {
        None | Some(Value::Null) => match scorer.mode_count() {
            Some(k) => Some(anm_frequencies(&ca_coords, anm.cutoff, anm.gamma, k)?),
            None => None,
        },
        Some(Value::Array(values)) => {
            let f = values
                .iter()
                .map(Value::as_f64)
                .collect::<Option<Vec<f64>>>()
                .ok_or_else(|| violation("frequencies", "not a list of numbers"))?;
            if let Some(k) = scorer.mode_count() {
                if f.len() != k {
                    return Err(violation("frequencies", format!("{} values, requested {k}", f.len())));
                }
            }
            Some(f)
        }
        Some(_) => return Err(violation("frequencies", "not an array")),
    };

    let objective_score = match obj.get("objective_score") {
        None | Some(Value::Null) => objective_score(
            scorer,
            sequence,
            &ScoreInputs {
                ss: Some(&ss),
                ca_coords: Some(&ca_coords),
                frequencies: frequencies.as_deref(),
            },
        )?,
        Some(_) => number(&obj, "objective_score")?,
    };

    let result = EvaluationResult {
        total_energy,
        energy_terms,
        ss,
        ca_coords,
        objective_score,
        frequencies,
    };
    result.check_invariants(n).map_err(EvalError::ProtocolViolation)?;
    Ok(result)
}

/// Evaluator backed by a bridge process. The process is started lazily and
/// restarted after any failure, since a timed-out or misbehaving bridge
/// may be out of step with the request stream.
pub struct ExternalEvaluator {
    command: BridgeCommand,
    timeout: Duration,
    anm: AnmParams,
    process: Option<BridgeProcess>,
    counter: u64,
}

impl ExternalEvaluator {
    pub fn new(command: BridgeCommand, timeout: Duration, anm: AnmParams) -> Self {
        ExternalEvaluator {
            command,
            timeout,
            anm,
            process: None,
            counter: 0,
        }
    }

    /// Protocol version reported by the running bridge, once known.
    pub fn protocol(&self) -> Option<u32> {
        self.process.as_ref().and_then(|p| p.protocol)
    }

    fn round_trip(
        &mut self,
        sequence: &ProteinSequence,
        scorer: &ObjectiveScorerSpec,
    ) -> Result<EvaluationResult, EvalError> {
        if self.process.is_none() {
            self.process = Some(BridgeProcess::spawn(&self.command)?);
        }
        self.counter += 1;
        let id = self.counter.to_string();
        let request = request_json(&id, sequence, scorer, &self.anm);
        let deadline = Instant::now() + self.timeout;
        let process = self.process.as_mut().expect("process started above");

        let mut line = serde_json::to_string(&request).expect("request serializes");
        line.push('\n');
        process
            .stdin
            .write_all(line.as_bytes())
            .and_then(|_| process.stdin.flush())
            .map_err(|e| EvalError::BridgeUnavailable(format!("write failed: {e}")))?;

        if process.protocol.is_none() {
            let first = process.read_line(deadline, self.timeout)?;
            process.protocol = Some(parse_handshake(&first)?);
        }
        let response = process.read_line(deadline, self.timeout)?;
        parse_response(&response, &id, sequence, scorer, &self.anm)
    }
}

impl Evaluator for ExternalEvaluator {
    fn evaluate(
        &mut self,
        sequence: &ProteinSequence,
        scorer: &ObjectiveScorerSpec,
    ) -> Result<EvaluationResult, EvalError> {
        let result = self.round_trip(sequence, scorer);
        if let Err(e) = &result {
            log::warn!("bridge evaluation failed: {e}");
            if !matches!(e, EvalError::BridgeReported(_)) {
                self.process = None;
            }
        }
        result
    }
}

/// Outcome of a handshake plus one round trip.
#[derive(Debug, Clone)]
pub struct BridgeProbe {
    pub protocol: u32,
    pub elapsed: Duration,
    pub result: EvaluationResult,
}

pub const PROBE_SEQUENCE: &str = "ACDEFGHIKL";

/// Starts the bridge, checks the handshake and evaluates [`PROBE_SEQUENCE`].
pub fn probe_bridge(command: &BridgeCommand, timeout: Duration) -> Result<BridgeProbe, EvalError> {
    let mut evaluator = ExternalEvaluator::new(command.clone(), timeout, AnmParams::default());
    let sequence = ProteinSequence::parse(PROBE_SEQUENCE).expect("probe sequence is valid");
    let start = Instant::now();
    let result = evaluator.round_trip(&sequence, &ObjectiveScorerSpec::LocalSymmetry)?;
    Ok(BridgeProbe {
        protocol: evaluator.protocol().unwrap_or(PROTOCOL_VERSION),
        elapsed: start.elapsed(),
        result,
    })
}
