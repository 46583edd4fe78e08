//! Scripted evaluator bridge for protocol tests. It answers with the
//! builtin evaluator's results, optionally corrupted in one way.
//!
//! Usage: `swarm-stub-bridge [MODE]` where MODE is one of `ok`,
//! `no-handshake`, `wrong-protocol`, `not-json`, `wrong-id`,
//! `missing-energy`, `ss-length`, `coords-rows`, `score-range`,
//! `error-and-result`, `frequencies-count`, `report-error`,
//! `fail-after-baseline` or `silent`.

use std::io::{self, BufRead, Write};

use serde_json::{json, Value};
use swarm_core::eval::anm::anm_frequencies;
use swarm_core::eval::{evaluate_builtin, AnmParams, ObjectiveScorerSpec};
use swarm_core::ProteinSequence;

const MODES: [&str; 14] = [
    "ok",
    "no-handshake",
    "wrong-protocol",
    "not-json",
    "wrong-id",
    "missing-energy",
    "ss-length",
    "coords-rows",
    "score-range",
    "error-and-result",
    "frequencies-count",
    "report-error",
    "fail-after-baseline",
    "silent",
];

fn answer(request: &Value) -> Result<Value, String> {
    let id = request["id"].as_str().ok_or("request has no id")?;
    let text = request["sequence"].as_str().ok_or("request has no sequence")?;
    let sequence = ProteinSequence::parse(text).map_err(|e| e.to_string())?;
    let anm = AnmParams::default();
    let eval = evaluate_builtin(&sequence, &ObjectiveScorerSpec::LocalSymmetry, &anm).map_err(|e| e.to_string())?;
    let mut out = json!({
        "id": id,
        "total_energy": eval.total_energy,
        "energy_terms": eval.energy_terms,
        "ss": eval.ss.to_string(),
        "ca_coords": eval.ca_coords,
    });
    let wants_modes = request["need"]
        .as_array()
        .is_some_and(|need| need.iter().any(|v| v == "frequencies"));
    if wants_modes {
        let k = request["anm"]["k"].as_u64().ok_or("anm.k missing")? as usize;
        let cutoff = request["anm"]["cutoff"].as_f64().unwrap_or(anm.cutoff);
        let f = anm_frequencies(&eval.ca_coords, cutoff, anm.gamma, k).map_err(|e| e.to_string())?;
        out["frequencies"] = json!(f);
    }
    Ok(out)
}

fn corrupt(mode: &str, served: usize, mut out: Value) -> String {
    match mode {
        "fail-after-baseline" if served > 0 => out = json!({"id": out["id"], "error": "fold failed"}),
        "wrong-id" => out["id"] = json!("not-the-request"),
        "missing-energy" => {
            out.as_object_mut().expect("object").remove("total_energy");
        }
        "ss-length" => {
            let ss = out["ss"].as_str().unwrap_or("").to_string();
            out["ss"] = json!(format!("{ss}L"));
        }
        "coords-rows" => {
            out["ca_coords"].as_array_mut().expect("array").pop();
        }
        "score-range" => out["objective_score"] = json!(1.5),
        "error-and-result" => out["error"] = json!("fold failed"),
        "frequencies-count" => out["frequencies"] = json!([0.5, 1.0]),
        "report-error" => out = json!({"id": out["id"], "error": "fold failed"}),
        "not-json" => return "this is not json".into(),
        _ => {}
    }
    out.to_string()
}

fn main() {
    let mode = std::env::args().nth(1).unwrap_or_else(|| "ok".into());
    if !MODES.contains(&mode.as_str()) {
        eprintln!("unknown mode {mode:?}; expected one of {}", MODES.join(", "));
        std::process::exit(2);
    }
    let stdout = io::stdout();
    let mut out = stdout.lock();
    let handshake = match mode.as_str() {
        "no-handshake" => None,
        "wrong-protocol" => Some(json!({"protocol": 2})),
        _ => Some(json!({"protocol": 1})),
    };
    if let Some(h) = handshake {
        if writeln!(out, "{h}").and_then(|_| out.flush()).is_err() {
            return;
        }
    }
    let mut served = 0;
    for line in io::stdin().lock().lines() {
        let Ok(line) = line else { break };
        if line.trim().is_empty() {
            continue;
        }
        if mode == "silent" {
            continue;
        }
        let reply = match serde_json::from_str::<Value>(&line)
            .map_err(|e| format!("parse: {e}"))
            .and_then(|r| {
                let id = r["id"].clone();
                answer(&r).map_err(|e| json!({"id": id, "error": e}).to_string())
            }) {
            Ok(result) => corrupt(&mode, served, result),
            Err(error) if error.starts_with('{') => error,
            Err(error) => json!({"id": null, "error": error}).to_string(),
        };
        served += 1;
        if writeln!(out, "{reply}").and_then(|_| out.flush()).is_err() {
            break;
        }
    }
}
