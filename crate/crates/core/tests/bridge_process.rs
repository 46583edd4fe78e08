use std::time::{Duration, Instant};

use swarm_core::eval::bridge::probe_bridge;
use swarm_core::eval::{AnmParams, BridgeCommand, EvalError, Evaluator, ExternalEvaluator, ObjectiveScorerSpec};
use swarm_core::ProteinSequence;

const HANDSHAKE: &str = r#"echo '{"protocol":1}'"#;
const READ_ID: &str = r#"id=$(printf '%s' "$line" | sed 's/.*"id":"\([0-9]*\)".*/\1/')"#;

fn body(ss: &str) -> String {
    format!(
        r#"{{"id":"%s","total_energy":-3.5,"energy_terms":{{"contact":-3.5}},"ss":"{ss}","ca_coords":[[0,0,0],[3.8,0,0],[3.8,3.8,0],[0,3.8,0.5]]}}"#
    )
}

fn bridge(script: &str) -> ExternalEvaluator {
    ExternalEvaluator::new(
        BridgeCommand::new("sh", ["-c", script]),
        Duration::from_millis(1_500),
        AnmParams::default(),
    )
}

fn answering(ss: &str) -> String {
    format!(
        "{HANDSHAKE}\nwhile read -r line; do\n{READ_ID}\nprintf '{}\\n' \"$id\"\ndone",
        body(ss)
    )
}

fn lklk() -> ProteinSequence {
    ProteinSequence::parse("LKLK").unwrap()
}

#[test]
fn happy_path_round_trips() {
    let mut ev = bridge(&answering("HHHH"));
    for _ in 0..3 {
        let r = ev.evaluate(&lklk(), &ObjectiveScorerSpec::LocalSymmetry).unwrap();
        assert_eq!(r.total_energy, -3.5);
        assert_eq!(r.ss.to_string(), "HHHH");
        // Filled in locally: LKLK mirrors at every interior position.
        assert_eq!(r.objective_score, 1.0);
    }
    assert_eq!(ev.protocol(), Some(1));
}

#[test]
fn missing_handshake_is_reported_without_waiting() {
    let script = format!(
        "while read -r line; do\n{READ_ID}\nprintf '{}\\n' \"$id\"\ndone",
        body("HHHH")
    );
    let mut ev = bridge(&script);
    let started = Instant::now();
    let err = ev.evaluate(&lklk(), &ObjectiveScorerSpec::LocalSymmetry).unwrap_err();
    assert!(err.to_string().contains("missing handshake"), "{err}");
    assert!(started.elapsed() < Duration::from_millis(1_000));
}

#[test]
fn wrong_protocol_version_is_rejected() {
    let script = answering("HHHH").replacen(r#"{"protocol":1}"#, r#"{"protocol":2}"#, 1);
    let err = bridge(&script)
        .evaluate(&lklk(), &ObjectiveScorerSpec::LocalSymmetry)
        .unwrap_err();
    assert!(err.to_string().contains("unsupported version 2"), "{err}");
}

#[test]
fn wrong_length_ss_names_the_field() {
    let err = bridge(&answering("HHH"))
        .evaluate(&lklk(), &ObjectiveScorerSpec::LocalSymmetry)
        .unwrap_err();
    match err {
        EvalError::ProtocolViolation(m) => assert!(m.starts_with("ss:"), "{m}"),
        other => panic!("expected protocol violation, got {other}"),
    }
}

#[test]
fn silent_bridge_times_out() {
    let script = format!("{HANDSHAKE}\nsleep 30");
    let mut ev = ExternalEvaluator::new(
        BridgeCommand::new("sh", ["-c", &script]),
        Duration::from_millis(300),
        AnmParams::default(),
    );
    let started = Instant::now();
    let err = ev.evaluate(&lklk(), &ObjectiveScorerSpec::LocalSymmetry).unwrap_err();
    assert!(matches!(err, EvalError::Timeout(_)), "{err}");
    assert!(started.elapsed() < Duration::from_secs(5));
}

#[test]
fn exiting_bridge_is_unavailable() {
    let err = bridge(&format!("{HANDSHAKE}\nexit 0"))
        .evaluate(&lklk(), &ObjectiveScorerSpec::LocalSymmetry)
        .unwrap_err();
    assert!(matches!(err, EvalError::BridgeUnavailable(_)), "{err}");
}

#[test]
fn missing_program_is_unavailable() {
    let mut ev = ExternalEvaluator::new(
        BridgeCommand::new("/nonexistent/bridge", Vec::<String>::new()),
        Duration::from_secs(1),
        AnmParams::default(),
    );
    let err = ev.evaluate(&lklk(), &ObjectiveScorerSpec::LocalSymmetry).unwrap_err();
    assert!(matches!(err, EvalError::BridgeUnavailable(_)), "{err}");
}

#[test]
fn reported_error_keeps_the_process() {
    let script = format!(
        "{HANDSHAKE}\nn=0\nwhile read -r line; do\n{READ_ID}\nn=$((n+1))\nif [ $n -eq 1 ]; then printf '{{\"id\":\"%s\",\"error\":\"fold failed\"}}\\n' \"$id\"; else printf '{}\\n' \"$id\"; fi\ndone",
        body("HHHH")
    );
    let mut ev = bridge(&script);
    let err = ev.evaluate(&lklk(), &ObjectiveScorerSpec::LocalSymmetry).unwrap_err();
    assert!(
        matches!(&err, EvalError::BridgeReported(m) if m.contains("fold failed")),
        "{err}"
    );
    // Same process: its counter has moved on, so the second reply succeeds.
    ev.evaluate(&lklk(), &ObjectiveScorerSpec::LocalSymmetry).unwrap();
}

#[test]
fn probe_reports_protocol_and_result() {
    let ca: Vec<String> = (0..10).map(|i| format!("[{}.0,{}.5,0]", i * 3, i % 2)).collect();
    let script = format!(
        "{HANDSHAKE}\nwhile read -r line; do\n{READ_ID}\nprintf '{{\"id\":\"%s\",\"total_energy\":-1,\"energy_terms\":{{}},\"ss\":\"LLLLLLLLLL\",\"ca_coords\":[{}]}}\\n' \"$id\"\ndone",
        ca.join(",")
    );
    let probe = probe_bridge(&BridgeCommand::new("sh", ["-c", &script]), Duration::from_secs(2)).unwrap();
    assert_eq!(probe.protocol, 1);
    assert_eq!(probe.result.ca_coords.len(), 10);
}
