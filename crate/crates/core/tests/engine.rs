use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use swarm_core::agents::AgentPolicySpec;
use swarm_core::engine::{read_trajectory, Campaign, RunConfig};
use swarm_core::eval::{
    BuiltinEvaluator, DesignObjective, EvalError, EvaluationResult, Evaluator, ObjectiveScorerSpec,
};
use swarm_core::{ProteinSequence, SsLabel};

fn helix_config(path: &Path) -> RunConfig {
    let mut c = RunConfig::new(
        DesignObjective {
            name: "all-helix".into(),
            prompt_text: "Make every residue helical.".into(),
            scorer: ObjectiveScorerSpec::SsComposition { target: "H".repeat(18) },
        },
        ProteinSequence::parse(&"S".repeat(18)).unwrap(),
        AgentPolicySpec::Propensity {
            target_ss: SsLabel::Helix,
            temperature: 0.1,
        },
    );
    c.seed = 7;
    c.output_path = path.to_path_buf();
    c
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap()
}

/// Every line after the header, which embeds the output path.
fn body(path: &Path) -> Vec<String> {
    read(path).lines().skip(1).map(str::to_owned).collect()
}

#[test]
fn keep_policy_rejects_and_leaves_state() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = helix_config(&dir.path().join("t.jsonl"));
    c.policy = AgentPolicySpec::Keep;
    c.iterations = 3;
    let mut campaign = Campaign::start(c).unwrap();
    let before = campaign.state().clone();
    let r = campaign.step().unwrap();
    assert!(!r.accepted);
    assert!(r.changed_positions.is_empty());
    assert_eq!(campaign.state().current, before.current);
    assert_eq!(campaign.state().current_eval, before.current_eval);
    let s = campaign.run().unwrap();
    assert!(s.complete);
    assert_eq!(s.accepted_count, 0);
}

#[test]
fn golden_helix_campaign() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.jsonl");
    let b = dir.path().join("b.jsonl");
    let summary = Campaign::start(helix_config(&a)).unwrap().run().unwrap();
    Campaign::start(helix_config(&b)).unwrap().run().unwrap();
    assert_eq!(body(&a), body(&b), "seeded runs must be byte-identical");
    let (ha, hb) = (read_trajectory(&a).unwrap().header, read_trajectory(&b).unwrap().header);
    assert_eq!(ha.config_hash, hb.config_hash);

    let t = read_trajectory(&a).unwrap();
    assert_eq!(t.records.len(), 64);
    let baseline = BuiltinEvaluator::default()
        .evaluate(&t.header.start_sequence, &t.header.objective.scorer)
        .unwrap()
        .objective_score;
    let early = t.records[..10].iter().any(|r| r.accepted && r.best_score > baseline);
    assert!(early, "no score increase within 10 iterations");
    assert!(summary.complete);
    assert!(summary.best_score >= 0.75, "best {}", summary.best_score);
    // The retained sequence is the last accepted proposal, or the start.
    let mut retained = t.header.start_sequence.clone();
    for r in &t.records {
        if r.accepted {
            retained = r.proposed_sequence.clone();
        }
        assert_eq!(r.current_best, retained);
    }
}

#[test]
fn single_iteration_writes_one_record() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("one.jsonl");
    let mut c = helix_config(&path);
    c.iterations = 1;
    let s = Campaign::start(c).unwrap().run().unwrap();
    assert_eq!(s.iterations_run, 1);
    let t = read_trajectory(&path).unwrap();
    assert_eq!(t.records.len(), 1);
    assert!(t.summary.unwrap().complete);
}

#[test]
fn resume_matches_uninterrupted_run() {
    let dir = tempfile::tempdir().unwrap();
    let full = dir.path().join("full.jsonl");
    let part = dir.path().join("part.jsonl");
    Campaign::start(helix_config(&full)).unwrap().run().unwrap();

    let mut c = helix_config(&part);
    c.iterations = 30;
    let s = Campaign::start(c).unwrap().run().unwrap();
    assert!(s.complete);
    let resumed = Campaign::resume(&part, Some(64)).unwrap();
    assert_eq!(resumed.state().iteration, 30);
    resumed.run().unwrap();

    assert_eq!(body(&full), body(&part));
}

#[test]
fn resume_after_a_torn_line() {
    let dir = tempfile::tempdir().unwrap();
    let full = dir.path().join("full.jsonl");
    let part = dir.path().join("part.jsonl");
    Campaign::start(helix_config(&full)).unwrap().run().unwrap();

    let mut campaign = Campaign::start(helix_config(&part)).unwrap();
    for _ in 0..13 {
        campaign.step().unwrap();
    }
    drop(campaign);
    let mut text = read(&part);
    text.push_str(r#"{"type":"iteration","iter"#);
    std::fs::write(&part, text).unwrap();

    Campaign::resume(&part, None).unwrap().run().unwrap();
    assert_eq!(body(&full), body(&part));
}

/// Wraps the builtin evaluator and fails the calls listed in `fail`.
struct Flaky {
    inner: BuiltinEvaluator,
    calls: Arc<AtomicUsize>,
    fail: fn(usize) -> bool,
}

impl Evaluator for Flaky {
    fn evaluate(&mut self, s: &ProteinSequence, scorer: &ObjectiveScorerSpec) -> Result<EvaluationResult, EvalError> {
        let call = self.calls.fetch_add(1, Ordering::SeqCst);
        if (self.fail)(call) {
            return Err(EvalError::BridgeUnavailable("injected".into()));
        }
        self.inner.evaluate(s, scorer)
    }
}

#[test]
fn failed_evaluations_are_recorded_and_skipped() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("f.jsonl");
    let mut c = helix_config(&path);
    c.iterations = 10;
    let calls = Arc::new(AtomicUsize::new(0));
    // Call 0 is the baseline; iterations 2 and 3 fail.
    let flaky = Flaky {
        inner: BuiltinEvaluator::default(),
        calls,
        fail: |k| k == 2 || k == 3,
    };
    let s = Campaign::start_with(c, Box::new(flaky)).unwrap().run().unwrap();
    assert!(s.complete);
    let t = read_trajectory(&path).unwrap();
    let failed: Vec<usize> = t.records.iter().filter(|r| r.failed).map(|r| r.iteration).collect();
    assert_eq!(failed, [2, 3]);
    for r in t.records.iter().filter(|r| r.failed) {
        assert!(!r.accepted);
        assert!(r.error.as_deref().unwrap().contains("injected"));
        assert!(r.total_energy.is_none());
    }
}

#[test]
fn consecutive_failures_stop_the_campaign() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("f.jsonl");
    let c = helix_config(&path);
    let flaky = Flaky {
        inner: BuiltinEvaluator::default(),
        calls: Arc::new(AtomicUsize::new(0)),
        fail: |k| k >= 3,
    };
    let s = Campaign::start_with(c, Box::new(flaky)).unwrap().run().unwrap();
    assert!(!s.complete);
    assert_eq!(s.iterations_run, 7);
    let t = read_trajectory(&path).unwrap();
    assert_eq!(t.records.iter().filter(|r| r.failed).count(), 5);
    assert!(!t.summary.unwrap().complete);
}

#[test]
fn baseline_failure_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let c = helix_config(&dir.path().join("f.jsonl"));
    let flaky = Flaky {
        inner: BuiltinEvaluator::default(),
        calls: Arc::new(AtomicUsize::new(0)),
        fail: |_| true,
    };
    assert!(Campaign::start_with(c, Box::new(flaky)).is_err());
}

#[test]
fn memory_changes_only_once_per_evaluated_iteration() {
    let dir = tempfile::tempdir().unwrap();
    let mut campaign = Campaign::start(helix_config(&dir.path().join("m.jsonl"))).unwrap();
    let mut last = campaign.state().memory.write_count;
    for _ in 0..12 {
        let r = campaign.step().unwrap();
        let now = campaign.state().memory.write_count;
        assert!(now > last, "iteration {} did not record memory", r.iteration);
        assert_eq!(campaign.state().memory.iterations_recorded(), r.iteration);
        last = now;
    }
}
