use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const SWARM: &str = env!("CARGO_BIN_EXE_swarm");
const STUB: &str = env!("CARGO_BIN_EXE_swarm-stub-bridge");

const HELIX: &str = r#"
start_sequence = "SSSSSSSSSSSSSSSSSS"
iterations = 4
seed = 7

[objective]
name = "all-helix"
prompt_text = "Fold every residue into an alpha helix."
scorer = { kind = "ss_composition", target = "HHHHHHHHHHHHHHHHHH" }

[policy]
kind = "propensity"
target_ss = "H"
"#;

fn swarm(args: &[&str]) -> Output {
    Command::new(SWARM).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn records(path: &Path) -> usize {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| l.contains(r#""type":"iteration""#))
        .count()
}

struct Dir {
    dir: tempfile::TempDir,
}

impl Dir {
    fn new() -> Self {
        Dir {
            dir: tempfile::tempdir().unwrap(),
        }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn write(&self, name: &str, text: &str) -> String {
        let p = self.path(name);
        std::fs::write(&p, text).unwrap();
        p.display().to_string()
    }

    fn s(&self, name: &str) -> String {
        self.path(name).display().to_string()
    }
}

#[test]
fn minimal_keep_config_runs_two_iterations() {
    let d = Dir::new();
    let cfg = d.write(
        "run.toml",
        &HELIX.replace("kind = \"propensity\"\ntarget_ss = \"H\"", "kind = \"keep\""),
    );
    let out = swarm(&["design", "-c", &cfg, "--iterations", "2", "-o", &d.s("t.jsonl")]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(records(&d.path("t.jsonl")), 2);
    assert!(String::from_utf8_lossy(&out.stdout).contains("best sequence: SSSSSSSSSSSSSSSSSS"));
}

#[test]
fn missing_start_sequence_exits_3() {
    let d = Dir::new();
    let cfg = d.write(
        "run.toml",
        &HELIX.replace("start_sequence = \"SSSSSSSSSSSSSSSSSS\"", ""),
    );
    let out = swarm(&["design", "-c", &cfg, "-o", &d.s("t.jsonl")]);
    assert_eq!(code(&out), 3);
    assert!(stderr(&out).contains("start_sequence"), "{}", stderr(&out));
    assert!(!d.path("t.jsonl").exists());
}

#[test]
fn invalid_value_exits_3_with_field() {
    let d = Dir::new();
    let cfg = d.write("run.toml", HELIX);
    let out = swarm(&["design", "-c", &cfg, "--epsilon=-1", "-o", &d.s("t.jsonl")]);
    assert_eq!(code(&out), 3);
    assert!(stderr(&out).contains("epsilon"));
    let out = swarm(&["design", "-c", &cfg, "--policy", "llm", "-o", &d.s("t.jsonl")]);
    assert_eq!(code(&out), 3);
    assert!(stderr(&out).contains("policy"));
}

#[test]
fn unknown_flag_exits_3() {
    let out = swarm(&["design", "--no-such-flag"]);
    assert_eq!(code(&out), 3);
    assert_eq!(code(&swarm(&["--help"])), 0);
}

#[test]
fn missing_api_key_exits_3() {
    let d = Dir::new();
    let cfg = d.write("run.toml", HELIX);
    let policy =
        r#"{"kind":"llm","base_url":"http://127.0.0.1:9/v1","model_name":"m","api_key_env":"SWARM_TEST_UNSET_KEY"}"#;
    let out = Command::new(SWARM)
        .args(["design", "-c", &cfg, "--policy", policy, "-o", &d.s("t.jsonl")])
        .env_remove("SWARM_TEST_UNSET_KEY")
        .output()
        .unwrap();
    assert_eq!(code(&out), 3, "{}", stderr(&out));
    assert!(stderr(&out).contains("SWARM_TEST_UNSET_KEY"));
}

#[test]
fn iterations_flag_overrides_file() {
    let d = Dir::new();
    let cfg = d.write("run.toml", HELIX);
    let out = swarm(&["design", "-c", &cfg, "--iterations", "64", "-o", &d.s("t.jsonl")]);
    assert_eq!(code(&out), 0);
    assert_eq!(records(&d.path("t.jsonl")), 64);
}

#[test]
fn resume_continues_to_the_new_budget() {
    let d = Dir::new();
    let cfg = d.write("run.toml", HELIX);
    assert_eq!(
        code(&swarm(&[
            "design",
            "-c",
            &cfg,
            "--iterations",
            "40",
            "-o",
            &d.s("full.jsonl")
        ])),
        0
    );
    assert_eq!(
        code(&swarm(&[
            "design",
            "-c",
            &cfg,
            "--iterations",
            "30",
            "-o",
            &d.s("part.jsonl")
        ])),
        0
    );
    let before = std::fs::read_to_string(d.path("part.jsonl")).unwrap();
    let out = swarm(&["resume", &d.s("part.jsonl"), "--iterations", "40"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let after = std::fs::read_to_string(d.path("part.jsonl")).unwrap();
    // Everything up to the old summary line is untouched.
    let kept = before.rsplit_once(r#"{"type":"summary""#).unwrap().0;
    assert!(after.starts_with(kept));
    let body = |p: &Path| {
        std::fs::read_to_string(p)
            .unwrap()
            .lines()
            .skip(1)
            .map(str::to_owned)
            .collect::<Vec<_>>()
    };
    assert_eq!(body(&d.path("full.jsonl")), body(&d.path("part.jsonl")));
}

#[test]
fn bridge_loss_exits_2() {
    let d = Dir::new();
    let cfg = d.write("run.toml", HELIX);
    let out = swarm(&[
        "design",
        "-c",
        &cfg,
        "--iterations",
        "20",
        "--evaluator",
        &format!("external:{STUB} fail-after-baseline"),
        "-o",
        &d.s("t.jsonl"),
    ]);
    assert_eq!(code(&out), 2, "{}", stderr(&out));
    assert_eq!(records(&d.path("t.jsonl")), 5);
    assert!(String::from_utf8_lossy(&out.stdout).contains("complete: false"));
}

#[test]
fn external_evaluator_campaign_completes() {
    let d = Dir::new();
    let cfg = d.write("run.toml", HELIX);
    let out = swarm(&[
        "design",
        "-c",
        &cfg,
        "--evaluator",
        &format!("external:{STUB}"),
        "-o",
        &d.s("t.jsonl"),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(records(&d.path("t.jsonl")), 4);
}

#[test]
fn validate_bridge_outcomes() {
    let ok = swarm(&["validate-bridge", "--timeout-secs", "5", STUB]);
    assert_eq!(code(&ok), 0, "{}", stderr(&ok));
    assert!(String::from_utf8_lossy(&ok.stdout).contains("protocol: 1"));

    let missing = swarm(&["validate-bridge", "--timeout-secs", "5", STUB, "no-handshake"]);
    assert_ne!(code(&missing), 0);
    assert!(stderr(&missing).contains("missing handshake"));

    let short = swarm(&["validate-bridge", "--timeout-secs", "5", STUB, "ss-length"]);
    assert_ne!(code(&short), 0);
    assert!(stderr(&short).contains("ss:"), "{}", stderr(&short));
}

fn fasta(d: &Dir, name: &str, count: usize, seed: u64) -> String {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let alphabet: Vec<char> = "ACDEFGHIKLMNPQRSTVWY".chars().collect();
    let mut text = String::new();
    for i in 0..count {
        let len = rng.random_range(20..50);
        let seq: String = (0..len).map(|_| alphabet[rng.random_range(0..20)]).collect();
        text.push_str(&format!(">{name}{i}\n{seq}\n"));
    }
    d.write(&format!("{name}.fasta"), &text)
}

#[test]
fn analyses_of_a_trajectory() {
    let d = Dir::new();
    let cfg = d.write("run.toml", HELIX);
    let traj = d.s("t.jsonl");
    assert_eq!(
        code(&swarm(&["design", "-c", &cfg, "--iterations", "64", "-o", &traj])),
        0
    );
    let original = std::fs::read(&traj).unwrap();

    let out = swarm(&["analyze-hamming", "--input", &traj, "-o", &d.s("h.csv")]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = std::fs::read_to_string(d.path("h.csv")).unwrap();
    assert!(text.starts_with("# config_hash=") && text.contains("\n# seed=7\n"));
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).skip(1).collect();
    assert_eq!(rows.len(), 64);
    assert!(rows.iter().all(|r| r.split(',').count() == 65));

    assert_eq!(
        code(&swarm(&["analyze-logo", "--input", &traj, "-o", &d.s("l.csv")])),
        0
    );
    let logo = std::fs::read_to_string(d.path("l.csv")).unwrap();
    assert_eq!(logo.lines().filter(|l| !l.starts_with('#')).count(), 19);

    assert_eq!(
        code(&swarm(&["analyze-convergence", "--input", &traj, "-o", &d.s("c1.csv")])),
        0
    );
    assert_eq!(
        code(&swarm(&["analyze-convergence", "--input", &traj, "-o", &d.s("c2.csv")])),
        0
    );
    let conv = std::fs::read(d.path("c1.csv")).unwrap();
    assert_eq!(conv, std::fs::read(d.path("c2.csv")).unwrap());
    assert_eq!(String::from_utf8(conv).unwrap().lines().count(), 3 + 64);

    let out = swarm(&["analyze-tree", "--input", &traj, "-o", &d.s("t.nwk")]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let tree = std::fs::read_to_string(d.path("t.nwk")).unwrap();
    assert!(tree.lines().next().unwrap().ends_with(" seed=7]"), "{tree}");

    assert_eq!(
        std::fs::read(&traj).unwrap(),
        original,
        "analyses must not touch the trajectory"
    );
}

#[test]
fn embed_three_labeled_sources() {
    let d = Dir::new();
    let cfg = d.write("run.toml", HELIX);
    let traj = d.s("t.jsonl");
    assert_eq!(
        code(&swarm(&["design", "-c", &cfg, "--iterations", "12", "-o", &traj])),
        0
    );
    let a = fasta(&d, "a", 15, 1);
    let b = fasta(&d, "b", 15, 2);
    let args = |out: &str| {
        vec![
            "analyze-embed".to_string(),
            "--input".into(),
            format!("swarm={traj}"),
            "--input".into(),
            format!("corpusA={a}"),
            "--input".into(),
            b.clone(),
            "--seed".into(),
            "3".into(),
            "-o".into(),
            d.s(out),
        ]
    };
    let run = |out: &str| Command::new(SWARM).args(args(out)).output().unwrap();
    let first = run("e1.csv");
    assert_eq!(code(&first), 0, "{}", stderr(&first));
    assert_eq!(code(&run("e2.csv")), 0);
    let text = std::fs::read_to_string(d.path("e1.csv")).unwrap();
    assert_eq!(text, std::fs::read_to_string(d.path("e2.csv")).unwrap());
    assert!(text.contains("\n# seed=3\n"));
    let labels: std::collections::BTreeSet<&str> = text
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap())
        .collect();
    assert_eq!(labels, ["b", "corpusA", "swarm"].into_iter().collect());
}

#[test]
fn tree_subsamples_to_a_thousand_leaves() {
    let d = Dir::new();
    let corpus = fasta(&d, "big", 1001, 9);
    let out = swarm(&["analyze-tree", "--input", &corpus, "--seed", "11", "-o", &d.s("t.nwk")]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = std::fs::read_to_string(d.path("t.nwk")).unwrap();
    assert!(text.starts_with("[config_hash=none seed=11]\n"));
    let newick = text.lines().nth(1).unwrap();
    assert_eq!(newick.matches("big").count(), 1000);
    assert!(newick.starts_with("(big0:"));
}

#[test]
fn corrupt_trajectory_names_file_and_line() {
    let d = Dir::new();
    let bad = d.write("bad.jsonl", "{\"type\":\"header\"\n");
    let out = swarm(&["analyze-convergence", "--input", &bad]);
    assert_ne!(code(&out), 0);
    assert!(
        stderr(&out).contains("bad.jsonl") && stderr(&out).contains("line 1"),
        "{}",
        stderr(&out)
    );
}
