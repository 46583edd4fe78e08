//! The four-phase campaign loop.
//!
//! 1. every agent proposes a residue for its position, seeing only the last
//!    accepted structure and its memory digest;
//! 2. the proposals are assembled into S′ and evaluated;
//! 3. S′ is scored;
//! 4. S′ is accepted or rejected and memory is updated.

pub mod config;
pub mod trajectory;

use std::path::Path;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use thiserror::Error;

use crate::agents::{collect_proposals, AgentError, AgentPolicy, Proposal};
use crate::context::{build_snapshot, residue_context, ContextError, ResidueContext, StructureSnapshot};
use crate::eval::bridge::PROTOCOL_VERSION;
use crate::eval::{EvalError, EvaluationResult, Evaluator};
use crate::memory::{digest, record_iteration, ContextKey, GlobalMemory, LocalHistory, Observation};
use crate::sequence::ProteinSequence;

pub use config::{ConfigError, EvaluatorSpec, RunConfig};
pub use trajectory::{
    read_trajectory, CampaignState, ConvergencePoint, Header, IterationRecord, Line, Summary, Trajectory,
    TrajectoryError, TrajectoryWriter,
};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error("evaluating the start sequence failed: {0}")]
    Baseline(EvalError),
    #[error(transparent)]
    Context(#[from] ContextError),
    #[error(transparent)]
    Trajectory(#[from] TrajectoryError),
    #[error("cannot replay trajectory: {0}")]
    Replay(String),
    #[error("campaign already finished")]
    Finished,
}

/// Acceptance rule: a strictly better score wins outright; a score within
/// `epsilon` of the old one wins only with strictly lower energy.
pub fn accept_decision(new: (f64, f64), old: (f64, f64), epsilon: f64) -> bool {
    let ((new_score, new_energy), (old_score, old_energy)) = (new, old);
    new_score > old_score || (new_energy < old_energy && (new_score - old_score).abs() <= epsilon)
}

/// Higher score, then lower energy. Earlier wins ties because the caller
/// only replaces on strict improvement.
fn better(a: &EvaluationResult, b: &EvaluationResult) -> bool {
    a.objective_score > b.objective_score || (a.objective_score == b.objective_score && a.total_energy < b.total_energy)
}

fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

fn initial_state(config: &RunConfig, start: &ProteinSequence, eval: EvaluationResult) -> CampaignState {
    CampaignState {
        iteration: 0,
        current: start.clone(),
        current_eval: eval.clone(),
        has_structure: false,
        best: start.clone(),
        best_eval: eval,
        best_iteration: 0,
        memory: GlobalMemory::new(config.theta, config.min_support),
        locals: LocalHistory::for_length(start.len()),
        consecutive_failures: 0,
        accepted_count: 0,
    }
}

/// A running campaign bound to its trajectory file.
pub struct Campaign {
    config: RunConfig,
    policy: Box<dyn AgentPolicy>,
    evaluator: Box<dyn Evaluator>,
    state: CampaignState,
    writer: TrajectoryWriter,
    convergence: Vec<ConvergencePoint>,
    stopped: bool,
}

impl Campaign {
    /// Validates the config, evaluates the start sequence and writes the
    /// header.
    pub fn start(config: RunConfig) -> Result<Self, EngineError> {
        let evaluator = config.evaluator.build(config.anm);
        Self::start_with(config, evaluator)
    }

    pub fn start_with(config: RunConfig, mut evaluator: Box<dyn Evaluator>) -> Result<Self, EngineError> {
        config.validate()?;
        let policy = config.policy.build()?;
        let start = config.start_sequence.clone();
        let eval = evaluator
            .evaluate(&start, &config.objective.scorer)
            .map_err(EngineError::Baseline)?;
        eval.check_invariants(start.len())
            .map_err(|e| EngineError::Baseline(EvalError::ProtocolViolation(e)))?;
        let state = initial_state(&config, &start, eval);
        let mut writer = TrajectoryWriter::create(&config.output_path)?;
        writer.write(&Line::Header(Box::new(Header {
            format: trajectory::TRAJECTORY_FORMAT,
            protocol_version: PROTOCOL_VERSION,
            config_hash: config.config_hash(),
            start_sequence: start,
            objective: config.objective.clone(),
            seed: config.seed,
            config: config.clone(),
        })))?;
        Ok(Campaign {
            config,
            policy,
            evaluator,
            state,
            writer,
            convergence: Vec::new(),
            stopped: false,
        })
    }

    /// Reopens a trajectory and rebuilds the state after its last record,
    /// replaying any records written since the last checkpoint.
    /// `iterations` optionally raises the total budget.
    pub fn resume(path: &Path, iterations: Option<usize>) -> Result<Self, EngineError> {
        let trajectory = read_trajectory(path)?;
        let mut config = trajectory.header.config.clone();
        config.output_path = path.to_path_buf();
        if let Some(total) = iterations {
            config.iterations = total;
        }
        let evaluator = config.evaluator.build(config.anm);
        Self::resume_with(trajectory, config, evaluator)
    }

    pub fn resume_with(
        trajectory: Trajectory,
        config: RunConfig,
        mut evaluator: Box<dyn Evaluator>,
    ) -> Result<Self, EngineError> {
        config.validate()?;
        let policy = config.policy.build()?;
        let (mut state, replay_from) = match &trajectory.checkpoint {
            Some((state, at)) => (state.clone(), *at),
            None => {
                let start = trajectory.header.start_sequence.clone();
                let eval = evaluator
                    .evaluate(&start, &config.objective.scorer)
                    .map_err(EngineError::Baseline)?;
                (initial_state(&config, &start, eval), 0)
            }
        };
        for record in &trajectory.records[replay_from..] {
            replay(&mut state, record, &config)?;
        }
        let convergence = trajectory.records.iter().map(convergence_point).collect();
        let writer = TrajectoryWriter::reopen(&config.output_path, trajectory.resume_offset)?;
        Ok(Campaign {
            config,
            policy,
            evaluator,
            state,
            writer,
            convergence,
            stopped: false,
        })
    }

    pub fn state(&self) -> &CampaignState {
        &self.state
    }

    pub fn config(&self) -> &RunConfig {
        &self.config
    }

    /// True once the budget is spent or the failure limit was hit.
    pub fn is_finished(&self) -> bool {
        self.stopped || self.state.iteration >= self.config.iterations
    }

    fn contexts(&self) -> Result<(Vec<ResidueContext>, Vec<ContextKey>), EngineError> {
        let state = &self.state;
        let n = state.current.len();
        let snapshot = if state.has_structure {
            build_snapshot(&state.current_eval)?
        } else {
            StructureSnapshot::sentinel(n)
        };
        let mut contexts = Vec::with_capacity(n);
        for i in 0..n {
            let key = crate::context::context_key(&snapshot, &state.current, i);
            let d = digest(&state.memory, &state.locals[i], &key);
            contexts.push(residue_context(
                &snapshot,
                &state.current,
                i,
                self.config.radius,
                self.config.cutoff,
                d,
            )?);
        }
        let keys = contexts.iter().map(ResidueContext::key).collect();
        Ok((contexts, keys))
    }

    /// Runs one iteration and appends its record.
    pub fn step(&mut self) -> Result<IterationRecord, EngineError> {
        if self.is_finished() {
            return Err(EngineError::Finished);
        }
        let started = Instant::now();
        let iteration = self.state.iteration + 1;
        let writes_before = self.state.memory.write_count;

        // Phase 1.
        let (contexts, keys) = self.contexts()?;
        let proposals = collect_proposals(
            self.policy.as_ref(),
            &contexts,
            &self.config.objective,
            Some(&self.state.current_eval),
            self.config.seed,
            iteration,
        );

        // Phase 2.
        let proposed = assemble(&self.state.current, &proposals);
        let changed_positions = self
            .state
            .current
            .changed_positions(&proposed)
            .expect("proposals keep the sequence length");
        let fallback_positions: Vec<usize> = proposals.iter().filter(|p| p.fallback).map(|p| p.position).collect();
        let evaluation = self
            .evaluator
            .evaluate(&proposed, &self.config.objective.scorer)
            .and_then(|e| {
                e.check_invariants(proposed.len())
                    .map_err(EvalError::ProtocolViolation)?;
                build_snapshot(&e).map_err(|c| EvalError::InvalidInput(c.to_string()))?;
                Ok(e)
            });

        assert_eq!(
            self.state.memory.write_count, writes_before,
            "memory must not change before phase 4"
        );

        let mut record = IterationRecord {
            iteration,
            proposed_sequence: proposed.clone(),
            accepted: false,
            failed: false,
            error: None,
            total_energy: None,
            objective_score: None,
            ss: None,
            changed_positions,
            fallback_positions,
            current_best: self.state.current.clone(),
            best_score: self.state.best_eval.objective_score,
            proposals: proposals.clone(),
            evaluation: None,
            timestamp: None,
            wall_time_ms: None,
        };

        match evaluation {
            Err(e) => {
                log::warn!("iteration {iteration}: evaluation failed: {e}");
                record.failed = true;
                record.error = Some(e.to_string());
                self.state.consecutive_failures += 1;
            }
            Ok(eval) => {
                // Phase 3 happened inside the evaluator; Phase 4 here.
                record.accepted = apply(
                    &mut self.state,
                    iteration,
                    &proposed,
                    &eval,
                    &proposals,
                    &keys,
                    &self.config,
                );
                record.total_energy = Some(eval.total_energy);
                record.objective_score = Some(eval.objective_score);
                record.ss = Some(eval.ss.clone());
                record.current_best = self.state.current.clone();
                record.best_score = self.state.best_eval.objective_score;
                record.evaluation = Some(eval);
            }
        }
        self.state.iteration = iteration;

        if self.config.record_timing {
            record.timestamp = Some(now_ms());
            record.wall_time_ms = Some(started.elapsed().as_millis() as u64);
        }
        self.writer.write(&Line::Iteration(Box::new(record.clone())))?;
        self.convergence.push(convergence_point(&record));
        if iteration % self.config.checkpoint_every == 0 {
            self.writer.write(&Line::Checkpoint(Box::new(self.state.clone())))?;
        }
        if self.state.consecutive_failures >= self.config.max_consecutive_failures {
            log::error!(
                "stopping after {} consecutive evaluation failures",
                self.state.consecutive_failures
            );
            self.stopped = true;
        }
        Ok(record)
    }

    /// Writes the summary line. `complete` is false when the campaign
    /// stopped early.
    pub fn finish(mut self) -> Result<Summary, EngineError> {
        let complete = self.state.iteration >= self.config.iterations && !self.stopped;
        let summary = Summary {
            complete,
            iterations_run: self.state.iteration,
            accepted_count: self.state.accepted_count,
            acceptance_rate: if self.state.iteration == 0 {
                0.0
            } else {
                self.state.accepted_count as f64 / self.state.iteration as f64
            },
            best_sequence: self.state.best.clone(),
            best_score: self.state.best_eval.objective_score,
            best_energy: self.state.best_eval.total_energy,
            best_iteration: self.state.best_iteration,
            convergence: std::mem::take(&mut self.convergence),
        };
        self.writer.write(&Line::Summary(Box::new(summary.clone())))?;
        Ok(summary)
    }

    /// Steps until the budget is spent or the failure limit stops the run.
    pub fn run(mut self) -> Result<Summary, EngineError> {
        while !self.is_finished() {
            self.step()?;
        }
        self.finish()
    }
}

fn assemble(current: &ProteinSequence, proposals: &[Proposal]) -> ProteinSequence {
    let mut next = current.clone();
    for p in proposals {
        next = next.with_residue(p.position, p.proposed_value);
    }
    next
}

fn convergence_point(record: &IterationRecord) -> ConvergencePoint {
    ConvergencePoint {
        iteration: record.iteration,
        total_energy: record.total_energy,
        objective_score: record.objective_score,
        accepted: record.accepted,
    }
}

/// Phase 4: decision, state transition and memory update.
fn apply(
    state: &mut CampaignState,
    iteration: usize,
    proposed: &ProteinSequence,
    eval: &EvaluationResult,
    proposals: &[Proposal],
    keys: &[ContextKey],
    config: &RunConfig,
) -> bool {
    let accepted = accept_decision(
        (eval.objective_score, eval.total_energy),
        (state.current_eval.objective_score, state.current_eval.total_energy),
        config.epsilon,
    );
    record_iteration(
        &mut state.memory,
        &mut state.locals,
        &Observation {
            iteration,
            previous: &state.current,
            proposed,
            accepted,
            total_energy: eval.total_energy,
            objective_score: eval.objective_score,
            proposals,
            context_keys: keys,
        },
    );
    state.consecutive_failures = 0;
    if accepted {
        state.current = proposed.clone();
        state.current_eval = eval.clone();
        state.has_structure = true;
        state.accepted_count += 1;
        if better(eval, &state.best_eval) {
            state.best = proposed.clone();
            state.best_eval = eval.clone();
            state.best_iteration = iteration;
        }
    }
    accepted
}

/// Re-applies a stored record to a state rebuilt from a checkpoint.
fn replay(state: &mut CampaignState, record: &IterationRecord, config: &RunConfig) -> Result<(), EngineError> {
    let iteration = record.iteration;
    if record.failed {
        state.consecutive_failures += 1;
    } else {
        let eval = record
            .evaluation
            .as_ref()
            .ok_or_else(|| EngineError::Replay(format!("iteration {iteration} has no evaluation")))?;
        let snapshot = if state.has_structure {
            build_snapshot(&state.current_eval)?
        } else {
            StructureSnapshot::sentinel(state.current.len())
        };
        let keys: Vec<ContextKey> = (0..state.current.len())
            .map(|i| crate::context::context_key(&snapshot, &state.current, i))
            .collect();
        let accepted = apply(
            state,
            iteration,
            &record.proposed_sequence,
            eval,
            &record.proposals,
            &keys,
            config,
        );
        if accepted != record.accepted {
            return Err(EngineError::Replay(format!(
                "iteration {iteration} replays to a different decision"
            )));
        }
    }
    state.iteration = iteration;
    Ok(())
}

/// Runs a whole campaign from a config.
pub fn run_campaign(config: RunConfig) -> Result<Summary, EngineError> {
    Campaign::start(config)?.run()
}
