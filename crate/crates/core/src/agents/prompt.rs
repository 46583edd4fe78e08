//! Prompt rendering. Output is a pure function of its inputs.

use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::context::ResidueContext;
use crate::eval::objective::DesignObjective;
use crate::eval::EvaluationResult;
use crate::memory::{MemoryDigest, Outcome};
use crate::sequence::AminoAcid;

/// The five prompt sections shown to one agent.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub role_task: String,
    pub local_context: String,
    pub memory_section: String,
    pub goal_energy: String,
    pub output_schema: String,
}

impl PromptBundle {
    /// Everything after the role section, as one user message.
    pub fn user_message(&self) -> String {
        format!(
            "## Local context\n{}\n\n## Memory\n{}\n\n## Design goal and energy\n{}\n\n## Output format\n{}",
            self.local_context, self.memory_section, self.goal_energy, self.output_schema
        )
    }

    pub fn sections(&self) -> [&str; 5] {
        [
            &self.role_task,
            &self.local_context,
            &self.memory_section,
            &self.goal_energy,
            &self.output_schema,
        ]
    }
}

fn alphabet() -> String {
    AminoAcid::ALL.iter().map(|a| a.code()).collect()
}

fn role_task(ctx: &ResidueContext) -> String {
    format!(
        "You are the agent responsible for residue position {} of {} in a protein sequence. \
         The residue currently at your position is {}. Each iteration every agent proposes one \
         amino acid for its own position at the same time; the assembled sequence is folded and \
         kept only if it scores better. Propose the residue for your position that best serves \
         the design goal.",
        ctx.position + 1,
        ctx.sequence_len,
        ctx.current
    )
}

fn local_context(ctx: &ResidueContext) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "Current residue: {}", ctx.current);
    let linear: Vec<String> = ctx
        .linear_neighbors
        .iter()
        .map(|(o, aa)| format!("{o:+}:{aa}"))
        .collect();
    let _ = writeln!(s, "Sequence neighbors (offset:residue): {}", linear.join(" "));
    if !ctx.has_structure {
        let _ = write!(
            s,
            "Structure: no folded structure yet. Spatial neighbors, solvent exposure and secondary \
             structure become available once a folded sequence has been accepted."
        );
        return s;
    }
    if ctx.spatial_neighbors.is_empty() {
        let _ = writeln!(s, "Spatial neighbors: none within the cutoff");
    } else {
        let spatial: Vec<String> = ctx
            .spatial_neighbors
            .iter()
            .map(|nb| format!("position {} at {:.1} Å", nb.position + 1, nb.distance))
            .collect();
        let _ = writeln!(s, "Spatial neighbors: {}", spatial.join("; "));
    }
    let _ = writeln!(s, "Solvent exposure: {}", ctx.exposure);
    let _ = write!(s, "Secondary structure: {} (window {})", ctx.ss_label, ctx.ss_window);
    s
}

fn memory_section(digest: &MemoryDigest) -> String {
    if digest.is_empty() {
        return "No history yet: this is the first iteration.".into();
    }
    let mut s = String::new();
    let _ = write!(s, "Global energy trend: {}", digest.global_energy_direction);
    if let Some(e) = digest.last_energy {
        let _ = write!(s, " (last total energy {e:.2})");
    }
    let _ = write!(s, "\nGlobal objective score trend: {}", digest.global_score_direction);
    if let Some(v) = digest.last_score {
        let _ = write!(s, " (last objective score {v:.3})");
    }
    if digest.recent_outcomes.is_empty() {
        s.push_str("\nYour recent proposals: none that changed the sequence");
    } else {
        let recent: Vec<String> = digest
            .recent_outcomes
            .iter()
            .map(|a| {
                let outcome = match a.outcome {
                    Outcome::AcceptedIter => "accepted",
                    Outcome::RejectedIter => "rejected",
                    Outcome::Fallback => "no valid answer",
                };
                format!("iteration {} {} {}", a.iteration, a.proposed, outcome)
            })
            .collect();
        let _ = write!(s, "\nYour recent proposals: {}", recent.join("; "));
    }
    if !digest.top_substitutions.is_empty() {
        let subs: Vec<String> = digest
            .top_substitutions
            .iter()
            .map(|t| {
                format!(
                    "{} ({:.0}% of {} tries accepted)",
                    t.residue,
                    t.success_rate * 100.0,
                    t.support
                )
            })
            .collect();
        let _ = write!(s, "\nYour most successful substitutions: {}", subs.join(", "));
    }
    if !digest.qualifying_patterns.is_empty() {
        let pats: Vec<String> = digest
            .qualifying_patterns
            .iter()
            .map(|p| {
                format!(
                    "{}->{} ({:.0}% of {} tries accepted)",
                    p.pattern.from,
                    p.pattern.to,
                    p.success_rate * 100.0,
                    p.support
                )
            })
            .collect();
        let _ = write!(
            s,
            "\nSubstitutions that worked in contexts like yours: {}",
            pats.join(", ")
        );
    }
    s
}

fn goal_energy(objective: &DesignObjective, last_eval: Option<&EvaluationResult>) -> String {
    let mut s = format!("Design goal ({}): {}", objective.name, objective.prompt_text.trim());
    match last_eval {
        Some(e) => {
            let _ = write!(
                s,
                "\nCurrent sequence: total energy {:.2} (lower is better), objective score {:.3} (0 to 1, higher is better)",
                e.total_energy, e.objective_score
            );
        }
        None => s.push_str("\nCurrent sequence: not evaluated yet"),
    }
    s
}

fn output_schema() -> String {
    format!(
        "Reply with one JSON object with exactly these two fields:\n\
         {{\"reasoning\": \"<one or two sentences>\", \"proposed_value\": \"<residue>\"}}\n\
         proposed_value must be a single one-letter amino acid code from {}.",
        alphabet()
    )
}

pub fn build_prompt(
    ctx: &ResidueContext,
    objective: &DesignObjective,
    last_eval: Option<&EvaluationResult>,
) -> PromptBundle {
    PromptBundle {
        role_task: role_task(ctx),
        local_context: local_context(ctx),
        memory_section: memory_section(&ctx.memory_digest),
        goal_energy: goal_energy(objective, last_eval),
        output_schema: output_schema(),
    }
}
