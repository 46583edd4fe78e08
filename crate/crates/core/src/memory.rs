//! Global and per-position learning state, updated once per iteration after
//! the accept/reject decision, and condensed into per-agent digests.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::agents::Proposal;
use crate::sequence::{AminoAcid, ProteinSequence, SsLabel};

pub const DEFAULT_THETA: f64 = 0.5;
pub const DEFAULT_MIN_SUPPORT: u32 = 3;
pub const TREND_WINDOW: usize = 5;
pub const RECENT_OUTCOMES: usize = 5;
pub const TOP_SUBSTITUTIONS: usize = 3;
pub const TOP_PATTERNS: usize = 3;
const SLOPE_DEAD_BAND: f64 = 1e-6;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub successes: u32,
    pub failures: u32,
}

impl Counts {
    pub fn support(&self) -> u32 {
        self.successes + self.failures
    }

    /// Fraction of successes; zero when there is no support.
    pub fn success_rate(&self) -> f64 {
        match self.support() {
            0 => 0.0,
            n => f64::from(self.successes) / f64::from(n),
        }
    }

    fn record(&mut self, success: bool) {
        if success {
            self.successes += 1;
        } else {
            self.failures += 1;
        }
    }
}

/// A substitution `from -> to` at one position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Pattern {
    pub from: AminoAcid,
    pub to: AminoAcid,
}

/// Local environment a pattern was tried in: both linear neighbors and the
/// secondary structure label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ContextKey {
    pub left: Option<AminoAcid>,
    pub right: Option<AminoAcid>,
    pub ss: SsLabel,
}

impl fmt::Display for ContextKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let show = |aa: Option<AminoAcid>| aa.map_or('-', AminoAcid::code);
        write!(f, "left={} right={} ss={}", show(self.left), show(self.right), self.ss)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SequenceEntry {
    pub iteration: usize,
    pub sequence: ProteinSequence,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrendPoint {
    pub iteration: usize,
    pub value: f64,
}

mod as_entries {
    use std::collections::BTreeMap;

    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<K, V, S>(map: &BTreeMap<K, V>, serializer: S) -> Result<S::Ok, S::Error>
    where
        K: Serialize,
        V: Serialize,
        S: Serializer,
    {
        serializer.collect_seq(map.iter())
    }

    pub fn deserialize<'de, K, V, D>(deserializer: D) -> Result<BTreeMap<K, V>, D::Error>
    where
        K: Deserialize<'de> + Ord,
        V: Deserialize<'de>,
        D: Deserializer<'de>,
    {
        Ok(Vec::<(K, V)>::deserialize(deserializer)?.into_iter().collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalMemory {
    pub accepted: Vec<SequenceEntry>,
    pub rejected: Vec<SequenceEntry>,
    #[serde(with = "as_entries")]
    pub pattern_stats: BTreeMap<(Pattern, ContextKey), Counts>,
    pub theta: f64,
    pub min_support: u32,
    pub energy_trend: Vec<TrendPoint>,
    pub structure_trend: Vec<TrendPoint>,
    /// Number of state transitions applied; lets callers check that nothing
    /// writes memory outside the decision phase.
    pub write_count: u64,
}

impl GlobalMemory {
    pub fn new(theta: f64, min_support: u32) -> Self {
        GlobalMemory {
            accepted: Vec::new(),
            rejected: Vec::new(),
            pattern_stats: BTreeMap::new(),
            theta,
            min_support,
            energy_trend: Vec::new(),
            structure_trend: Vec::new(),
            write_count: 0,
        }
    }

    /// Patterns whose success rate exceeds theta with enough support.
    pub fn successful_patterns(&self) -> impl Iterator<Item = (&(Pattern, ContextKey), &Counts)> + '_ {
        self.pattern_stats
            .iter()
            .filter(|(_, c)| c.support() >= self.min_support && c.success_rate() > self.theta)
    }

    pub fn iterations_recorded(&self) -> usize {
        self.accepted.len() + self.rejected.len()
    }
}

impl Default for GlobalMemory {
    fn default() -> Self {
        GlobalMemory::new(DEFAULT_THETA, DEFAULT_MIN_SUPPORT)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outcome {
    AcceptedIter,
    RejectedIter,
    Fallback,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Action {
    pub iteration: usize,
    pub proposed: AminoAcid,
    pub outcome: Outcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalHistory {
    pub position: usize,
    pub actions: Vec<Action>,
    #[serde(with = "as_entries")]
    pub per_substitution: BTreeMap<AminoAcid, Counts>,
    /// Keyed by `(offset, neighbor residue)` with offset -1 or +1.
    #[serde(with = "as_entries")]
    pub neighbor_effects: BTreeMap<(i8, AminoAcid), Counts>,
}

impl LocalHistory {
    pub fn new(position: usize) -> Self {
        LocalHistory {
            position,
            actions: Vec::new(),
            per_substitution: BTreeMap::new(),
            neighbor_effects: BTreeMap::new(),
        }
    }

    pub fn for_length(n: usize) -> Vec<LocalHistory> {
        (0..n).map(LocalHistory::new).collect()
    }
}

/// What Phase 4 knows about the iteration it is recording.
#[derive(Debug, Clone, Copy)]
pub struct Observation<'a> {
    pub iteration: usize,
    pub previous: &'a ProteinSequence,
    pub proposed: &'a ProteinSequence,
    pub accepted: bool,
    pub total_energy: f64,
    pub objective_score: f64,
    pub proposals: &'a [Proposal],
    /// Context each agent saw when proposing, one per position.
    pub context_keys: &'a [ContextKey],
}

/// Applies one evaluated iteration to memory. Only positions whose residue
/// changed receive credit or blame, since acceptance is sequence-level.
pub fn record_iteration(mem: &mut GlobalMemory, locals: &mut [LocalHistory], obs: &Observation<'_>) {
    let entry = SequenceEntry {
        iteration: obs.iteration,
        sequence: obs.proposed.clone(),
    };
    if obs.accepted {
        mem.accepted.push(entry);
    } else {
        mem.rejected.push(entry);
    }

    let outcome = if obs.accepted {
        Outcome::AcceptedIter
    } else {
        Outcome::RejectedIter
    };

    for proposal in obs.proposals {
        let i = proposal.position;
        let local = &mut locals[i];
        if proposal.fallback {
            local.actions.push(Action {
                iteration: obs.iteration,
                proposed: proposal.proposed_value,
                outcome: Outcome::Fallback,
            });
            continue;
        }
        let from = obs.previous[i];
        let to = obs.proposed[i];
        if from == to {
            continue;
        }
        local.actions.push(Action {
            iteration: obs.iteration,
            proposed: to,
            outcome,
        });
        local.per_substitution.entry(to).or_default().record(obs.accepted);
        for offset in [-1i8, 1] {
            let j = i as isize + offset as isize;
            if let Some(nb) = usize::try_from(j).ok().and_then(|j| obs.proposed.get(j)) {
                local
                    .neighbor_effects
                    .entry((offset, nb))
                    .or_default()
                    .record(obs.accepted);
            }
        }
        mem.pattern_stats
            .entry((Pattern { from, to }, obs.context_keys[i]))
            .or_default()
            .record(obs.accepted);
    }

    mem.energy_trend.push(TrendPoint {
        iteration: obs.iteration,
        value: obs.total_energy,
    });
    mem.structure_trend.push(TrendPoint {
        iteration: obs.iteration,
        value: obs.objective_score,
    });
    mem.write_count += 1;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    Improving,
    Worsening,
    Flat,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Improving => "improving",
            Direction::Worsening => "worsening",
            Direction::Flat => "flat",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubstitutionSummary {
    pub residue: AminoAcid,
    pub success_rate: f64,
    pub support: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PatternSummary {
    pub pattern: Pattern,
    pub success_rate: f64,
    pub support: u32,
}

/// Condensed memory shown to one agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemoryDigest {
    pub position: usize,
    pub top_substitutions: Vec<SubstitutionSummary>,
    pub recent_outcomes: Vec<Action>,
    pub global_energy_direction: Direction,
    pub global_score_direction: Direction,
    pub last_energy: Option<f64>,
    pub last_score: Option<f64>,
    pub qualifying_patterns: Vec<PatternSummary>,
}

impl MemoryDigest {
    pub fn empty(position: usize) -> Self {
        MemoryDigest {
            position,
            top_substitutions: Vec::new(),
            recent_outcomes: Vec::new(),
            global_energy_direction: Direction::Flat,
            global_score_direction: Direction::Flat,
            last_energy: None,
            last_score: None,
            qualifying_patterns: Vec::new(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.top_substitutions.is_empty()
            && self.recent_outcomes.is_empty()
            && self.qualifying_patterns.is_empty()
            && self.last_energy.is_none()
    }
}

/// Least-squares slope of the last [`TREND_WINDOW`] points.
pub fn trend_slope(points: &[TrendPoint]) -> Option<f64> {
    let tail = &points[points.len().saturating_sub(TREND_WINDOW)..];
    if tail.len() < 2 {
        return None;
    }
    let n = tail.len() as f64;
    let mean_x = tail.iter().map(|p| p.iteration as f64).sum::<f64>() / n;
    let mean_y = tail.iter().map(|p| p.value).sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for p in tail {
        let dx = p.iteration as f64 - mean_x;
        sxy += dx * (p.value - mean_y);
        sxx += dx * dx;
    }
    (sxx > 0.0).then(|| sxy / sxx)
}

fn direction(points: &[TrendPoint], lower_is_better: bool) -> Direction {
    match trend_slope(points) {
        Some(s) if s.abs() >= SLOPE_DEAD_BAND => {
            if (s < 0.0) == lower_is_better {
                Direction::Improving
            } else {
                Direction::Worsening
            }
        }
        _ => Direction::Flat,
    }
}

/// Builds the digest for one position from global memory, its local history
/// and the context key of its current environment.
pub fn digest(mem: &GlobalMemory, local: &LocalHistory, key: &ContextKey) -> MemoryDigest {
    let mut top_substitutions: Vec<SubstitutionSummary> = local
        .per_substitution
        .iter()
        .map(|(&residue, c)| SubstitutionSummary {
            residue,
            success_rate: c.success_rate(),
            support: c.support(),
        })
        .collect();
    top_substitutions.sort_by(|a, b| {
        b.success_rate
            .total_cmp(&a.success_rate)
            .then(b.support.cmp(&a.support))
            .then(a.residue.cmp(&b.residue))
    });
    top_substitutions.truncate(TOP_SUBSTITUTIONS);

    let recent_outcomes = local.actions[local.actions.len().saturating_sub(RECENT_OUTCOMES)..].to_vec();

    let mut qualifying_patterns: Vec<PatternSummary> = mem
        .successful_patterns()
        .filter(|((_, ctx), _)| ctx == key)
        .map(|((pattern, _), c)| PatternSummary {
            pattern: *pattern,
            success_rate: c.success_rate(),
            support: c.support(),
        })
        .collect();
    qualifying_patterns.sort_by(|a, b| {
        b.success_rate
            .total_cmp(&a.success_rate)
            .then(b.support.cmp(&a.support))
            .then(a.pattern.cmp(&b.pattern))
    });
    qualifying_patterns.truncate(TOP_PATTERNS);

    MemoryDigest {
        position: local.position,
        top_substitutions,
        recent_outcomes,
        global_energy_direction: direction(&mem.energy_trend, true),
        global_score_direction: direction(&mem.structure_trend, false),
        last_energy: mem.energy_trend.last().map(|p| p.value),
        last_score: mem.structure_trend.last().map(|p| p.value),
        qualifying_patterns,
    }
}
