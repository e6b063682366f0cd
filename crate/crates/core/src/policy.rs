//! Fact placement policy.
//!
//! Pure predicates over a session-scoped [`PolicyState`]:
//!
//! * [`show_fact_at_step`]: a fact exists, fewer than the cap have been
//!   shown, enough turns have passed since the last one, the resulting turn
//!   stays within the voice word bound, and the placement mode allows the
//!   current phase.
//! * [`needs_permission`]: search-phase facts are shown unasked, execution
//!   facts are offered first (unless overridden).
//! * [`PolicyState::handle_fact_rejection`]: a declined offer caps the rest
//!   of the session at one fact.
//! * [`PolicyState::should_seek_feedback`]: ask about a fact once per session.
//!
//! One counter is shared by search and execution facts, and the rejection
//! cap applies session-wide.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{CuratedFact, StepRef};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PolicyError {
    #[error("max_facts must be at least 1")]
    ZeroMaxFacts,
    #[error("voice_word_bound must be at least 1")]
    ZeroVoiceBound,
    #[error("always_ask and never_ask are mutually exclusive")]
    ConflictingAsk,
    #[error("fact `{0}` was already shown in this session")]
    DuplicateFact(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Search,
    Execution,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlacementMode {
    #[default]
    Hybrid,
    SearchOnly,
    ExecutionOnly,
}

impl PlacementMode {
    pub fn permits(self, phase: Phase) -> bool {
        match (self, phase) {
            (PlacementMode::Hybrid, _) => true,
            (PlacementMode::SearchOnly, p) => p == Phase::Search,
            (PlacementMode::ExecutionOnly, p) => p == Phase::Execution,
        }
    }
}

fn default_max_facts() -> u32 {
    3
}
fn default_min_turns() -> u32 {
    3
}
fn default_voice_bound() -> usize {
    60
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolicyParams {
    #[serde(default = "default_max_facts")]
    pub max_facts: u32,
    #[serde(default = "default_min_turns")]
    pub min_turns_btw_facts: u32,
    #[serde(default = "default_voice_bound")]
    pub voice_word_bound: usize,
    #[serde(default)]
    pub mode: PlacementMode,
    #[serde(default)]
    pub always_ask: bool,
    #[serde(default)]
    pub never_ask: bool,
}

impl Default for PolicyParams {
    fn default() -> Self {
        Self {
            max_facts: default_max_facts(),
            min_turns_btw_facts: default_min_turns(),
            voice_word_bound: default_voice_bound(),
            mode: PlacementMode::Hybrid,
            always_ask: false,
            never_ask: false,
        }
    }
}

impl PolicyParams {
    pub fn validate(&self) -> Result<(), PolicyError> {
        if self.max_facts == 0 {
            return Err(PolicyError::ZeroMaxFacts);
        }
        if self.voice_word_bound == 0 {
            return Err(PolicyError::ZeroVoiceBound);
        }
        if self.always_ask && self.never_ask {
            return Err(PolicyError::ConflictingAsk);
        }
        Ok(())
    }
}

/// Per-session counters read by the predicates.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolicyState {
    pub facts_shown_count: u32,
    /// Completed turns since the last fact; `None` until the first fact.
    pub turns_since_last_fact: Option<u32>,
    pub shown_fact_ids: BTreeSet<String>,
    pub feedback_sought: bool,
    pub effective_max_facts: u32,
    #[serde(default)]
    fact_this_turn: bool,
}

impl PolicyState {
    pub fn new(params: &PolicyParams) -> Self {
        Self {
            facts_shown_count: 0,
            turns_since_last_fact: None,
            shown_fact_ids: BTreeSet::new(),
            feedback_sought: false,
            effective_max_facts: params.max_facts,
            fact_this_turn: false,
        }
    }

    /// Marks a fact as shown in the current turn.
    pub fn record_fact_shown(&mut self, fact_id: &str) -> Result<(), PolicyError> {
        if !self.shown_fact_ids.insert(fact_id.to_string()) {
            return Err(PolicyError::DuplicateFact(fact_id.to_string()));
        }
        self.facts_shown_count += 1;
        self.turns_since_last_fact = Some(0);
        self.fact_this_turn = true;
        Ok(())
    }

    /// Closes a user/assistant turn pair. The turn that showed a fact does
    /// not count towards the spacing that follows it.
    pub fn end_turn(&mut self) {
        if self.fact_this_turn {
            self.fact_this_turn = false;
        } else if let Some(t) = self.turns_since_last_fact.as_mut() {
            *t = t.saturating_add(1);
        }
    }

    /// A declined offer lowers the session cap to one. Counters are untouched.
    pub fn handle_fact_rejection(&mut self) {
        self.effective_max_facts = self.effective_max_facts.min(1);
    }

    pub fn should_seek_feedback(&self) -> bool {
        self.facts_shown_count >= 1 && !self.feedback_sought
    }

    /// Must be called once the question has been put, answered or not.
    pub fn mark_feedback_sought(&mut self) {
        self.feedback_sought = true;
    }
}

/// Each conjunct of the show predicate, kept for the audit trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShowDecision {
    pub step_has_fact: bool,
    pub under_cap: bool,
    pub spaced: bool,
    pub voice_friendly: bool,
    pub phase_permitted: bool,
    pub show: bool,
}

pub fn show_fact_at_step(
    state: &PolicyState,
    params: &PolicyParams,
    step_has_fact: bool,
    prospective_turn_word_count: usize,
    phase: Phase,
) -> ShowDecision {
    let under_cap = state.facts_shown_count < state.effective_max_facts;
    let spaced = state
        .turns_since_last_fact
        .is_none_or(|t| t >= params.min_turns_btw_facts);
    let voice_friendly = prospective_turn_word_count <= params.voice_word_bound;
    let phase_permitted = params.mode.permits(phase);
    ShowDecision {
        step_has_fact,
        under_cap,
        spaced,
        voice_friendly,
        phase_permitted,
        show: step_has_fact && under_cap && spaced && voice_friendly && phase_permitted,
    }
}

pub fn needs_permission(phase: Phase, params: &PolicyParams) -> bool {
    if params.always_ask {
        return true;
    }
    if params.never_ask {
        return false;
    }
    phase == Phase::Execution
}

/// Linked facts indexed by step and by task, best first.
#[derive(Debug, Clone, Default)]
pub struct FactIndex {
    facts: Vec<CuratedFact>,
    by_id: HashMap<String, usize>,
    by_step: HashMap<StepRef, Vec<usize>>,
    by_task: HashMap<String, Vec<usize>>,
}

impl FactIndex {
    pub fn new(mut facts: Vec<CuratedFact>) -> Self {
        facts.sort_by(CuratedFact::rank_cmp);
        let mut by_id = HashMap::new();
        let mut by_step: HashMap<StepRef, Vec<usize>> = HashMap::new();
        let mut by_task: HashMap<String, Vec<usize>> = HashMap::new();
        for (i, fact) in facts.iter().enumerate() {
            by_id.insert(fact.id.clone(), i);
            for step in &fact.linked_step_ids {
                by_step.entry(step.clone()).or_default().push(i);
                let task = by_task.entry(step.task.clone()).or_default();
                if task.last() != Some(&i) {
                    task.push(i);
                }
            }
        }
        Self {
            facts,
            by_id,
            by_step,
            by_task,
        }
    }

    pub fn len(&self) -> usize {
        self.facts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.facts.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&CuratedFact> {
        self.by_id.get(id).map(|&i| &self.facts[i])
    }

    pub fn facts_for_step(&self, step: &StepRef) -> impl Iterator<Item = &CuratedFact> {
        self.by_step
            .get(step)
            .into_iter()
            .flatten()
            .map(|&i| &self.facts[i])
    }

    pub fn facts_for_task(&self, task: &str) -> impl Iterator<Item = &CuratedFact> {
        self.by_task
            .get(task)
            .into_iter()
            .flatten()
            .map(|&i| &self.facts[i])
    }
}

/// Best fact linked to `step_ref` that has not been shown yet.
pub fn select_fact<'a>(
    step_ref: &StepRef,
    index: &'a FactIndex,
    shown_fact_ids: &BTreeSet<String>,
) -> Option<&'a CuratedFact> {
    index
        .facts_for_step(step_ref)
        .find(|f| !shown_fact_ids.contains(&f.id))
}

/// Best unshown fact linked to any step of `task`; used for search results.
pub fn select_task_fact<'a>(
    task: &str,
    index: &'a FactIndex,
    shown_fact_ids: &BTreeSet<String>,
) -> Option<&'a CuratedFact> {
    index
        .facts_for_task(task)
        .find(|f| !shown_fact_ids.contains(&f.id))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceOutcome {
    /// Facts disabled or no candidate fact; predicate still evaluated.
    NoFact,
    Suppressed,
    Shown,
    Offered,
    /// Offer deferred because the feedback question took this turn.
    Deferred,
}

/// One audit record per policy evaluation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolicyTrace {
    pub turn_index: usize,
    pub phase: Phase,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fact_id: Option<String>,
    pub decision: ShowDecision,
    pub needs_permission: bool,
    pub outcome: TraceOutcome,
    pub facts_shown_count: u32,
    pub effective_max_facts: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub turns_since_last_fact: Option<u32>,
}
