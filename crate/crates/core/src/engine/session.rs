//! Session state machine.
//!
//! ```text
//! searching ──select──▶ executing ──last step──▶ awaiting_rating ──▶ ended
//!    │  ▲                 │  ▲  │
//!    │  └─(always_ask)─┐  │  │  └──feedback question──▶ awaiting_feedback
//!    │                 ▼  ▼  │
//!    └─────────▶ awaiting_fact_permission
//! ```
//!
//! Every user turn yields exactly one assistant turn. Search results may carry
//! a fact in the same turn; execution facts are offered first and shown only
//! after a yes. A bypassed offer or feedback question is dropped and the
//! utterance is handled as if it had arrived in the underlying phase.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::intent::{parse_intent, Intent};
use crate::model::{word_count, CuratedFact, Task};
use crate::policy::{
    needs_permission, select_fact, select_task_fact, show_fact_at_step, FactIndex, Phase,
    PolicyError, PolicyParams, PolicyState, PolicyTrace, TraceOutcome,
};
use crate::store::Corpus;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EngineError {
    #[error("session has ended")]
    SessionEnded,
    #[error("utterance is empty")]
    EmptyUtterance,
    #[error("invalid policy: {0}")]
    Policy(#[from] PolicyError),
    #[error("unknown task `{0}`")]
    UnknownTask(String),
    #[error("replay diverged at turn {turn}")]
    ReplayDiverged { turn: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionPhase {
    Searching,
    AwaitingFactPermission,
    Executing,
    AwaitingFeedback,
    AwaitingRating,
    Ended,
}

impl std::fmt::Display for SessionPhase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let v = serde_json::to_value(self).expect("phase serializes");
        f.write_str(v.as_str().unwrap_or("?"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Speaker {
    User,
    Assistant,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FactEvent {
    Offered,
    Shown,
    Rejected,
    Liked,
    Disliked,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchResult {
    pub task_id: String,
    pub title: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepCard {
    pub task_id: String,
    /// 0-based.
    pub index: usize,
    pub total: usize,
    pub text: String,
}

/// Attribution travels with every displayed fact.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FactCard {
    pub fact_id: String,
    pub text: String,
    pub source_url: String,
    pub provider: String,
}

impl FactCard {
    fn from_fact(f: &CuratedFact) -> Self {
        Self {
            fact_id: f.id.clone(),
            text: f.text.clone(),
            source_url: f.source_url.clone(),
            provider: f.provider.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DisplayPayload {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<StepCard>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fact_card: Option<FactCard>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub results: Vec<SearchResult>,
}

impl DisplayPayload {
    fn is_empty(&self) -> bool {
        self.step.is_none() && self.fact_card.is_none() && self.results.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Turn {
    pub index: usize,
    pub speaker: Speaker,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub display_payload: Option<DisplayPayload>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intent: Option<Intent>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fact_event: Option<FactEvent>,
    /// Phase after this assistant turn.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase: Option<SessionPhase>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FactFeedback {
    pub fact_id: String,
    pub liked: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Session {
    pub id: String,
    pub phase: SessionPhase,
    pub current_task: Option<String>,
    pub current_step_index: usize,
    pub policy_state: PolicyState,
    pub turn_log: Vec<Turn>,
    pub pending_fact: Option<String>,
    pub rating: Option<u8>,
    pub fact_feedback: Vec<FactFeedback>,
    pub search_results: Vec<SearchResult>,
    pub traces: Vec<PolicyTrace>,
    pub completed: bool,
    /// Number of distinct steps presented so far.
    pub steps_reached: usize,
    return_phase: Option<SessionPhase>,
    feedback_fact: Option<String>,
    last_shown: Option<String>,
}

impl Session {
    pub fn user_utterances(&self) -> impl Iterator<Item = &str> {
        self.turn_log
            .iter()
            .filter(|t| t.speaker == Speaker::User)
            .map(|t| t.text.as_str())
    }

    pub fn is_ended(&self) -> bool {
        self.phase == SessionPhase::Ended
    }

    pub fn last_assistant_turn(&self) -> Option<&Turn> {
        self.turn_log
            .iter()
            .rev()
            .find(|t| t.speaker == Speaker::Assistant)
    }

    pub fn traces_for_turn(&self, index: usize) -> impl Iterator<Item = &PolicyTrace> {
        self.traces.iter().filter(move |t| t.turn_index == index)
    }
}

fn default_max_results() -> usize {
    3
}
fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EngineConfig {
    #[serde(default)]
    pub policy: PolicyParams,
    /// Control arm of an A/B test runs with this off.
    #[serde(default = "default_true")]
    pub facts_enabled: bool,
    #[serde(default = "default_max_results")]
    pub max_results: usize,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            policy: PolicyParams::default(),
            facts_enabled: true,
            max_results: default_max_results(),
        }
    }
}

/// Shared, immutable engine. Sessions are owned by callers.
#[derive(Debug, Clone)]
pub struct Engine {
    corpus: Arc<Corpus>,
    facts: Arc<FactIndex>,
    config: EngineConfig,
}

/// Words dropped from search queries before title matching.
const QUERY_FILLER: &[&str] = &[
    "a", "an", "the", "recipe", "recipes", "for", "some", "me", "how", "to", "make", "i", "want",
];

const CONTINUE_PROMPT: &str = "Say next when you're ready to continue.";
const RATING_QUESTION: &str = "How would you rate this conversation on a scale from 1 to 5?";
const FEEDBACK_QUESTION: &str = "By the way, did you find that fact interesting?";

fn fact_sentence(f: &CuratedFact) -> String {
    format!("Here's an interesting fact from {}: {}", f.provider, f.text)
}

fn offer_sentence(f: &CuratedFact) -> String {
    format!("Would you like to hear an interesting fact about {}?", f.entity.name)
}

fn join(parts: &[&str]) -> String {
    parts
        .iter()
        .filter(|p| !p.is_empty())
        .copied()
        .collect::<Vec<_>>()
        .join(" ")
}

struct Reply {
    text: String,
    display: DisplayPayload,
    fact_event: Option<FactEvent>,
}

impl Reply {
    fn text(text: impl Into<String>) -> Self {
        Self {
            text: text.into(),
            display: DisplayPayload::default(),
            fact_event: None,
        }
    }
}

impl Engine {
    pub fn new(corpus: Arc<Corpus>, facts: Arc<FactIndex>, config: EngineConfig) -> Result<Self, EngineError> {
        config.policy.validate()?;
        Ok(Self {
            corpus,
            facts,
            config,
        })
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn corpus(&self) -> &Corpus {
        &self.corpus
    }

    pub fn facts(&self) -> &FactIndex {
        &self.facts
    }

    /// Same corpus and facts, different configuration.
    pub fn with_config(&self, config: EngineConfig) -> Result<Self, EngineError> {
        Self::new(self.corpus.clone(), self.facts.clone(), config)
    }

    pub fn new_session(&self, id: impl Into<String>) -> Session {
        Session {
            id: id.into(),
            phase: SessionPhase::Searching,
            current_task: None,
            current_step_index: 0,
            policy_state: PolicyState::new(&self.config.policy),
            turn_log: Vec::new(),
            pending_fact: None,
            rating: None,
            fact_feedback: Vec::new(),
            search_results: Vec::new(),
            traces: Vec::new(),
            completed: false,
            steps_reached: 0,
            return_phase: None,
            feedback_fact: None,
            last_shown: None,
        }
    }

    /// Title search: exact title first, then titles containing every query
    /// keyword, in corpus order. At most `max_results`.
    pub fn search(&self, query: &str) -> Vec<&Task> {
        let q = query.trim().to_lowercase();
        let mut keywords: Vec<&str> = q
            .split_whitespace()
            .filter(|w| !QUERY_FILLER.contains(w))
            .collect();
        if keywords.is_empty() {
            keywords = q.split_whitespace().collect();
        }
        if keywords.is_empty() {
            return Vec::new();
        }
        let keyword_hit = |title: &str, k: &str| {
            title.contains(k)
                || k.strip_suffix("es").is_some_and(|s| s.len() > 2 && title.contains(s))
                || k.strip_suffix('s').is_some_and(|s| s.len() > 2 && title.contains(s))
        };
        let mut hits: Vec<(u8, usize, &Task)> = self
            .corpus
            .tasks
            .iter()
            .enumerate()
            .filter_map(|(i, t)| {
                let title = t.title.to_lowercase();
                if title == q {
                    Some((0, i, t))
                } else if keywords.iter().all(|k| keyword_hit(&title, k)) {
                    Some((1, i, t))
                } else {
                    None
                }
            })
            .collect();
        hits.sort_by_key(|(rank, i, _)| (*rank, *i));
        hits.into_iter()
            .take(self.config.max_results)
            .map(|(_, _, t)| t)
            .collect()
    }

    fn task(&self, id: &str) -> Result<&Task, EngineError> {
        self.corpus
            .task(id)
            .ok_or_else(|| EngineError::UnknownTask(id.to_string()))
    }

    /// Processes one user utterance and appends the user and assistant turns.
    pub fn handle_turn(&self, session: &mut Session, utterance: &str) -> Result<Turn, EngineError> {
        if session.is_ended() {
            return Err(EngineError::SessionEnded);
        }
        if utterance.trim().is_empty() {
            return Err(EngineError::EmptyUtterance);
        }
        let intent = parse_intent(utterance, session.phase, &session.search_results);
        let user_index = session.turn_log.len();
        let assistant_index = user_index + 1;
        session.turn_log.push(Turn {
            index: user_index,
            speaker: Speaker::User,
            text: utterance.trim().to_string(),
            display_payload: None,
            intent: Some(intent.clone()),
            fact_event: None,
            phase: None,
        });

        let reply = self.dispatch(session, intent, assistant_index)?;
        session.policy_state.end_turn();

        let turn = Turn {
            index: assistant_index,
            speaker: Speaker::Assistant,
            text: reply.text,
            display_payload: (!reply.display.is_empty()).then_some(reply.display),
            intent: None,
            fact_event: reply.fact_event,
            phase: Some(session.phase),
        };
        session.turn_log.push(turn.clone());
        Ok(turn)
    }

    /// Rebuilds a session by feeding its user utterances through the engine.
    pub fn replay<'a, I>(&self, id: &str, utterances: I) -> Result<Session, EngineError>
    where
        I: IntoIterator<Item = &'a str>,
    {
        let mut session = self.new_session(id);
        for u in utterances {
            self.handle_turn(&mut session, u)?;
        }
        Ok(session)
    }

    fn dispatch(&self, s: &mut Session, intent: Intent, turn: usize) -> Result<Reply, EngineError> {
        match s.phase {
            SessionPhase::Searching => self.on_searching(s, intent, turn),
            SessionPhase::Executing => self.on_executing(s, intent, turn),
            SessionPhase::AwaitingFactPermission => self.on_permission(s, intent, turn),
            SessionPhase::AwaitingFeedback => self.on_feedback(s, intent, turn),
            SessionPhase::AwaitingRating => Ok(self.on_rating(s, intent)),
            SessionPhase::Ended => Err(EngineError::SessionEnded),
        }
    }

    fn on_searching(&self, s: &mut Session, intent: Intent, turn: usize) -> Result<Reply, EngineError> {
        match intent {
            Intent::Search(query) => self.present_results(s, &query, turn),
            Intent::Select(task_id) => self.start_task(s, &task_id, turn),
            Intent::Exit => Ok(self.ask_rating(s, "Okay, let's stop here. Before you go:")),
            _ => {
                let hint = if s.search_results.is_empty() {
                    "Sorry, I didn't catch that. You can say something like \"find pancakes\"."
                } else {
                    "Sorry, I didn't catch that. Pick a recipe by number, or search for something else."
                };
                Ok(Reply::text(hint))
            }
        }
    }

    fn on_executing(&self, s: &mut Session, intent: Intent, turn: usize) -> Result<Reply, EngineError> {
        match intent {
            Intent::NextStep | Intent::Yes => self.advance(s, turn),
            Intent::Exit => Ok(self.ask_rating(s, "Okay, let's stop here. Before you go:")),
            Intent::Search(_) => {
                let title = self.task(s.current_task.as_deref().unwrap_or_default())?.title.clone();
                Ok(Reply::text(format!(
                    "We're in the middle of {title}. Say next to continue, or stop to end."
                )))
            }
            _ => Ok(Reply::text(
                "Sorry, I didn't catch that. Say next to continue, or stop to end.",
            )),
        }
    }

    fn on_permission(&self, s: &mut Session, intent: Intent, turn: usize) -> Result<Reply, EngineError> {
        let back = s.return_phase.take().unwrap_or(SessionPhase::Executing);
        let pending = s.pending_fact.take();
        s.phase = back;
        match (intent, pending) {
            (Intent::Yes, Some(fact_id)) => {
                let fact = self
                    .facts
                    .get(&fact_id)
                    .expect("pending fact comes from the index");
                self.record_shown(s, fact)?;
                let text = if back == SessionPhase::Searching {
                    fact_sentence(fact)
                } else {
                    join(&[&fact_sentence(fact), CONTINUE_PROMPT])
                };
                Ok(Reply {
                    text,
                    display: DisplayPayload {
                        fact_card: Some(FactCard::from_fact(fact)),
                        ..Default::default()
                    },
                    fact_event: Some(FactEvent::Shown),
                })
            }
            (Intent::No, Some(_)) => {
                s.policy_state.handle_fact_rejection();
                let text = if back == SessionPhase::Searching {
                    "No problem. Which recipe would you like to make?"
                } else {
                    "No problem. Say next when you're ready to continue."
                };
                Ok(Reply {
                    fact_event: Some(FactEvent::Rejected),
                    ..Reply::text(text)
                })
            }
            (other, _) => self.dispatch(s, other, turn),
        }
    }

    fn on_feedback(&self, s: &mut Session, intent: Intent, turn: usize) -> Result<Reply, EngineError> {
        s.phase = SessionPhase::Executing;
        let liked = match intent {
            Intent::FeedbackAnswer(liked) => liked,
            Intent::Yes => true,
            Intent::No => false,
            other => {
                s.feedback_fact = None;
                return self.dispatch(s, other, turn);
            }
        };
        if let Some(fact_id) = s.feedback_fact.take() {
            s.fact_feedback.push(FactFeedback { fact_id, liked });
        }
        let (text, event) = if liked {
            ("Thanks, glad you liked it!", FactEvent::Liked)
        } else {
            ("Thanks for letting me know.", FactEvent::Disliked)
        };
        Ok(Reply {
            fact_event: Some(event),
            ..Reply::text(join(&[text, CONTINUE_PROMPT]))
        })
    }

    fn on_rating(&self, s: &mut Session, intent: Intent) -> Reply {
        match intent {
            Intent::Rate(n) => {
                s.rating = Some(n);
                s.phase = SessionPhase::Ended;
                Reply::text("Thanks for your rating. Goodbye!")
            }
            Intent::Exit | Intent::No => {
                s.phase = SessionPhase::Ended;
                Reply::text("Okay, goodbye!")
            }
            _ => Reply::text("Please rate this conversation with a number from 1 to 5, or say stop."),
        }
    }

    fn ask_rating(&self, s: &mut Session, lead: &str) -> Reply {
        s.phase = SessionPhase::AwaitingRating;
        Reply::text(join(&[lead, RATING_QUESTION]))
    }

    fn record_shown(&self, s: &mut Session, fact: &CuratedFact) -> Result<(), EngineError> {
        s.policy_state.record_fact_shown(&fact.id)?;
        s.last_shown = Some(fact.id.clone());
        Ok(())
    }

    fn trace(&self, s: &mut Session, turn: usize, phase: Phase, fact: Option<&CuratedFact>, decision: crate::policy::ShowDecision, outcome: TraceOutcome) {
        s.traces.push(PolicyTrace {
            turn_index: turn,
            phase,
            fact_id: fact.map(|f| f.id.clone()),
            decision,
            needs_permission: needs_permission(phase, &self.config.policy),
            outcome,
            facts_shown_count: s.policy_state.facts_shown_count,
            effective_max_facts: s.policy_state.effective_max_facts,
            turns_since_last_fact: s.policy_state.turns_since_last_fact,
        });
    }

    fn present_results(&self, s: &mut Session, query: &str, turn: usize) -> Result<Reply, EngineError> {
        let tasks = self.search(query);
        s.search_results = tasks
            .iter()
            .map(|t| SearchResult {
                task_id: t.id.clone(),
                title: t.title.clone(),
            })
            .collect();
        if tasks.is_empty() {
            return Ok(Reply::text(format!(
                "Sorry, I couldn't find any recipes for \"{query}\". Try searching for something else."
            )));
        }
        let listing = s
            .search_results
            .iter()
            .enumerate()
            .map(|(i, r)| format!("{}. {}", i + 1, r.title))
            .collect::<Vec<_>>()
            .join("; ");
        let noun = if tasks.len() == 1 { "recipe" } else { "recipes" };
        let info = format!("I found {} {noun} for \"{query}\": {listing}.", tasks.len());
        let question = "Which one would you like to make?";
        let mut reply = Reply {
            text: join(&[&info, question]),
            display: DisplayPayload {
                results: s.search_results.clone(),
                ..Default::default()
            },
            fact_event: None,
        };

        if !self.config.facts_enabled {
            return Ok(reply);
        }
        let top = s.search_results[0].task_id.clone();
        let fact = select_task_fact(&top, &self.facts, &s.policy_state.shown_fact_ids);
        let ask = needs_permission(Phase::Search, &self.config.policy);
        let prospective = match fact {
            Some(f) if ask => word_count(&fact_sentence(f)),
            Some(f) => word_count(&join(&[&info, &fact_sentence(f), question])),
            None => word_count(&reply.text),
        };
        let decision = show_fact_at_step(
            &s.policy_state,
            &self.config.policy,
            fact.is_some(),
            prospective,
            Phase::Search,
        );
        let Some(fact) = fact.filter(|_| decision.show) else {
            let outcome = if fact.is_some() { TraceOutcome::Suppressed } else { TraceOutcome::NoFact };
            self.trace(s, turn, Phase::Search, fact, decision, outcome);
            return Ok(reply);
        };
        if ask {
            s.pending_fact = Some(fact.id.clone());
            s.return_phase = Some(SessionPhase::Searching);
            s.phase = SessionPhase::AwaitingFactPermission;
            reply.text = join(&[&info, &offer_sentence(fact)]);
            reply.fact_event = Some(FactEvent::Offered);
            self.trace(s, turn, Phase::Search, Some(fact), decision, TraceOutcome::Offered);
        } else {
            self.record_shown(s, fact)?;
            reply.text = join(&[&info, &fact_sentence(fact), question]);
            reply.display.fact_card = Some(FactCard::from_fact(fact));
            reply.fact_event = Some(FactEvent::Shown);
            self.trace(s, turn, Phase::Search, Some(fact), decision, TraceOutcome::Shown);
        }
        Ok(reply)
    }

    fn start_task(&self, s: &mut Session, task_id: &str, turn: usize) -> Result<Reply, EngineError> {
        let task = self.task(task_id)?;
        s.current_task = Some(task.id.clone());
        s.current_step_index = 0;
        s.phase = SessionPhase::Executing;
        let lead = format!(
            "Great choice! Let's make {}. There are {} steps.",
            task.title,
            task.steps.len()
        );
        self.present_step(s, &lead, turn)
    }

    fn advance(&self, s: &mut Session, turn: usize) -> Result<Reply, EngineError> {
        let task = self.task(s.current_task.as_deref().unwrap_or_default())?;
        if s.current_step_index + 1 >= task.steps.len() {
            s.completed = true;
            let lead = format!("You've completed {}! Well done.", task.title);
            return Ok(self.ask_rating(s, &lead));
        }
        s.current_step_index += 1;
        self.present_step(s, "", turn)
    }

    fn present_step(&self, s: &mut Session, lead: &str, turn: usize) -> Result<Reply, EngineError> {
        let task = self.task(s.current_task.as_deref().unwrap_or_default())?;
        let index = s.current_step_index;
        let step = &task.steps[index];
        s.steps_reached = s.steps_reached.max(index + 1);
        let step_text = format!("Step {} of {}: {}", index + 1, task.steps.len(), step.text);
        let mut reply = Reply {
            text: join(&[lead, &step_text]),
            display: DisplayPayload {
                step: Some(StepCard {
                    task_id: task.id.clone(),
                    index,
                    total: task.steps.len(),
                    text: step.text.clone(),
                }),
                ..Default::default()
            },
            fact_event: None,
        };

        let feedback_due = s.policy_state.should_seek_feedback();
        if !self.config.facts_enabled {
            return Ok(reply);
        }

        let step_ref = task.step_ref(index);
        let fact = select_fact(&step_ref, &self.facts, &s.policy_state.shown_fact_ids);
        let ask = needs_permission(Phase::Execution, &self.config.policy);
        let base = reply.text.clone();
        let prospective = match fact {
            Some(f) if ask => word_count(&join(&[&fact_sentence(f), CONTINUE_PROMPT])),
            Some(f) => word_count(&join(&[&base, &fact_sentence(f)])),
            None => word_count(&base),
        };
        let decision = show_fact_at_step(
            &s.policy_state,
            &self.config.policy,
            fact.is_some(),
            prospective,
            Phase::Execution,
        );

        if feedback_due {
            s.policy_state.mark_feedback_sought();
            s.feedback_fact = s.last_shown.clone();
            s.phase = SessionPhase::AwaitingFeedback;
            reply.text = join(&[&base, FEEDBACK_QUESTION]);
            let outcome = match fact {
                Some(_) if decision.show => TraceOutcome::Deferred,
                Some(_) => TraceOutcome::Suppressed,
                None => TraceOutcome::NoFact,
            };
            self.trace(s, turn, Phase::Execution, fact, decision, outcome);
            return Ok(reply);
        }

        let Some(fact) = fact.filter(|_| decision.show) else {
            let outcome = if fact.is_some() { TraceOutcome::Suppressed } else { TraceOutcome::NoFact };
            self.trace(s, turn, Phase::Execution, fact, decision, outcome);
            return Ok(reply);
        };
        if ask {
            s.pending_fact = Some(fact.id.clone());
            s.return_phase = Some(SessionPhase::Executing);
            s.phase = SessionPhase::AwaitingFactPermission;
            reply.text = join(&[&base, &offer_sentence(fact)]);
            reply.fact_event = Some(FactEvent::Offered);
            self.trace(s, turn, Phase::Execution, Some(fact), decision, TraceOutcome::Offered);
        } else {
            self.record_shown(s, fact)?;
            reply.text = join(&[&base, &fact_sentence(fact)]);
            reply.display.fact_card = Some(FactCard::from_fact(fact));
            reply.fact_event = Some(FactEvent::Shown);
            self.trace(s, turn, Phase::Execution, Some(fact), decision, TraceOutcome::Shown);
        }
        Ok(reply)
    }
}
