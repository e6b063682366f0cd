//! Per-session summary used by metrics and the service.

use serde::{Deserialize, Serialize};

use super::session::{Engine, FactEvent, Session, Speaker};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionOutcome {
    pub session_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub user_id: Option<String>,
    pub task_id: Option<String>,
    pub completed: bool,
    /// User/assistant pairs.
    pub turn_count: usize,
    pub steps_reached: usize,
    pub total_steps: usize,
    pub facts_shown: usize,
    pub facts_offered: usize,
    pub facts_rejected: usize,
    pub facts_liked: usize,
    pub facts_disliked: usize,
    pub rating: Option<u8>,
}

impl SessionOutcome {
    /// Liked over answered feedback questions; `None` when never asked.
    pub fn like_ratio(&self) -> Option<f64> {
        let answered = self.facts_liked + self.facts_disliked;
        (answered > 0).then(|| self.facts_liked as f64 / answered as f64)
    }
}

impl Engine {
    pub fn complete_session(&self, session: &Session) -> SessionOutcome {
        let count = |ev: FactEvent| {
            session
                .turn_log
                .iter()
                .filter(|t| t.speaker == Speaker::Assistant && t.fact_event == Some(ev))
                .count()
        };
        let total_steps = session
            .current_task
            .as_deref()
            .and_then(|id| self.corpus().task(id))
            .map_or(0, |t| t.steps.len());
        SessionOutcome {
            session_id: session.id.clone(),
            user_id: None,
            task_id: session.current_task.clone(),
            completed: session.completed,
            turn_count: session
                .turn_log
                .iter()
                .filter(|t| t.speaker == Speaker::Assistant)
                .count(),
            steps_reached: session.steps_reached,
            total_steps,
            facts_shown: session.policy_state.facts_shown_count as usize,
            facts_offered: count(FactEvent::Offered),
            facts_rejected: count(FactEvent::Rejected),
            facts_liked: session.fact_feedback.iter().filter(|f| f.liked).count(),
            facts_disliked: session.fact_feedback.iter().filter(|f| !f.liked).count(),
            rating: session.rating,
        }
    }
}
