//! Simulated users driving the real conversation engine.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::seed::{stream_rng, Stream};
use crate::engine::{Engine, EngineError, SessionOutcome, SessionPhase, Turn};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid user model: {0}")]
    Model(String),
    #[error("n_per_arm must be at least 2 (got {0})")]
    TooFewSessions(usize),
    #[error("corpus has no tasks")]
    EmptyCorpus,
    #[error("engine: {0}")]
    Engine(#[from] EngineError),
    #[error("simulated session {index} did not end within {limit} turns")]
    Runaway { index: usize, limit: usize },
}

/// Behavioural parameters of a simulated user population.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct UserModel {
    pub p_accept_fact: f64,
    pub p_like_fact: f64,
    /// Chance of abandoning at each presented step.
    pub base_abandon_hazard: f64,
    /// Hazard multiplier for `relief_window_k` steps after a liked fact.
    pub fact_engagement_relief: f64,
    pub relief_window_k: u32,
    pub base_rating_mean: f64,
    pub rating_boost_per_liked_fact: f64,
    #[serde(default = "default_rating_noise")]
    pub rating_noise_sd: f64,
    #[serde(default)]
    pub repeat: RepeatUsers,
}

fn default_rating_noise() -> f64 {
    0.8
}

/// Naive cross-session return model. Off by default.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RepeatUsers {
    pub enabled: bool,
    pub base_return_prob: f64,
    pub return_boost_per_liked_fact: f64,
}

impl UserModel {
    /// Synthetic reference population, tuned so that a facts-on arm shows
    /// clearly longer sessions, higher ratings and slightly higher
    /// completion than a facts-off arm. Not fitted to any real traffic.
    pub fn reference() -> Self {
        Self {
            p_accept_fact: 0.8,
            p_like_fact: 0.66,
            base_abandon_hazard: 0.12,
            fact_engagement_relief: 0.5,
            relief_window_k: 1,
            base_rating_mean: 2.6,
            rating_boost_per_liked_fact: 1.6,
            rating_noise_sd: 0.8,
            repeat: RepeatUsers {
                enabled: false,
                base_return_prob: 0.3,
                return_boost_per_liked_fact: 0.05,
            },
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let prob = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(SimError::Model(format!("{name} must be in [0, 1], got {v}")))
            }
        };
        prob("p_accept_fact", self.p_accept_fact)?;
        prob("p_like_fact", self.p_like_fact)?;
        prob("base_abandon_hazard", self.base_abandon_hazard)?;
        if !(self.fact_engagement_relief > 0.0 && self.fact_engagement_relief <= 1.0) {
            return Err(SimError::Model(format!(
                "fact_engagement_relief must be in (0, 1], got {}",
                self.fact_engagement_relief
            )));
        }
        if !(1.0..=5.0).contains(&self.base_rating_mean) {
            return Err(SimError::Model("base_rating_mean must be in [1, 5]".into()));
        }
        if !(0.0..).contains(&self.rating_boost_per_liked_fact) || !(0.0..).contains(&self.rating_noise_sd) {
            return Err(SimError::Model("rating boost and noise must be non-negative".into()));
        }
        if self.repeat.enabled {
            prob("base_return_prob", self.repeat.base_return_prob)?;
            if !(0.0..).contains(&self.repeat.return_boost_per_liked_fact) {
                return Err(SimError::Model("return boost must be non-negative".into()));
            }
        }
        Ok(())
    }

    /// Hazard at the next step given how many relieved steps remain.
    pub fn hazard(&self, relief_left: u32) -> f64 {
        if relief_left > 0 {
            self.base_abandon_hazard * self.fact_engagement_relief
        } else {
            self.base_abandon_hazard
        }
    }
}

impl Default for UserModel {
    fn default() -> Self {
        Self::reference()
    }
}

/// One simulated session plus whether the user came back afterwards.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulatedSession {
    pub outcome: SessionOutcome,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub returned: Option<bool>,
}

/// Hard stop against engine bugs; real sessions need about 3 turns per step.
const TURN_LIMIT_PER_STEP: usize = 6;

/// Runs one scripted user against `engine` on `task_id`. Deterministic in
/// `(model, engine config, task, seed)`.
pub fn simulate_session(
    model: &UserModel,
    engine: &Engine,
    task_id: &str,
    seed: u64,
) -> Result<SimulatedSession, SimError> {
    model.validate()?;
    let task = engine
        .corpus()
        .task(task_id)
        .ok_or_else(|| EngineError::UnknownTask(task_id.to_string()))?;
    let mut abandon_rng = stream_rng(seed, Stream::Abandon);
    let mut reaction_rng = stream_rng(seed, Stream::FactReaction);
    let mut rating_rng = stream_rng(seed, Stream::Rating);

    let mut session = engine.new_session(format!("sim-{seed:016x}"));
    let limit = 8 + TURN_LIMIT_PER_STEP * task.steps.len();
    let mut relief_left = 0u32;
    let mut step_pending = false;

    let mut reply: Turn = engine.handle_turn(&mut session, &format!("find {}", task.title))?;
    let first = reply.display_payload.as_ref().map(|d| d.results.first());
    if first.flatten().map(|r| r.task_id.as_str()) != Some(task_id) {
        return Err(SimError::Engine(EngineError::UnknownTask(task_id.to_string())));
    }

    while !session.is_ended() {
        if session.turn_log.len() / 2 > limit {
            return Err(SimError::Runaway { index: 0, limit });
        }
        if reply.display_payload.as_ref().is_some_and(|d| d.step.is_some()) {
            step_pending = true;
        }
        let utterance: String = match session.phase {
            SessionPhase::Searching => "the first one".into(),
            SessionPhase::AwaitingFactPermission => {
                if reaction_rng.random::<f64>() < model.p_accept_fact {
                    "yes".into()
                } else {
                    "no".into()
                }
            }
            SessionPhase::AwaitingFeedback => {
                if reaction_rng.random::<f64>() < model.p_like_fact {
                    relief_left = model.relief_window_k;
                    "yes".into()
                } else {
                    "no".into()
                }
            }
            SessionPhase::Executing => {
                if step_pending {
                    step_pending = false;
                    let h = model.hazard(relief_left);
                    relief_left = relief_left.saturating_sub(1);
                    if abandon_rng.random::<f64>() < h {
                        "stop".into()
                    } else {
                        "next".into()
                    }
                } else {
                    "next".into()
                }
            }
            SessionPhase::AwaitingRating => {
                let liked = session.fact_feedback.iter().filter(|f| f.liked).count() as f64;
                let noise = if model.rating_noise_sd > 0.0 {
                    Normal::new(0.0, model.rating_noise_sd)
                        .expect("sd validated")
                        .sample(&mut rating_rng)
                } else {
                    0.0
                };
                let raw = model.base_rating_mean + model.rating_boost_per_liked_fact * liked + noise;
                format!("rate {}", raw.round().clamp(1.0, 5.0) as u8)
            }
            SessionPhase::Ended => unreachable!("loop guard"),
        };
        reply = engine.handle_turn(&mut session, &utterance)?;
    }

    let outcome = engine.complete_session(&session);
    let returned = model.repeat.enabled.then(|| {
        let p = (model.repeat.base_return_prob
            + model.repeat.return_boost_per_liked_fact * outcome.facts_liked as f64)
            .clamp(0.0, 1.0);
        stream_rng(seed, Stream::Return).random::<f64>() < p
    });
    Ok(SimulatedSession { outcome, returned })
}
