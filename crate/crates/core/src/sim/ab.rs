//! Two-arm A/B runs: facts off (control) against facts on (treatment).

use std::fmt::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::metrics::{compute_metrics, welch_t_test, Metrics, WelchTest};
use super::seed::{session_seed, stream_rng, Stream};
use super::user::{simulate_session, SimError, SimulatedSession, UserModel};
use crate::engine::{Engine, EngineConfig};
use crate::exec::Exec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Arm {
    Control,
    Treatment,
}

impl Arm {
    pub fn facts_enabled(self) -> bool {
        self == Arm::Treatment
    }

    pub fn name(self) -> &'static str {
        match self {
            Arm::Control => "control",
            Arm::Treatment => "treatment",
        }
    }
}

impl std::str::FromStr for Arm {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim() {
            "control" => Ok(Arm::Control),
            "treatment" => Ok(Arm::Treatment),
            other => Err(format!("unknown arm `{other}` (expected control or treatment)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmReport {
    pub arm: Arm,
    pub metrics: Metrics,
    pub sessions: Vec<SimulatedSession>,
}

/// Relative change, treatment against control.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Deltas {
    pub turns: f64,
    pub completion: f64,
    pub rating: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Significance {
    pub turns: WelchTest,
    pub rating: Option<WelchTest>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbReport {
    pub base_seed: u64,
    pub n_per_arm: usize,
    pub model: UserModel,
    pub control: ArmReport,
    pub treatment: ArmReport,
    pub deltas: Deltas,
    pub significance: Significance,
}

fn rel(control: f64, treatment: f64) -> f64 {
    (treatment - control) / control
}

/// Picks the task for session `index`; shared by both arms.
pub fn task_for_session(engine: &Engine, base_seed: u64, index: usize) -> &str {
    let tasks = &engine.corpus().tasks;
    let i = stream_rng(session_seed(base_seed, index), Stream::TaskChoice).random_range(0..tasks.len());
    &tasks[i].id
}

/// Simulates `n` sessions for one arm. `engine` supplies corpus, facts and
/// policy; its fact switch is overridden by the arm.
pub fn run_arm(
    model: &UserModel,
    engine: &Engine,
    arm: Arm,
    n: usize,
    base_seed: u64,
    exec: Exec,
) -> Result<ArmReport, SimError> {
    model.validate()?;
    if engine.corpus().tasks.is_empty() {
        return Err(SimError::EmptyCorpus);
    }
    if n == 0 {
        return Err(SimError::TooFewSessions(0));
    }
    let engine = engine.with_config(EngineConfig {
        facts_enabled: arm.facts_enabled(),
        ..*engine.config()
    })?;
    let results = exec.map_range(n, |i| {
        let task = task_for_session(&engine, base_seed, i);
        simulate_session(model, &engine, task, session_seed(base_seed, i)).map_err(|e| match e {
            SimError::Runaway { limit, .. } => SimError::Runaway { index: i, limit },
            other => other,
        })
    });
    let mut sessions = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    assign_users(&mut sessions, arm);
    let outcomes: Vec<_> = sessions.iter().map(|s| s.outcome.clone()).collect();
    let metrics = compute_metrics(&outcomes).expect("n >= 1");
    Ok(ArmReport { arm, metrics, sessions })
}

/// Gives each session a user id; a user who returns owns the next session
/// too. Only active when the repeat-user model produced return draws.
fn assign_users(sessions: &mut [SimulatedSession], arm: Arm) {
    let mut user = 0usize;
    let mut carry = false;
    for (i, s) in sessions.iter_mut().enumerate() {
        let Some(returned) = s.returned else { continue };
        if !carry {
            user = i;
        }
        s.outcome.user_id = Some(format!("{}-u{user}", arm.name()));
        carry = returned;
    }
}

pub fn run_ab(
    model: &UserModel,
    engine: &Engine,
    n_per_arm: usize,
    base_seed: u64,
    exec: Exec,
) -> Result<AbReport, SimError> {
    if n_per_arm < 2 {
        return Err(SimError::TooFewSessions(n_per_arm));
    }
    let control = run_arm(model, engine, Arm::Control, n_per_arm, base_seed, exec)?;
    let treatment = run_arm(model, engine, Arm::Treatment, n_per_arm, base_seed, exec)?;
    AbReport::from_arms(model, base_seed, control, treatment)
}

impl AbReport {
    /// Compares two arm runs made with the same model and seed.
    pub fn from_arms(
        model: &UserModel,
        base_seed: u64,
        control: ArmReport,
        treatment: ArmReport,
    ) -> Result<Self, SimError> {
        let n_per_arm = control.sessions.len();
        if n_per_arm < 2 || treatment.sessions.len() < 2 {
            return Err(SimError::TooFewSessions(n_per_arm.min(treatment.sessions.len())));
        }
        let turns = |r: &ArmReport| -> Vec<f64> {
            r.sessions.iter().map(|s| s.outcome.turn_count as f64).collect()
        };
        let ratings = |r: &ArmReport| -> Vec<f64> {
            r.sessions.iter().filter_map(|s| s.outcome.rating).map(f64::from).collect()
        };
        let significance = Significance {
            turns: welch_t_test(&turns(&control), &turns(&treatment)).expect("n >= 2"),
            rating: welch_t_test(&ratings(&control), &ratings(&treatment)),
        };
        let (c, t) = (&control.metrics, &treatment.metrics);
        let deltas = Deltas {
            turns: rel(c.mean_turns, t.mean_turns),
            completion: rel(c.completion_rate, t.completion_rate),
            rating: c.mean_rating.zip(t.mean_rating).map(|(a, b)| rel(a, b)),
        };
        Ok(Self {
            base_seed,
            n_per_arm,
            model: *model,
            control,
            treatment,
            deltas,
            significance,
        })
    }
}

fn opt(v: Option<f64>, digits: usize) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.digits$}"))
}

fn pct(v: f64) -> String {
    if v.is_finite() {
        format!("{:+.1}%", v * 100.0)
    } else {
        "-".into()
    }
}

impl AbReport {
    /// Fixed-width summary for terminals.
    pub fn to_table(&self) -> String {
        let (c, t) = (&self.control.metrics, &self.treatment.metrics);
        let mut s = String::new();
        writeln!(s, "A/B simulation  seed={}  n={} per arm", self.base_seed, self.n_per_arm).unwrap();
        writeln!(s, "{:<18}{:>12}{:>12}{:>10}", "metric", "control", "treatment", "delta").unwrap();
        writeln!(
            s,
            "{:<18}{:>12.3}{:>12.3}{:>10}",
            "mean turns",
            c.mean_turns,
            t.mean_turns,
            pct(self.deltas.turns)
        )
        .unwrap();
        writeln!(
            s,
            "{:<18}{:>12.3}{:>12.3}{:>10}",
            "completion rate",
            c.completion_rate,
            t.completion_rate,
            pct(self.deltas.completion)
        )
        .unwrap();
        writeln!(
            s,
            "{:<18}{:>12}{:>12}{:>10}",
            "mean rating",
            opt(c.mean_rating, 3),
            opt(t.mean_rating, 3),
            self.deltas.rating.map_or("-".into(), pct)
        )
        .unwrap();
        writeln!(
            s,
            "{:<18}{:>12}{:>12}",
            "fact like rate",
            opt(c.fact_like_rate, 3),
            opt(t.fact_like_rate, 3)
        )
        .unwrap();
        writeln!(
            s,
            "{:<18}{:>12.3}{:>12.3}",
            "facts shown",
            c.mean_facts_shown,
            t.mean_facts_shown
        )
        .unwrap();
        if c.repeat_user_rate.is_some() || t.repeat_user_rate.is_some() {
            writeln!(
                s,
                "{:<18}{:>12}{:>12}",
                "repeat users",
                opt(c.repeat_user_rate, 3),
                opt(t.repeat_user_rate, 3)
            )
            .unwrap();
        }
        writeln!(s, "welch p (turns)   {:.3e}", self.significance.turns.p_value).unwrap();
        if let Some(r) = &self.significance.rating {
            writeln!(s, "welch p (rating)  {:.3e}", r.p_value).unwrap();
        }
        s
    }
}
