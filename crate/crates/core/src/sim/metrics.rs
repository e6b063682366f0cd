//! Engagement metrics and Welch's two-sample t-test.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};
use thiserror::Error;

use crate::engine::SessionOutcome;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MetricsError {
    #[error("no sessions to summarize")]
    Empty,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub n_sessions: usize,
    /// Mean user/assistant pairs per session, fact turns included.
    pub mean_turns: f64,
    pub completion_rate: f64,
    /// Over sessions that left a rating; `None` if none did.
    pub mean_rating: Option<f64>,
    pub rated_sessions: usize,
    /// Liked over answered feedback questions.
    pub fact_like_rate: Option<f64>,
    pub mean_facts_shown: f64,
    /// Share of distinct users with more than one session, when ids exist.
    pub repeat_user_rate: Option<f64>,
}

fn mean(xs: impl ExactSizeIterator<Item = f64>) -> f64 {
    let n = xs.len();
    xs.sum::<f64>() / n as f64
}

pub fn compute_metrics(sessions: &[SessionOutcome]) -> Result<Metrics, MetricsError> {
    if sessions.is_empty() {
        return Err(MetricsError::Empty);
    }
    let ratings: Vec<f64> = sessions.iter().filter_map(|s| s.rating).map(f64::from).collect();
    let liked: usize = sessions.iter().map(|s| s.facts_liked).sum();
    let answered: usize = liked + sessions.iter().map(|s| s.facts_disliked).sum::<usize>();

    let mut per_user: BTreeMap<&str, usize> = BTreeMap::new();
    for s in sessions {
        if let Some(u) = &s.user_id {
            *per_user.entry(u).or_default() += 1;
        }
    }
    let repeat_user_rate = (!per_user.is_empty()).then(|| {
        per_user.values().filter(|&&c| c > 1).count() as f64 / per_user.len() as f64
    });

    Ok(Metrics {
        n_sessions: sessions.len(),
        mean_turns: mean(sessions.iter().map(|s| s.turn_count as f64)),
        completion_rate: sessions.iter().filter(|s| s.completed).count() as f64 / sessions.len() as f64,
        mean_rating: (!ratings.is_empty()).then(|| mean(ratings.iter().copied())),
        rated_sessions: ratings.len(),
        fact_like_rate: (answered > 0).then(|| liked as f64 / answered as f64),
        mean_facts_shown: mean(sessions.iter().map(|s| s.facts_shown as f64)),
        repeat_user_rate,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WelchTest {
    pub mean_a: f64,
    pub mean_b: f64,
    pub t: f64,
    pub df: f64,
    /// Two-sided.
    pub p_value: f64,
}

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, v)
}

/// Welch's unequal-variance t-test of `b` against `a`. Both samples need at
/// least two values; returns `None` otherwise.
pub fn welch_t_test(a: &[f64], b: &[f64]) -> Option<WelchTest> {
    if a.len() < 2 || b.len() < 2 {
        return None;
    }
    let (ma, va) = mean_var(a);
    let (mb, vb) = mean_var(b);
    let (sa, sb) = (va / a.len() as f64, vb / b.len() as f64);
    let se2 = sa + sb;
    if se2 == 0.0 {
        // Both samples constant: the difference is either exact or absent.
        let p = if ma == mb { 1.0 } else { 0.0 };
        let t = if ma == mb { 0.0 } else { f64::INFINITY.copysign(mb - ma) };
        return Some(WelchTest { mean_a: ma, mean_b: mb, t, df: f64::INFINITY, p_value: p });
    }
    let t = (mb - ma) / se2.sqrt();
    let df = se2.powi(2)
        / (sa.powi(2) / (a.len() as f64 - 1.0) + sb.powi(2) / (b.len() as f64 - 1.0));
    let dist = StudentsT::new(0.0, 1.0, df).expect("df is positive");
    let p_value = (2.0 * dist.sf(t.abs())).clamp(0.0, 1.0);
    Some(WelchTest { mean_a: ma, mean_b: mb, t, df, p_value })
}
