//! Greedy near-duplicate filtering on embedding cosine similarity.
//!
//! Facts are visited best-first (score descending, id ascending). A fact is
//! kept iff its cosine similarity to every fact kept so far is strictly below
//! the threshold. So no kept pair reaches the threshold, and the top-ranked
//! fact always survives.

use thiserror::Error;

use crate::exec::Exec;
use crate::model::CuratedFact;

pub const DEFAULT_SIMILARITY_THRESHOLD: f64 = 0.85;

// Below this many kept facts a parallel scan costs more than it saves.
const PARALLEL_SCAN_MIN: usize = 512;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DedupError {
    #[error("fact `{0}` has no embedding")]
    MissingEmbedding(String),
    #[error("fact `{0}` has a zero-norm embedding; cosine is undefined")]
    ZeroVector(String),
    #[error("fact `{id}` embedding has dimension {found}, expected {expected}")]
    DimensionMismatch {
        id: String,
        expected: usize,
        found: usize,
    },
    #[error("similarity threshold {0} is outside (0, 1]")]
    BadThreshold(f64),
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (na * nb)
}

fn unit(v: &[f64]) -> Option<Vec<f64>> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 || !norm.is_finite() {
        return None;
    }
    Some(v.iter().map(|x| x / norm).collect())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Returns the retained facts in rank order.
pub fn dedup_facts(
    facts: &[CuratedFact],
    threshold: f64,
    exec: Exec,
) -> Result<Vec<CuratedFact>, DedupError> {
    let keep = dedup_indices(facts, threshold, exec)?;
    Ok(keep.into_iter().map(|i| facts[i].clone()).collect())
}

/// Indices (into `facts`) of the retained facts, in rank order.
pub fn dedup_indices(
    facts: &[CuratedFact],
    threshold: f64,
    exec: Exec,
) -> Result<Vec<usize>, DedupError> {
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(DedupError::BadThreshold(threshold));
    }
    let Some(first) = facts.first() else {
        return Ok(Vec::new());
    };
    let dim = first
        .embedding
        .as_ref()
        .ok_or_else(|| DedupError::MissingEmbedding(first.id.clone()))?
        .len();

    let units = exec
        .map(facts, |f| {
            let emb = f
                .embedding
                .as_ref()
                .ok_or_else(|| DedupError::MissingEmbedding(f.id.clone()))?;
            if emb.len() != dim {
                return Err(DedupError::DimensionMismatch {
                    id: f.id.clone(),
                    expected: dim,
                    found: emb.len(),
                });
            }
            unit(emb).ok_or_else(|| DedupError::ZeroVector(f.id.clone()))
        })
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;

    let mut order: Vec<usize> = (0..facts.len()).collect();
    order.sort_by(|&a, &b| CuratedFact::rank_cmp(&facts[a], &facts[b]));

    let mut kept: Vec<usize> = Vec::new();
    let mut kept_units: Vec<&[f64]> = Vec::new();
    for idx in order {
        let v = units[idx].as_slice();
        let scan = if kept_units.len() >= PARALLEL_SCAN_MIN { exec } else { Exec::Sequential };
        let clash = scan.any(&kept_units, |k| dot(k, v) >= threshold);
        if !clash {
            kept.push(idx);
            kept_units.push(v);
        }
    }
    Ok(kept)
}
