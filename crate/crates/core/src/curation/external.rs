//! Externally supplied relevance scores and labels.
//!
//! One JSON object per line, keyed by candidate id and optionally by the
//! sentence index within that candidate:
//!
//! ```text
//! {"candidate_id":"c17","sentence":0,"relevance":0.91}
//! {"candidate_id":"c17","labels":{"novelty":1,"specificity":0,"informativeness":1}}
//! ```
//!
//! A sentence-specific record wins over a candidate-wide one.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::model::FeatureLabels;
use crate::store::FormatError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PartialLabels {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conciseness: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub specificity: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub novelty: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relevance: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub informativeness: Option<u8>,
}

impl PartialLabels {
    pub fn from_full(l: &FeatureLabels) -> Self {
        Self {
            conciseness: Some(l.conciseness),
            specificity: Some(l.specificity),
            novelty: Some(l.novelty),
            relevance: Some(l.relevance),
            informativeness: Some(l.informativeness),
        }
    }

    /// Fields set in `other` replace ours.
    pub fn overlay(self, other: &PartialLabels) -> Self {
        Self {
            conciseness: other.conciseness.or(self.conciseness),
            specificity: other.specificity.or(self.specificity),
            novelty: other.novelty.or(self.novelty),
            relevance: other.relevance.or(self.relevance),
            informativeness: other.informativeness.or(self.informativeness),
        }
    }

    pub fn complete(&self) -> Option<FeatureLabels> {
        Some(FeatureLabels {
            conciseness: self.conciseness?,
            specificity: self.specificity?,
            novelty: self.novelty?,
            relevance: self.relevance?,
            informativeness: self.informativeness?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExternalRecord {
    pub candidate_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sentence: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relevance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<PartialLabels>,
}

type Key = (String, Option<usize>);

#[derive(Debug, Clone, Default)]
pub struct ExternalAnnotations {
    relevance: HashMap<Key, f64>,
    labels: HashMap<Key, PartialLabels>,
}

impl ExternalAnnotations {
    pub fn is_empty(&self) -> bool {
        self.relevance.is_empty() && self.labels.is_empty()
    }

    pub fn insert(&mut self, record: ExternalRecord) {
        let key = (record.candidate_id, record.sentence);
        if let Some(score) = record.relevance {
            self.relevance.insert(key.clone(), score);
        }
        if let Some(labels) = record.labels {
            let merged = self
                .labels
                .get(&key)
                .copied()
                .unwrap_or_default()
                .overlay(&labels);
            self.labels.insert(key, merged);
        }
    }

    pub fn parse(text: &str) -> Result<Self, FormatError> {
        let mut out = Self::default();
        let lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty());
        for (ordinal, (i, line)) in lines.enumerate() {
            let de = &mut serde_json::Deserializer::from_str(line);
            let record: ExternalRecord =
                serde_path_to_error::deserialize(de).map_err(|e| FormatError::Record {
                    ordinal: ordinal + 1,
                    line: i + 1,
                    field: e.path().to_string(),
                    message: e.into_inner().to_string(),
                })?;
            out.insert(record);
        }
        Ok(out)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self, FormatError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| FormatError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    /// Merges another set; its entries win.
    pub fn extend(&mut self, other: ExternalAnnotations) {
        self.relevance.extend(other.relevance);
        for (k, v) in other.labels {
            let merged = self.labels.get(&k).copied().unwrap_or_default().overlay(&v);
            self.labels.insert(k, merged);
        }
    }

    pub fn relevance(&self, candidate_id: &str, sentence: usize) -> Option<f64> {
        self.relevance
            .get(&(candidate_id.to_string(), Some(sentence)))
            .or_else(|| self.relevance.get(&(candidate_id.to_string(), None)))
            .copied()
    }

    /// Candidate-wide labels overlaid with sentence-specific ones.
    pub fn labels(&self, candidate_id: &str, sentence: usize) -> Option<PartialLabels> {
        let wide = self.labels.get(&(candidate_id.to_string(), None));
        let specific = self.labels.get(&(candidate_id.to_string(), Some(sentence)));
        match (wide, specific) {
            (None, None) => None,
            (Some(w), None) => Some(*w),
            (None, Some(s)) => Some(*s),
            (Some(w), Some(s)) => Some(w.overlay(s)),
        }
    }
}
