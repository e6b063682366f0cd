//! Domain types shared by curation, policy, engine and simulation.
//!
//! Everything here is a plain value type. Once a store or corpus is loaded it
//! is shared read-only (usually behind an `Arc`) across sessions.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Word count used everywhere a length is needed: whitespace-delimited tokens
/// after trimming, punctuation left attached.
pub fn word_count(text: &str) -> usize {
    text.split_whitespace().count()
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("entity name is empty")]
    EmptyEntityName,
    #[error("task `{0}` has no steps")]
    NoSteps(String),
    #[error("task `{0}` has an empty title")]
    EmptyTitle(String),
    #[error("task `{task}`: step at position {position} has index {index}")]
    StepIndexGap {
        task: String,
        position: usize,
        index: usize,
    },
    #[error("feature weights must be non-negative and sum to 1 (sum = {sum})")]
    BadWeights { sum: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntityType {
    Ingredient,
    Recipe,
    Tool,
}

impl fmt::Display for EntityType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EntityType::Ingredient => "ingredient",
            EntityType::Recipe => "recipe",
            EntityType::Tool => "tool",
        })
    }
}

/// A named ingredient, recipe or tool. Names are trimmed and lowercased on
/// construction; no stemming is applied.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Entity {
    pub name: String,
    pub entity_type: EntityType,
}

impl Entity {
    pub fn new(name: &str, entity_type: EntityType) -> Result<Self, ModelError> {
        let name = name.trim().to_lowercase();
        if name.is_empty() {
            return Err(ModelError::EmptyEntityName);
        }
        Ok(Self { name, entity_type })
    }

    pub fn ingredient(name: &str) -> Self {
        Self::new(name, EntityType::Ingredient).expect("non-empty entity name")
    }

    pub fn recipe(name: &str) -> Self {
        Self::new(name, EntityType::Recipe).expect("non-empty entity name")
    }

    pub fn tool(name: &str) -> Self {
        Self::new(name, EntityType::Tool).expect("non-empty entity name")
    }

    /// True when the name is already in canonical form.
    pub fn is_normalized(&self) -> bool {
        !self.name.is_empty() && self.name == self.name.trim().to_lowercase()
    }
}

impl fmt::Display for Entity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({})", self.name, self.entity_type)
    }
}

/// The four features that carry weight in the interestingness score.
/// Relevance is deliberately absent: it gates, it does not score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Feature {
    Novelty,
    Specificity,
    Conciseness,
    Informativeness,
}

impl Feature {
    /// Ranked order of annotator preference, most important first.
    pub const RANKED: [Feature; 4] = [
        Feature::Novelty,
        Feature::Specificity,
        Feature::Conciseness,
        Feature::Informativeness,
    ];
}

/// Per-feature binary annotations. Stored as raw integers so that corrupt
/// stores (e.g. a label of 2) still parse and can be reported by validation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct FeatureLabels {
    pub conciseness: u8,
    pub specificity: u8,
    pub novelty: u8,
    pub relevance: u8,
    pub informativeness: u8,
}

impl FeatureLabels {
    pub fn all(value: bool) -> Self {
        let v = u8::from(value);
        Self {
            conciseness: v,
            specificity: v,
            novelty: v,
            relevance: v,
            informativeness: v,
        }
    }

    pub fn get(&self, feature: Feature) -> u8 {
        match feature {
            Feature::Novelty => self.novelty,
            Feature::Specificity => self.specificity,
            Feature::Conciseness => self.conciseness,
            Feature::Informativeness => self.informativeness,
        }
    }

    pub fn set(&mut self, feature: Feature, value: bool) {
        let v = u8::from(value);
        match feature {
            Feature::Novelty => self.novelty = v,
            Feature::Specificity => self.specificity = v,
            Feature::Conciseness => self.conciseness = v,
            Feature::Informativeness => self.informativeness = v,
        }
    }

    pub fn is_binary(&self) -> bool {
        [
            self.conciseness,
            self.specificity,
            self.novelty,
            self.relevance,
            self.informativeness,
        ]
        .iter()
        .all(|&v| v <= 1)
    }

    pub fn is_relevant(&self) -> bool {
        self.relevance == 1
    }
}

/// Normalized importance weights over the four scored features.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureWeights {
    pub novelty: f64,
    pub specificity: f64,
    pub conciseness: f64,
    pub informativeness: f64,
}

pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-9;

impl FeatureWeights {
    pub fn new(
        novelty: f64,
        specificity: f64,
        conciseness: f64,
        informativeness: f64,
    ) -> Result<Self, ModelError> {
        let w = Self {
            novelty,
            specificity,
            conciseness,
            informativeness,
        };
        w.check()?;
        Ok(w)
    }

    pub fn uniform() -> Self {
        Self {
            novelty: 0.25,
            specificity: 0.25,
            conciseness: 0.25,
            informativeness: 0.25,
        }
    }

    pub fn get(&self, feature: Feature) -> f64 {
        match feature {
            Feature::Novelty => self.novelty,
            Feature::Specificity => self.specificity,
            Feature::Conciseness => self.conciseness,
            Feature::Informativeness => self.informativeness,
        }
    }

    pub fn sum(&self) -> f64 {
        Feature::RANKED.iter().map(|&f| self.get(f)).sum()
    }

    pub fn check(&self) -> Result<(), ModelError> {
        let sum = self.sum();
        let nonneg = Feature::RANKED
            .iter()
            .all(|&f| self.get(f) >= 0.0 && self.get(f).is_finite());
        if !nonneg || (sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
            return Err(ModelError::BadWeights { sum });
        }
        Ok(())
    }

    /// Weighted label sum. Does not look at relevance; callers gate on it.
    pub fn weighted_sum(&self, labels: &FeatureLabels) -> f64 {
        Feature::RANKED
            .iter()
            .map(|&f| self.get(f) * f64::from(labels.get(f)))
            .sum()
    }
}

/// Address of one step inside the corpus.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct StepRef {
    pub task: String,
    pub step: usize,
}

impl StepRef {
    pub fn new(task: impl Into<String>, step: usize) -> Self {
        Self {
            task: task.into(),
            step,
        }
    }
}

impl fmt::Display for StepRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}", self.task, self.step)
    }
}

/// One curated, sourced fact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CuratedFact {
    pub id: String,
    pub text: String,
    pub entity: Entity,
    pub source_url: String,
    pub provider: String,
    pub labels: FeatureLabels,
    pub score: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embedding: Option<Vec<f64>>,
    #[serde(default)]
    pub linked_step_ids: Vec<StepRef>,
    /// Annotators' overall interestingness verdict, kept alongside the
    /// schema score. Ranking uses `score` only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub overall_interesting: Option<bool>,
}

impl CuratedFact {
    pub fn word_count(&self) -> usize {
        word_count(&self.text)
    }

    /// Descending score, ascending id. Used wherever facts are ranked.
    pub fn rank_cmp(a: &CuratedFact, b: &CuratedFact) -> std::cmp::Ordering {
        b.score
            .partial_cmp(&a.score)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.id.cmp(&b.id))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskStep {
    pub index: usize,
    pub text: String,
    #[serde(default)]
    pub entities: Vec<Entity>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Task {
    pub id: String,
    pub title: String,
    pub steps: Vec<TaskStep>,
}

impl Task {
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.title.trim().is_empty() {
            return Err(ModelError::EmptyTitle(self.id.clone()));
        }
        if self.steps.is_empty() {
            return Err(ModelError::NoSteps(self.id.clone()));
        }
        for (position, step) in self.steps.iter().enumerate() {
            if step.index != position {
                return Err(ModelError::StepIndexGap {
                    task: self.id.clone(),
                    position,
                    index: step.index,
                });
            }
        }
        Ok(())
    }

    pub fn step_ref(&self, index: usize) -> StepRef {
        StepRef::new(self.id.clone(), index)
    }
}
