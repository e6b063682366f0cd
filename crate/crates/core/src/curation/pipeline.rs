//! End-to-end curation: candidates in, validated and linked store out.
//!
//! Stage order per sentence is fixed:
//! split → relevance gate → entity match → label acquisition → score gate,
//! then dedup and linking run over the surviving set. Per-sentence work fans
//! out through [`Exec`]; counters are tallied afterwards from the collected
//! outcomes, so they do not depend on scheduling.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::dedup::{dedup_indices, DedupError, DEFAULT_SIMILARITY_THRESHOLD};
use super::entity_match::{AnnotatedToken, EntityMatcher};
use super::external::{ExternalAnnotations, PartialLabels};
use super::linking::link_facts_to_steps;
use super::relevance::{LexiconScorer, RelevanceError};
use super::scoring::{compute_feature_weights, score_interestingness, ImportanceCounts, ScoringError};
use super::sentences::{SentenceSplitter, DEFAULT_ABBREVIATIONS};
use crate::exec::Exec;
use crate::model::{word_count, CuratedFact, Entity, FeatureLabels, FeatureWeights, Task};
use crate::store::{FactStore, FormatError, StoreHeader, FORMAT_VERSION};

/// A raw, possibly multi-sentence fact as crawled and annotated upstream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateFact {
    pub id: String,
    pub raw_text: String,
    pub source_url: String,
    pub provider: String,
    /// One token list per sentence, in split order.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub token_annotations: Option<Vec<Vec<AnnotatedToken>>>,
    /// Applies to every sentence unless `sentence_embeddings` is given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embedding: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sentence_embeddings: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub annotator_labels: Option<FeatureLabels>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub overall_interesting: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct CandidateHeader {
    format_version: u32,
}

/// Reads a candidate file (header line + one candidate per line).
pub fn parse_candidates(text: &str) -> Result<Vec<CandidateFact>, FormatError> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or(FormatError::MissingHeader)?;
    let header: CandidateHeader =
        serde_json::from_str(header).map_err(|e| FormatError::BadHeader(e.to_string()))?;
    if header.format_version != FORMAT_VERSION {
        return Err(FormatError::UnsupportedVersion(header.format_version));
    }
    let mut out = Vec::new();
    for (ordinal, (i, line)) in lines.enumerate() {
        let de = &mut serde_json::Deserializer::from_str(line);
        let c: CandidateFact =
            serde_path_to_error::deserialize(de).map_err(|e| FormatError::Record {
                ordinal: ordinal + 1,
                line: i + 1,
                field: e.path().to_string(),
                message: e.into_inner().to_string(),
            })?;
        if c.raw_text.trim().is_empty() {
            return Err(FormatError::Record {
                ordinal: ordinal + 1,
                line: i + 1,
                field: "raw_text".into(),
                message: "must not be empty".into(),
            });
        }
        out.push(c);
    }
    Ok(out)
}

pub fn read_candidates(path: impl AsRef<Path>) -> Result<Vec<CandidateFact>, FormatError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| FormatError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_candidates(&text)
}

pub fn candidates_to_jsonl(candidates: &[CandidateFact]) -> String {
    let mut out = serde_json::to_string(&CandidateHeader {
        format_version: FORMAT_VERSION,
    })
    .expect("header serializes");
    out.push('\n');
    for c in candidates {
        out.push_str(&serde_json::to_string(c).expect("candidate serializes"));
        out.push('\n');
    }
    out
}

fn default_similarity() -> f64 {
    DEFAULT_SIMILARITY_THRESHOLD
}
fn default_relevance() -> f64 {
    0.2
}
fn default_interestingness() -> f64 {
    0.5
}
fn default_conciseness() -> usize {
    30
}
fn default_counts() -> ImportanceCounts {
    // Only the ranking (novelty > specificity > conciseness > informativeness)
    // is known; these counts reproduce it with weights 0.4/0.3/0.2/0.1.
    ImportanceCounts::new(4, 3, 2, 1)
}
fn default_abbreviations() -> Vec<String> {
    DEFAULT_ABBREVIATIONS.iter().map(|s| s.to_string()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurationConfig {
    #[serde(default = "default_similarity")]
    pub similarity_threshold: f64,
    #[serde(default = "default_relevance")]
    pub relevance_threshold: f64,
    #[serde(default = "default_interestingness")]
    pub interestingness_threshold: f64,
    #[serde(default = "default_conciseness")]
    pub conciseness_max_words: usize,
    #[serde(default = "default_counts")]
    pub importance_counts: ImportanceCounts,
    #[serde(default)]
    pub domain_lexicon: Vec<String>,
    #[serde(default)]
    pub stop_words: Vec<String>,
    #[serde(default = "default_abbreviations")]
    pub abbreviations: Vec<String>,
    /// Inter-annotator agreement per feature; carried into store metadata.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub annotator_agreement: BTreeMap<String, f64>,
    #[serde(default)]
    pub exec: Exec,
}

impl Default for CurationConfig {
    fn default() -> Self {
        Self {
            similarity_threshold: default_similarity(),
            relevance_threshold: default_relevance(),
            interestingness_threshold: default_interestingness(),
            conciseness_max_words: default_conciseness(),
            importance_counts: default_counts(),
            domain_lexicon: Vec::new(),
            stop_words: Vec::new(),
            abbreviations: default_abbreviations(),
            annotator_agreement: BTreeMap::new(),
            exec: Exec::default(),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("similarity_threshold {0} must be in (0, 1]")]
    Similarity(f64),
    #[error("{name} {value} must be in [0, 1]")]
    Threshold { name: &'static str, value: f64 },
    #[error("conciseness_max_words must be positive")]
    Conciseness,
    #[error("importance_counts must not all be zero")]
    Counts,
}

impl CurationConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.similarity_threshold > 0.0 && self.similarity_threshold <= 1.0) {
            return Err(ConfigError::Similarity(self.similarity_threshold));
        }
        for (name, value) in [
            ("relevance_threshold", self.relevance_threshold),
            ("interestingness_threshold", self.interestingness_threshold),
        ] {
            if !(0.0..=1.0).contains(&value) {
                return Err(ConfigError::Threshold { name, value });
            }
        }
        if self.conciseness_max_words == 0 {
            return Err(ConfigError::Conciseness);
        }
        if self.importance_counts.total() == 0 {
            return Err(ConfigError::Counts);
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum CurationError {
    #[error("invalid config: {0}")]
    Config(#[from] ConfigError),
    #[error("stage `{stage}` failed for candidate `{candidate}`: {message}")]
    Stage {
        stage: Stage,
        candidate: String,
        message: String,
    },
    #[error("stage `dedup` failed: {0}")]
    Dedup(#[from] DedupError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Split,
    Relevance,
    Entity,
    Labels,
    Score,
    Dedup,
    Link,
}

impl std::fmt::Display for Stage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = serde_json::to_value(self).expect("stage serializes");
        f.write_str(s.as_str().unwrap_or("?"))
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PipelineReport {
    pub candidates_in: usize,
    /// Items flowing through the per-sentence stages after splitting.
    pub sentences_in: usize,
    pub relevance_dropped: usize,
    pub entity_dropped: usize,
    /// Labelled irrelevant by annotators despite passing the relevance gate.
    pub label_irrelevant_dropped: usize,
    pub quarantined: usize,
    pub interestingness_dropped: usize,
    pub dedup_dropped: usize,
    /// Stored facts that had no embedding and so were not dedup-checked.
    pub dedup_unchecked: usize,
    pub stored: usize,
    pub unlinked: usize,
    pub similarity_threshold: f64,
    pub relevance_threshold: f64,
    pub interestingness_threshold: f64,
    pub conciseness_max_words: usize,
    pub weights: Option<FeatureWeights>,
}

impl PipelineReport {
    pub fn dropped(&self) -> usize {
        self.relevance_dropped
            + self.entity_dropped
            + self.label_irrelevant_dropped
            + self.interestingness_dropped
            + self.dedup_dropped
    }

    /// Every sentence is accounted for exactly once.
    pub fn is_conserved(&self) -> bool {
        self.sentences_in == self.stored + self.dropped() + self.quarantined
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuarantinedSentence {
    pub id: String,
    pub text: String,
    pub entity: Entity,
    pub missing: Vec<String>,
}

/// Survivors after one stage, for `--dump-stages`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageDump {
    pub stage: Stage,
    pub records: Vec<StageRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub id: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relevance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entity: Option<Entity>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub store: FactStore,
    pub report: PipelineReport,
    pub quarantined: Vec<QuarantinedSentence>,
    pub dumps: Vec<StageDump>,
}

enum Outcome {
    Relevance,
    Entity,
    LabelIrrelevant,
    Quarantined(QuarantinedSentence),
    Interestingness,
    Scored(CuratedFact),
}

struct Traced {
    outcome: Outcome,
    record: StageRecord,
}

struct Ctx<'a> {
    config: &'a CurationConfig,
    weights: FeatureWeights,
    splitter: SentenceSplitter,
    scorer: Option<LexiconScorer>,
    matcher: EntityMatcher,
    external: &'a ExternalAnnotations,
}

impl Ctx<'_> {
    fn stage_err(stage: Stage, candidate: &CandidateFact, message: impl ToString) -> CurationError {
        CurationError::Stage {
            stage,
            candidate: candidate.id.clone(),
            message: message.to_string(),
        }
    }

    fn process(&self, c: &CandidateFact) -> Result<Vec<Traced>, CurationError> {
        let sentences = self.splitter.split(&c.raw_text);
        if sentences.is_empty() {
            return Err(Self::stage_err(Stage::Split, c, "no sentences"));
        }
        let multi = sentences.len() > 1;
        sentences
            .into_iter()
            .enumerate()
            .map(|(i, text)| {
                let id = if multi { format!("{}.{}", c.id, i) } else { c.id.clone() };
                self.process_sentence(c, i, id, text)
            })
            .collect()
    }

    fn process_sentence(
        &self,
        c: &CandidateFact,
        i: usize,
        id: String,
        text: String,
    ) -> Result<Traced, CurationError> {
        let mut record = StageRecord {
            id: id.clone(),
            text: text.clone(),
            relevance: None,
            entity: None,
            score: None,
        };
        let done = |outcome, record| Ok(Traced { outcome, record });

        let relevance = match self.external.relevance(&c.id, i) {
            Some(score) => score,
            None => match &self.scorer {
                Some(scorer) => scorer
                    .score(&text)
                    .map_err(|e| Self::stage_err(Stage::Relevance, c, e))?,
                None => {
                    return Err(Self::stage_err(
                        Stage::Relevance,
                        c,
                        RelevanceError::EmptyLexicon,
                    ))
                }
            },
        };
        record.relevance = Some(relevance);
        if relevance < self.config.relevance_threshold {
            return done(Outcome::Relevance, record);
        }

        let tokens = c.token_annotations.as_ref().and_then(|per| per.get(i));
        let Some(entity) = tokens.and_then(|t| self.matcher.find(t)).cloned() else {
            return done(Outcome::Entity, record);
        };
        record.entity = Some(entity.clone());

        let mut partial = c
            .annotator_labels
            .as_ref()
            .map(PartialLabels::from_full)
            .unwrap_or_default();
        if let Some(ext) = self.external.labels(&c.id, i) {
            partial = partial.overlay(&ext);
        }
        if partial.conciseness.is_none() {
            partial.conciseness = Some(u8::from(word_count(&text) <= self.config.conciseness_max_words));
        }
        // Reaching this point means the relevance gate was passed.
        if partial.relevance.is_none() {
            partial.relevance = Some(1);
        }
        let Some(labels) = partial.complete() else {
            let mut missing = Vec::new();
            if partial.novelty.is_none() {
                missing.push("novelty".to_string());
            }
            if partial.specificity.is_none() {
                missing.push("specificity".to_string());
            }
            if partial.informativeness.is_none() {
                missing.push("informativeness".to_string());
            }
            return done(
                Outcome::Quarantined(QuarantinedSentence {
                    id,
                    text,
                    entity,
                    missing,
                }),
                record,
            );
        };
        if labels.relevance == 0 {
            return done(Outcome::LabelIrrelevant, record);
        }

        let score = score_interestingness(&labels, &self.weights).map_err(|e| match e {
            ScoringError::NonBinaryLabels => Self::stage_err(Stage::Labels, c, e),
            other => Self::stage_err(Stage::Score, c, other),
        })?;
        record.score = Some(score);
        if score < self.config.interestingness_threshold {
            return done(Outcome::Interestingness, record);
        }

        let embedding = c
            .sentence_embeddings
            .as_ref()
            .and_then(|per| per.get(i).cloned())
            .or_else(|| c.embedding.clone());
        done(
            Outcome::Scored(CuratedFact {
                id,
                text,
                entity,
                source_url: c.source_url.clone(),
                provider: c.provider.clone(),
                labels,
                score,
                embedding,
                linked_step_ids: Vec::new(),
                overall_interesting: c.overall_interesting,
            }),
            record,
        )
    }
}

/// Runs every stage. `collect_dumps` keeps per-stage survivor lists.
pub fn run_pipeline(
    candidates: &[CandidateFact],
    config: &CurationConfig,
    corpus: &[Task],
    external: &ExternalAnnotations,
    collect_dumps: bool,
) -> Result<PipelineOutput, CurationError> {
    config.validate()?;
    let weights = compute_feature_weights(&config.importance_counts)
        .map_err(|_| ConfigError::Counts)?;
    let entities: BTreeSet<&Entity> = corpus
        .iter()
        .flat_map(|t| t.steps.iter().flat_map(|s| s.entities.iter()))
        .collect();
    let scorer = LexiconScorer::new(&config.domain_lexicon, &config.stop_words).ok();
    let ctx = Ctx {
        config,
        weights,
        splitter: SentenceSplitter::with_abbreviations(&config.abbreviations),
        scorer,
        matcher: EntityMatcher::new(entities),
        external,
    };

    let per_candidate = config.exec.map(candidates, |c| ctx.process(c));
    let mut traced = Vec::new();
    for r in per_candidate {
        traced.extend(r?);
    }

    let mut report = PipelineReport {
        candidates_in: candidates.len(),
        sentences_in: traced.len(),
        similarity_threshold: config.similarity_threshold,
        relevance_threshold: config.relevance_threshold,
        interestingness_threshold: config.interestingness_threshold,
        conciseness_max_words: config.conciseness_max_words,
        weights: Some(weights),
        ..Default::default()
    };

    let mut dumps: Vec<StageDump> = Vec::new();
    if collect_dumps {
        let split = traced
            .iter()
            .map(|t| StageRecord {
                relevance: None,
                entity: None,
                score: None,
                ..t.record.clone()
            })
            .collect();
        dumps.push(StageDump {
            stage: Stage::Split,
            records: split,
        });
        let survivors = |pred: &dyn Fn(&Outcome) -> bool| -> Vec<StageRecord> {
            traced
                .iter()
                .filter(|t| pred(&t.outcome))
                .map(|t| t.record.clone())
                .collect()
        };
        dumps.push(StageDump {
            stage: Stage::Relevance,
            records: survivors(&|o| !matches!(o, Outcome::Relevance)),
        });
        dumps.push(StageDump {
            stage: Stage::Entity,
            records: survivors(&|o| !matches!(o, Outcome::Relevance | Outcome::Entity)),
        });
        dumps.push(StageDump {
            stage: Stage::Labels,
            records: survivors(&|o| {
                matches!(o, Outcome::Interestingness | Outcome::Scored(_))
            }),
        });
        dumps.push(StageDump {
            stage: Stage::Score,
            records: survivors(&|o| matches!(o, Outcome::Scored(_))),
        });
    }

    let mut scored = Vec::new();
    let mut quarantined = Vec::new();
    for t in traced {
        match t.outcome {
            Outcome::Relevance => report.relevance_dropped += 1,
            Outcome::Entity => report.entity_dropped += 1,
            Outcome::LabelIrrelevant => report.label_irrelevant_dropped += 1,
            Outcome::Interestingness => report.interestingness_dropped += 1,
            Outcome::Quarantined(q) => {
                report.quarantined += 1;
                quarantined.push(q);
            }
            Outcome::Scored(f) => scored.push(f),
        }
    }

    // Facts without embeddings cannot be compared; they pass through.
    let (with_emb, without_emb): (Vec<CuratedFact>, Vec<CuratedFact>) =
        scored.into_iter().partition(|f| f.embedding.is_some());
    let kept = dedup_indices(&with_emb, config.similarity_threshold, config.exec)?;
    report.dedup_dropped = with_emb.len() - kept.len();
    report.dedup_unchecked = without_emb.len();
    let kept: BTreeSet<usize> = kept.into_iter().collect();
    let mut facts: Vec<CuratedFact> = with_emb
        .into_iter()
        .enumerate()
        .filter(|(i, _)| kept.contains(i))
        .map(|(_, f)| f)
        .chain(without_emb)
        .collect();
    facts.sort_by(CuratedFact::rank_cmp);

    if collect_dumps {
        dumps.push(StageDump {
            stage: Stage::Dedup,
            records: facts.iter().map(fact_record).collect(),
        });
    }

    link_facts_to_steps(&mut facts, corpus);
    report.unlinked = facts.iter().filter(|f| f.linked_step_ids.is_empty()).count();
    report.stored = facts.len();

    if collect_dumps {
        dumps.push(StageDump {
            stage: Stage::Link,
            records: facts.iter().map(fact_record).collect(),
        });
    }

    let embedding_dim = facts
        .iter()
        .find_map(|f| f.embedding.as_ref().map(Vec::len));
    let mut header = StoreHeader::new(weights, embedding_dim);
    header.metadata.insert(
        "curation".into(),
        serde_json::json!({
            "similarity_threshold": config.similarity_threshold,
            "relevance_threshold": config.relevance_threshold,
            "interestingness_threshold": config.interestingness_threshold,
            "conciseness_max_words": config.conciseness_max_words,
            "importance_counts": config.importance_counts,
        }),
    );
    if !config.annotator_agreement.is_empty() {
        header.metadata.insert(
            "annotator_agreement".into(),
            serde_json::to_value(&config.annotator_agreement).expect("map serializes"),
        );
    }

    Ok(PipelineOutput {
        store: FactStore::new(header, facts),
        report,
        quarantined,
        dumps,
    })
}

fn fact_record(f: &CuratedFact) -> StageRecord {
    StageRecord {
        id: f.id.clone(),
        text: f.text.clone(),
        relevance: None,
        entity: Some(f.entity.clone()),
        score: Some(f.score),
    }
}
