//! Flat-file formats for the fact store and task corpus, plus store
//! validation and summary statistics.
//!
//! Both formats are line-delimited JSON. The first line is a header carrying
//! `format_version: 1`; every following non-blank line is one record.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{word_count, CuratedFact, FeatureWeights, ModelError, Task};

pub const FORMAT_VERSION: u32 = 1;

/// Allowed gap between a stored score and its recomputed weighted sum.
pub const SCORE_TOLERANCE: f64 = 1e-6;

pub const MIN_FACT_WORDS: usize = 3;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("missing header line")]
    MissingHeader,
    #[error("bad header: {0}")]
    BadHeader(String),
    #[error("unsupported format_version {0}")]
    UnsupportedVersion(u32),
    #[error("record {ordinal} (line {line}), field `{field}`: {message}")]
    Record {
        ordinal: usize,
        line: usize,
        field: String,
        message: String,
    },
    #[error("invalid corpus: {0}")]
    Corpus(#[from] ModelError),
    #[error("duplicate task id `{0}`")]
    DuplicateTask(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoreHeader {
    pub format_version: u32,
    #[serde(default)]
    pub embedding_dim: Option<usize>,
    pub weights: FeatureWeights,
    /// Free-form provenance (thresholds used, annotator agreement, ...).
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub metadata: BTreeMap<String, serde_json::Value>,
}

impl StoreHeader {
    pub fn new(weights: FeatureWeights, embedding_dim: Option<usize>) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            embedding_dim,
            weights,
            metadata: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct CorpusHeader {
    format_version: u32,
}

fn read_file(path: &Path) -> Result<String, FormatError> {
    fs::read_to_string(path).map_err(|source| FormatError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn write_file(path: &Path, body: &str) -> Result<(), FormatError> {
    fs::write(path, body).map_err(|source| FormatError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Splits a document into its header and numbered record lines.
fn split_records(text: &str) -> Result<(&str, Vec<(usize, &str)>), FormatError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or(FormatError::MissingHeader)?;
    Ok((header, lines.collect()))
}

fn parse_record<T: DeserializeOwned>(ordinal: usize, line: usize, raw: &str) -> Result<T, FormatError> {
    let de = &mut serde_json::Deserializer::from_str(raw);
    serde_path_to_error::deserialize(de).map_err(|err| {
        let path = err.path().to_string();
        FormatError::Record {
            ordinal,
            line,
            field: if path == "." { "<record>".into() } else { path },
            message: err.into_inner().to_string(),
        }
    })
}

fn check_version(version: u32) -> Result<(), FormatError> {
    if version != FORMAT_VERSION {
        return Err(FormatError::UnsupportedVersion(version));
    }
    Ok(())
}

/// A parsed fact store: header plus facts in file order.
#[derive(Debug, Clone, PartialEq)]
pub struct FactStore {
    pub header: StoreHeader,
    pub facts: Vec<CuratedFact>,
}

impl FactStore {
    pub fn new(header: StoreHeader, facts: Vec<CuratedFact>) -> Self {
        Self { header, facts }
    }

    pub fn parse(text: &str) -> Result<Self, FormatError> {
        let (header_line, records) = split_records(text)?;
        let header: StoreHeader = serde_json::from_str(header_line)
            .map_err(|e| FormatError::BadHeader(e.to_string()))?;
        check_version(header.format_version)?;
        let facts = records
            .into_iter()
            .enumerate()
            .map(|(i, (line, raw))| parse_record(i + 1, line, raw))
            .collect::<Result<Vec<CuratedFact>, _>>()?;
        Ok(Self { header, facts })
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self, FormatError> {
        Self::parse(&read_file(path.as_ref())?)
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = serde_json::to_string(&self.header).expect("header serializes");
        out.push('\n');
        for fact in &self.facts {
            out.push_str(&serde_json::to_string(fact).expect("fact serializes"));
            out.push('\n');
        }
        out
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<(), FormatError> {
        write_file(path.as_ref(), &self.to_jsonl())
    }

    /// Full validation including the header's declared embedding dimension.
    pub fn validate(&self) -> ValidationReport {
        let mut report = validate_store(&self.facts, &self.header.weights);
        if let Err(e) = self.header.weights.check() {
            report.violations.insert(
                0,
                Violation {
                    ordinal: 0,
                    fact_id: String::new(),
                    kind: ViolationKind::BadWeights,
                    detail: e.to_string(),
                },
            );
        }
        if let Some(dim) = self.header.embedding_dim {
            for (i, fact) in self.facts.iter().enumerate() {
                if let Some(emb) = &fact.embedding {
                    if emb.len() != dim {
                        report.violations.push(Violation {
                            ordinal: i + 1,
                            fact_id: fact.id.clone(),
                            kind: ViolationKind::EmbeddingDimension,
                            detail: format!("expected {dim}, found {}", emb.len()),
                        });
                    }
                }
            }
        }
        report
    }
}

/// The task corpus.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Corpus {
    pub tasks: Vec<Task>,
}

impl Corpus {
    pub fn new(tasks: Vec<Task>) -> Result<Self, FormatError> {
        let corpus = Self { tasks };
        corpus.validate()?;
        Ok(corpus)
    }

    pub fn validate(&self) -> Result<(), FormatError> {
        let mut seen = HashSet::new();
        for task in &self.tasks {
            task.validate()?;
            if !seen.insert(task.id.as_str()) {
                return Err(FormatError::DuplicateTask(task.id.clone()));
            }
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self, FormatError> {
        let (header_line, records) = split_records(text)?;
        let header: CorpusHeader = serde_json::from_str(header_line)
            .map_err(|e| FormatError::BadHeader(e.to_string()))?;
        check_version(header.format_version)?;
        let tasks = records
            .into_iter()
            .enumerate()
            .map(|(i, (line, raw))| parse_record(i + 1, line, raw))
            .collect::<Result<Vec<Task>, _>>()?;
        Self::new(tasks)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self, FormatError> {
        Self::parse(&read_file(path.as_ref())?)
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = serde_json::to_string(&CorpusHeader {
            format_version: FORMAT_VERSION,
        })
        .expect("header serializes");
        out.push('\n');
        for task in &self.tasks {
            out.push_str(&serde_json::to_string(task).expect("task serializes"));
            out.push('\n');
        }
        out
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<(), FormatError> {
        write_file(path.as_ref(), &self.to_jsonl())
    }

    pub fn task(&self, id: &str) -> Option<&Task> {
        self.tasks.iter().find(|t| t.id == id)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    BadLabelDomain,
    NotRelevant,
    MissingSource,
    MissingProvider,
    ScoreMismatch,
    ScoreOutOfRange,
    DuplicateId,
    TooShort,
    EntityNotNormalized,
    EmbeddingDimension,
    BadWeights,
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ViolationKind::BadLabelDomain => "bad label domain",
            ViolationKind::NotRelevant => "not relevant",
            ViolationKind::MissingSource => "missing source",
            ViolationKind::MissingProvider => "missing provider",
            ViolationKind::ScoreMismatch => "score mismatch",
            ViolationKind::ScoreOutOfRange => "score out of range",
            ViolationKind::DuplicateId => "duplicate id",
            ViolationKind::TooShort => "too short",
            ViolationKind::EntityNotNormalized => "entity not normalized",
            ViolationKind::EmbeddingDimension => "embedding dimension",
            ViolationKind::BadWeights => "bad weights",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    /// 1-based record number; 0 refers to the header.
    pub ordinal: usize,
    pub fact_id: String,
    pub kind: ViolationKind,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "record {} ({}): {}: {}",
            self.ordinal, self.fact_id, self.kind, self.detail
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub records: usize,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn count(&self, kind: ViolationKind) -> usize {
        self.violations.iter().filter(|v| v.kind == kind).count()
    }
}

/// Checks every per-record invariant of a curated store and lists each
/// violation found. A valid store yields an empty list.
pub fn validate_store(store: &[CuratedFact], weights: &FeatureWeights) -> ValidationReport {
    let mut violations = Vec::new();
    let mut seen = HashSet::new();
    let mut dim: Option<usize> = None;

    for (i, fact) in store.iter().enumerate() {
        let mut push = |kind, detail: String| {
            violations.push(Violation {
                ordinal: i + 1,
                fact_id: fact.id.clone(),
                kind,
                detail,
            })
        };

        if !seen.insert(fact.id.as_str()) {
            push(ViolationKind::DuplicateId, format!("id `{}` repeated", fact.id));
        }
        if fact.word_count() < MIN_FACT_WORDS {
            push(
                ViolationKind::TooShort,
                format!("{} words, need at least {MIN_FACT_WORDS}", fact.word_count()),
            );
        }
        if fact.source_url.trim().is_empty() {
            push(ViolationKind::MissingSource, "source_url is empty".into());
        }
        if fact.provider.trim().is_empty() {
            push(ViolationKind::MissingProvider, "provider is empty".into());
        }
        if !fact.entity.is_normalized() {
            push(
                ViolationKind::EntityNotNormalized,
                format!("`{}`", fact.entity.name),
            );
        }
        if !fact.labels.is_binary() {
            push(
                ViolationKind::BadLabelDomain,
                format!("{:?}", fact.labels),
            );
        } else {
            if !fact.labels.is_relevant() {
                push(ViolationKind::NotRelevant, "relevance label is 0".into());
            }
            let expected = weights.weighted_sum(&fact.labels);
            if (fact.score - expected).abs() > SCORE_TOLERANCE {
                push(
                    ViolationKind::ScoreMismatch,
                    format!("stored {} but labels give {expected}", fact.score),
                );
            }
        }
        if !(0.0..=1.0).contains(&fact.score) {
            push(ViolationKind::ScoreOutOfRange, format!("{}", fact.score));
        }
        if let Some(emb) = &fact.embedding {
            match dim {
                None => dim = Some(emb.len()),
                Some(d) if d != emb.len() => push(
                    ViolationKind::EmbeddingDimension,
                    format!("expected {d}, found {}", emb.len()),
                ),
                _ => {}
            }
        }
    }

    ValidationReport {
        records: store.len(),
        violations,
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StatsError {
    #[error("store is empty; mean fact length is undefined")]
    Empty,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoreStats {
    pub fact_count: usize,
    pub entity_count: usize,
    pub provider_count: usize,
    pub mean_words: f64,
    pub mean_words_rounded: u64,
}

impl StoreStats {
    /// Whether a reported (integer) mean length is consistent with the exact
    /// mean, reading the reported value as rounded: [m - 0.5, m + 0.5).
    pub fn mean_matches(&self, reported: u64) -> bool {
        let m = reported as f64;
        self.mean_words >= m - 0.5 && self.mean_words < m + 0.5
    }
}

/// Counts facts, distinct entities (by name and type), distinct providers and
/// the mean fact length in words.
pub fn store_stats(store: &[CuratedFact]) -> Result<StoreStats, StatsError> {
    if store.is_empty() {
        return Err(StatsError::Empty);
    }
    let entities: BTreeSet<_> = store.iter().map(|f| &f.entity).collect();
    let providers: BTreeSet<_> = store.iter().map(|f| f.provider.as_str()).collect();
    let total: usize = store.iter().map(|f| word_count(&f.text)).sum();
    let mean_words = total as f64 / store.len() as f64;
    Ok(StoreStats {
        fact_count: store.len(),
        entity_count: entities.len(),
        provider_count: providers.len(),
        mean_words,
        mean_words_rounded: mean_words.round() as u64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Entity, FeatureLabels};

    fn weights() -> FeatureWeights {
        FeatureWeights::new(0.4, 0.3, 0.2, 0.1).unwrap()
    }

    fn fact(id: &str, text: &str, labels: FeatureLabels) -> CuratedFact {
        CuratedFact {
            id: id.into(),
            text: text.into(),
            entity: Entity::ingredient("baking soda"),
            source_url: "https://tasty.co/article".into(),
            provider: "tasty.co".into(),
            labels,
            score: weights().weighted_sum(&labels),
            embedding: None,
            linked_step_ids: vec![],
            overall_interesting: None,
        }
    }

    fn labels(n: u8, s: u8, c: u8, i: u8) -> FeatureLabels {
        FeatureLabels {
            novelty: n,
            specificity: s,
            conciseness: c,
            informativeness: i,
            relevance: 1,
        }
    }

    #[test]
    fn two_well_formed_facts_are_valid() {
        let store = vec![
            fact("a", "Baking soda must be replaced every month.", labels(1, 1, 1, 1)),
            fact("b", "Baking soda also cleans ovens well.", labels(1, 0, 1, 0)),
        ];
        let report = validate_store(&store, &weights());
        assert!(report.is_valid(), "{:?}", report.violations);
        assert_eq!(report.records, 2);
    }

    #[test]
    fn score_mismatch_is_reported_once() {
        // labels give 0.4 + 0.3 = 0.7 but the record claims 0.9
        let mut f = fact("a", "Baking soda must be replaced monthly.", labels(1, 1, 0, 0));
        f.score = 0.9;
        let report = validate_store(&[f], &weights());
        assert_eq!(report.violations.len(), 1);
        assert_eq!(report.violations[0].kind, ViolationKind::ScoreMismatch);
        assert_eq!(report.violations[0].kind.to_string(), "score mismatch");
    }

    #[test]
    fn every_invariant_is_checked() {
        let mut bad_label = fact("a", "Baking soda is old.", labels(1, 1, 1, 1));
        bad_label.labels.novelty = 2;
        let mut no_source = fact("b", "Baking soda is alkaline.", labels(1, 1, 1, 1));
        no_source.source_url = " ".into();
        let dup = fact("b", "Baking soda reacts with acid.", labels(1, 1, 1, 1));
        let short = fact("c", "Baking soda.", labels(1, 1, 1, 1));
        let mut irrelevant = fact("d", "Baking soda was cheap once.", labels(0, 0, 0, 0));
        irrelevant.labels.relevance = 0;
        let report = validate_store(&[bad_label, no_source, dup, short, irrelevant], &weights());
        assert_eq!(report.count(ViolationKind::BadLabelDomain), 1);
        assert_eq!(report.count(ViolationKind::MissingSource), 1);
        assert_eq!(report.count(ViolationKind::DuplicateId), 1);
        assert_eq!(report.count(ViolationKind::TooShort), 1);
        assert_eq!(report.count(ViolationKind::NotRelevant), 1);
        assert_eq!(report.violations[2].ordinal, 3);
    }

    #[test]
    fn parse_error_names_record_and_field() {
        let text = format!(
            "{}\n{}\n{{\"id\":\"x\",\"text\":7}}\n",
            serde_json::to_string(&StoreHeader::new(weights(), None)).unwrap(),
            serde_json::to_string(&fact("a", "Baking soda is old stuff.", labels(1, 1, 1, 1))).unwrap()
        );
        match FactStore::parse(&text) {
            Err(FormatError::Record { ordinal, line, field, .. }) => {
                assert_eq!(ordinal, 2);
                assert_eq!(line, 3);
                assert_eq!(field, "text");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn header_version_is_enforced() {
        let mut header = StoreHeader::new(weights(), None);
        header.format_version = 2;
        let text = serde_json::to_string(&header).unwrap();
        assert!(matches!(
            FactStore::parse(&text),
            Err(FormatError::UnsupportedVersion(2))
        ));
        assert!(matches!(FactStore::parse("\n\n"), Err(FormatError::MissingHeader)));
    }

    #[test]
    fn declared_embedding_dimension_is_checked() {
        let mut f = fact("a", "Baking soda is very old.", labels(1, 1, 1, 1));
        f.embedding = Some(vec![1.0, 0.0]);
        let store = FactStore::new(StoreHeader::new(weights(), Some(3)), vec![f]);
        let report = store.validate();
        assert_eq!(report.count(ViolationKind::EmbeddingDimension), 1);
    }

    #[test]
    fn stats_mean_length() {
        let mk = |id: &str, n: usize| {
            let text = vec!["word"; n].join(" ");
            fact(id, &text, labels(1, 1, 1, 1))
        };
        let stats = store_stats(&[mk("a", 12), mk("b", 13), mk("c", 14)]).unwrap();
        assert_eq!(stats.mean_words, 13.0);
        assert_eq!(stats.mean_words_rounded, 13);
        assert!(stats.mean_matches(13));
        assert_eq!(stats.entity_count, 1);
        assert_eq!(stats.provider_count, 1);

        let single = store_stats(&[mk("a", 5)]).unwrap();
        assert_eq!(
            (single.fact_count, single.entity_count, single.provider_count),
            (1, 1, 1)
        );
        assert_eq!(store_stats(&[]), Err(StatsError::Empty));
    }

    #[test]
    fn mean_match_window_is_half_open() {
        let mut s = store_stats(&[fact("a", "one two three", labels(1, 1, 1, 1))]).unwrap();
        s.mean_words = 12.5;
        assert!(s.mean_matches(13));
        s.mean_words = 13.5;
        assert!(!s.mean_matches(13));
    }

    #[test]
    fn corpus_rejects_duplicate_ids() {
        let task = Task {
            id: "t".into(),
            title: "Toast".into(),
            steps: vec![crate::model::TaskStep {
                index: 0,
                text: "Toast bread.".into(),
                entities: vec![],
            }],
        };
        assert!(matches!(
            Corpus::new(vec![task.clone(), task]),
            Err(FormatError::DuplicateTask(_))
        ));
    }
}
