//! Turning raw candidate facts into a curated, deduplicated, step-linked store.

pub mod dedup;
pub mod entity_match;
pub mod external;
pub mod linking;
pub mod pipeline;
pub mod relevance;
pub mod scoring;
pub mod sentences;

pub use dedup::{cosine, dedup_facts, DedupError, DEFAULT_SIMILARITY_THRESHOLD};
pub use entity_match::{match_entity, AnnotatedToken, EntityMatcher, Role};
pub use external::{ExternalAnnotations, ExternalRecord, PartialLabels};
pub use linking::link_facts_to_steps;
pub use pipeline::{
    candidates_to_jsonl, parse_candidates, read_candidates, run_pipeline, CandidateFact, CurationConfig, CurationError,
    PipelineOutput, PipelineReport, Stage,
};
pub use relevance::{score_relevance, LexiconScorer, RelevanceError};
pub use scoring::{compute_feature_weights, score_interestingness, ImportanceCounts, ScoringError};
pub use sentences::{split_sentences, SentenceSplitter};
