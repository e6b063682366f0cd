//! Conversational task assistance with curated interesting facts.
//!
//! * [`model`] and [`store`]: domain types and the flat-file fact store / task corpus.
//! * [`curation`]: the candidate-to-store pipeline (split, relevance, entity
//!   match, scoring, dedup, linking).
//! * [`policy`]: when a fact may be shown, offered, or followed by a feedback question.
//! * [`engine`]: the per-session search → execution state machine.
//! * [`sim`]: seeded simulated users and the A/B runner.

pub mod curation;
pub mod engine;
pub mod exec;
pub mod fixtures;
pub mod model;
pub mod policy;
pub mod sim;
pub mod store;

pub use exec::Exec;
pub use model::{
    word_count, CuratedFact, Entity, EntityType, Feature, FeatureLabels, FeatureWeights, StepRef,
    Task, TaskStep,
};
pub use store::{store_stats, validate_store, Corpus, FactStore, StoreStats, ValidationReport};
