//! Bundled sample data: a small recipe corpus and a 50-fact store whose
//! first ten records are well-known published examples and the rest
//! synthetic.

use crate::policy::FactIndex;
use crate::store::{Corpus, FactStore};

pub const FACTS_JSONL: &str = include_str!("../fixtures/facts.jsonl");
pub const CORPUS_JSONL: &str = include_str!("../fixtures/corpus.jsonl");

pub fn fact_store() -> FactStore {
    FactStore::parse(FACTS_JSONL).expect("bundled fact store parses")
}

pub fn corpus() -> Corpus {
    Corpus::parse(CORPUS_JSONL).expect("bundled corpus parses")
}

pub fn fact_index() -> FactIndex {
    FactIndex::new(fact_store().facts)
}
