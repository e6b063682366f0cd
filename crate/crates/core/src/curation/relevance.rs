//! Domain-relevance scoring.
//!
//! The default scorer is lexical overlap against a domain lexicon. A trained
//! classifier's outputs can be supplied instead through
//! [`ExternalAnnotations`](super::external::ExternalAnnotations), which take
//! precedence when present.

use std::collections::HashSet;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RelevanceError {
    #[error("cannot score an empty sentence")]
    EmptySentence,
    #[error("domain lexicon is empty")]
    EmptyLexicon,
}

/// Lowercased tokens with surrounding punctuation removed.
pub fn tokenize(sentence: &str) -> Vec<String> {
    sentence
        .split_whitespace()
        .map(|t| {
            t.trim_matches(|c: char| !c.is_alphanumeric())
                .to_lowercase()
        })
        .filter(|t| !t.is_empty())
        .collect()
}

/// Fraction of (non-stop-word) tokens that appear in the lexicon.
pub fn score_relevance(sentence: &str, lexicon: &HashSet<String>) -> Result<f64, RelevanceError> {
    LexiconScorer::new(lexicon.iter().cloned(), std::iter::empty::<String>())?.score(sentence)
}

#[derive(Debug, Clone)]
pub struct LexiconScorer {
    lexicon: HashSet<String>,
    stop_words: HashSet<String>,
}

impl LexiconScorer {
    pub fn new<L, S>(lexicon: L, stop_words: S) -> Result<Self, RelevanceError>
    where
        L: IntoIterator,
        L::Item: AsRef<str>,
        S: IntoIterator,
        S::Item: AsRef<str>,
    {
        let lexicon: HashSet<String> = lexicon
            .into_iter()
            .map(|t| t.as_ref().trim().to_lowercase())
            .filter(|t| !t.is_empty())
            .collect();
        if lexicon.is_empty() {
            return Err(RelevanceError::EmptyLexicon);
        }
        let stop_words = stop_words
            .into_iter()
            .map(|t| t.as_ref().trim().to_lowercase())
            .collect();
        Ok(Self {
            lexicon,
            stop_words,
        })
    }

    pub fn score(&self, sentence: &str) -> Result<f64, RelevanceError> {
        let tokens = tokenize(sentence);
        if tokens.is_empty() {
            return Err(RelevanceError::EmptySentence);
        }
        let content: Vec<&String> = tokens
            .iter()
            .filter(|t| !self.stop_words.contains(*t))
            .collect();
        if content.is_empty() {
            return Ok(0.0);
        }
        let hits = content.iter().filter(|t| self.lexicon.contains(**t)).count();
        Ok(hits as f64 / content.len() as f64)
    }
}
