//! Keyword intent rules. Deterministic, phase-aware, no model involved.

use serde::{Deserialize, Serialize};

use super::session::{SearchResult, SessionPhase};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Intent {
    Search(String),
    /// Task id of the chosen search result.
    Select(String),
    NextStep,
    Yes,
    No,
    FeedbackAnswer(bool),
    Rate(u8),
    Exit,
    Other,
}

const EXIT: &[&str] = &["stop", "exit", "quit", "cancel", "bye", "goodbye"];
const SEARCH_PREFIXES: &[&str] = &[
    "search for ",
    "search ",
    "find me ",
    "find ",
    "show me ",
    "look for ",
    "look up ",
];
const LEADING_FILLER: &[&str] = &["a", "an", "the", "some", "for", "me"];
const NEXT: &[&str] = &[
    "next",
    "next step",
    "continue",
    "go on",
    "keep going",
    "what's next",
    "whats next",
    "ok next",
    "okay next",
    "done",
];
const YES_WORDS: &[&str] = &[
    "yes",
    "yeah",
    "yep",
    "yup",
    "sure",
    "ok",
    "okay",
    "absolutely",
    "definitely",
    "certainly",
];
const YES_PHRASES: &[&str] = &[
    "of course",
    "i did",
    "i liked it",
    "i loved it",
    "loved it",
    "liked it",
    "sounds good",
    "go ahead",
    "tell me",
    "please",
];
const NO_WORDS: &[&str] = &["no", "nope", "nah", "skip"];
const NO_PHRASES: &[&str] = &[
    "not really",
    "i didn't",
    "i did not",
    "not interested",
    "didn't like it",
    "i didn't like it",
];
const ORDINALS: &[(&str, usize)] = &[
    ("1", 1),
    ("2", 2),
    ("3", 3),
    ("first", 1),
    ("second", 2),
    ("third", 3),
    ("one", 1),
    ("two", 2),
    ("three", 3),
    ("1st", 1),
    ("2nd", 2),
    ("3rd", 3),
];
const RATINGS: &[(&str, u8)] = &[
    ("1", 1),
    ("2", 2),
    ("3", 3),
    ("4", 4),
    ("5", 5),
    ("one", 1),
    ("two", 2),
    ("three", 3),
    ("four", 4),
    ("five", 5),
];

fn normalize(utterance: &str) -> String {
    utterance
        .trim()
        .to_lowercase()
        .trim_end_matches(['.', '!', '?', ','])
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
}

fn tokens(text: &str) -> Vec<&str> {
    text.split(|c: char| c.is_whitespace() || matches!(c, ',' | '.' | '!' | '?'))
        .filter(|t| !t.is_empty())
        .collect()
}

fn strip_leading_filler(mut query: &str) -> &str {
    loop {
        let before = query;
        for f in LEADING_FILLER {
            if let Some(rest) = query.strip_prefix(f).and_then(|r| r.strip_prefix(' ')) {
                query = rest.trim_start();
            }
        }
        if before == query {
            return query;
        }
    }
}

fn is_yes(text: &str, first: &str) -> bool {
    YES_WORDS.contains(&first) || YES_PHRASES.iter().any(|p| text == *p || text.starts_with(&format!("{p} ")))
}

fn is_no(text: &str, first: &str) -> bool {
    NO_WORDS.contains(&first) || NO_PHRASES.iter().any(|p| text == *p || text.starts_with(&format!("{p} ")))
}

fn select_from_results(text: &str, toks: &[&str], results: &[SearchResult]) -> Option<String> {
    for t in toks {
        if let Some((_, n)) = ORDINALS.iter().find(|(w, _)| w == t) {
            return results.get(n - 1).map(|r| r.task_id.clone());
        }
    }
    results
        .iter()
        .find(|r| {
            let title = r.title.to_lowercase();
            text.contains(&title) || (text.len() >= 4 && title.contains(text))
        })
        .map(|r| r.task_id.clone())
}

/// Maps an utterance to an intent. `results` are the search results on
/// screen (used for ordinal or title selection).
pub fn parse_intent(utterance: &str, phase: SessionPhase, results: &[SearchResult]) -> Intent {
    let text = normalize(utterance);
    if text.is_empty() {
        return Intent::Other;
    }
    let toks = tokens(&text);
    let first = toks.first().copied().unwrap_or("");

    if EXIT.contains(&text.as_str()) || (EXIT.contains(&first) && toks.len() <= 3) {
        return Intent::Exit;
    }

    if phase == SessionPhase::AwaitingRating {
        for t in &toks {
            if let Some((_, n)) = RATINGS.iter().find(|(w, _)| w == t) {
                return Intent::Rate(*n);
            }
        }
    }

    for prefix in SEARCH_PREFIXES {
        if let Some(rest) = text.strip_prefix(prefix) {
            let query = strip_leading_filler(rest.trim());
            if !query.is_empty() {
                return Intent::Search(query.to_string());
            }
        }
    }

    if phase == SessionPhase::Searching && !results.is_empty() {
        if let Some(task) = select_from_results(&text, &toks, results) {
            return Intent::Select(task);
        }
    }

    if NEXT.contains(&text.as_str()) || first == "next" {
        return Intent::NextStep;
    }

    let feedback = phase == SessionPhase::AwaitingFeedback;
    if is_no(&text, first) {
        return if feedback { Intent::FeedbackAnswer(false) } else { Intent::No };
    }
    if is_yes(&text, first) {
        return if feedback { Intent::FeedbackAnswer(true) } else { Intent::Yes };
    }
    Intent::Other
}
